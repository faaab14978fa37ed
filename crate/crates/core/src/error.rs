use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "{operation}: omega = {omega:e} rad/s is within the regulator of a pole at {pole:e} rad/s"
    )]
    NearPole {
        operation: &'static str,
        omega: f64,
        pole: f64,
    },

    #[error("{operation}: integral did not converge (best |value| = {best:e}, err = {err:e} after {evaluations} evaluations)")]
    NotConverged {
        operation: &'static str,
        best: f64,
        err: f64,
        evaluations: usize,
    },

    #[error("{operation}: divergence ({detail})")]
    Divergence {
        operation: &'static str,
        detail: String,
    },

    #[error("stack contains an amplifying medium at omega = {omega:e} rad/s; gain stacks must be enabled explicitly")]
    GainInStack { omega: f64 },

    #[error("probe region above the stack must be vacuum")]
    ProbeNotVacuum,
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::Divergence { .. } | Error::NearPole { .. }
        )
    }
}
