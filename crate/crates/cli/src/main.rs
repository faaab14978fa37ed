//! `casimir-gain`: JSON scenario in, CSV on standard output, optional
//! JSON manifest.
//!
//! Exit status: 0 success, 1 bad input, 2 numerical failure. No CSV is
//! written unless every row succeeded.

mod error;
mod output;
mod scenario;
mod tasks;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use casimir_gain::json::{self, AtomDoc, MaterialDoc, MaterialRef, StackDoc};
use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::output::{InputRecord, Manifest};
use crate::scenario::{AtomRef, ScenarioDoc, SlabDoc, Spacing, StackRef, SweepDoc, Task, Variable};

#[derive(Parser, Debug)]
#[command(
    name = "casimir-gain",
    version,
    about = "Casimir and Casimir-Polder forces with gain media"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Permittivity of one material along a frequency sweep.
    Material(Common),
    /// Scattering Green tensor trace along a height or frequency sweep.
    Green(Common),
    /// Casimir-Polder potential and force on an atom along a height sweep.
    Cp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: CpArgs,
    },
    /// Slab or plate forces.
    Force {
        #[command(subcommand)]
        kind: ForceKind,
    },
    /// Same as `force slab`.
    ForceSlab {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SlabArgs,
    },
    /// Same as `force plates`.
    ForcePlates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: PlatesArgs,
    },
    /// Macroscopic versus atom-sum slab force.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SlabArgs,
    },
}

#[derive(Subcommand, Debug)]
enum ForceKind {
    /// Force per area on a dilute atomic slab above a stack, versus slab height.
    Slab {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SlabArgs,
    },
    /// Lifshitz pressure between two half-spaces, versus gap.
    Plates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: PlatesArgs,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Relative tolerance of every integral.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance of every integral.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Maximum number of adaptive subintervals.
    #[arg(long)]
    max_subdiv: Option<usize>,
    /// Write the run manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Permit amplifying media inside stacks at real frequencies.
    #[arg(long)]
    allow_gain_stack: bool,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    /// Number of sweep points.
    #[arg(long)]
    points: Option<usize>,
    /// Point spacing; direct sweeps default to log.
    #[arg(long, value_parser = parse_spacing)]
    spacing: Option<Spacing>,
}

#[derive(Args, Debug, Default)]
struct CpArgs {
    /// Atom JSON file.
    #[arg(long)]
    atom: Option<PathBuf>,
    /// Stack JSON file.
    #[arg(long)]
    stack: Option<PathBuf>,
    /// m
    #[arg(long)]
    z_min: Option<f64>,
    /// m
    #[arg(long)]
    z_max: Option<f64>,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Temperature in kelvin; applies to the nonresonant part.
    #[arg(long)]
    temp: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SlabArgs {
    /// Atom JSON file.
    #[arg(long)]
    atom: Option<PathBuf>,
    /// Stack JSON file.
    #[arg(long)]
    stack: Option<PathBuf>,
    /// Number density, 1/m^3.
    #[arg(long)]
    eta: Option<f64>,
    /// Slab thickness, m.
    #[arg(long)]
    thickness: Option<f64>,
    /// Panels of the slab volume integral.
    #[arg(long)]
    n_layers: Option<usize>,
    /// Lowest slab bottom height, m.
    #[arg(long)]
    z_min: Option<f64>,
    /// Highest slab bottom height, m.
    #[arg(long)]
    z_max: Option<f64>,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args, Debug, Default)]
struct PlatesArgs {
    /// Material JSON file of the first plate.
    #[arg(long)]
    mat_a: Option<PathBuf>,
    /// Material JSON file of the second plate.
    #[arg(long)]
    mat_b: Option<PathBuf>,
    /// m
    #[arg(long)]
    gap_min: Option<f64>,
    /// m
    #[arg(long)]
    gap_max: Option<f64>,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Temperature in kelvin.
    #[arg(long)]
    temp: Option<f64>,
}

fn parse_spacing(s: &str) -> Result<Spacing, String> {
    match s {
        "log" => Ok(Spacing::Log),
        "linear" => Ok(Spacing::Linear),
        _ => Err(format!("expected log or linear, got {s}")),
    }
}

/// Input files read so far, hashed for the manifest.
#[derive(Default)]
struct Inputs {
    records: Vec<InputRecord>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        self.records.push(InputRecord::new(path, &bytes));
        String::from_utf8(bytes).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
    }

    fn parse<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T, CliError> {
        let text = self.read(path)?;
        json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
    }
}

fn override_sweep(
    doc: &mut ScenarioDoc,
    variable: Variable,
    min: Option<f64>,
    max: Option<f64>,
    args: &SweepArgs,
) -> Result<(), CliError> {
    let any = min.is_some() || max.is_some() || args.points.is_some() || args.spacing.is_some();
    if !any {
        return Ok(());
    }
    let sweep = match doc.sweep.take() {
        Some(mut s) => {
            s.min = min.unwrap_or(s.min);
            s.max = max.unwrap_or(s.max);
            s.points = args.points.unwrap_or(s.points);
            s.spacing = args.spacing.unwrap_or(s.spacing);
            s
        }
        None => {
            let (Some(min), Some(max), Some(points)) = (min, max, args.points) else {
                return Err(CliError::schema(
                    "sweep: without a scenario sweep the range flags and --points are all required",
                ));
            };
            SweepDoc {
                variable,
                min,
                max,
                points,
                spacing: args.spacing.unwrap_or(Spacing::Log),
                unit: Default::default(),
            }
        }
    };
    doc.sweep = Some(sweep);
    Ok(())
}

fn apply_slab(doc: &mut ScenarioDoc, args: &SlabArgs, inputs: &mut Inputs) -> Result<(), CliError> {
    if let Some(p) = &args.atom {
        doc.atom = Some(AtomRef::Inline(inputs.parse::<AtomDoc>(p)?));
    }
    if let Some(p) = &args.stack {
        doc.stack = Some(StackRef::Inline(Box::new(inputs.parse::<StackDoc>(p)?)));
    }
    if args.eta.is_some() || args.thickness.is_some() || args.n_layers.is_some() {
        let slab = match doc.slab.take() {
            Some(mut s) => {
                s.eta = args.eta.unwrap_or(s.eta);
                if let Some(d) = args.thickness {
                    s.thickness = Some(d);
                    s.z_hi = None;
                }
                s.n_layers = args.n_layers.unwrap_or(s.n_layers);
                s
            }
            None => SlabDoc {
                eta: args
                    .eta
                    .ok_or_else(|| CliError::schema("slab.eta: --eta is required"))?,
                z_lo: None,
                z_hi: None,
                thickness: args.thickness,
                n_layers: args.n_layers.unwrap_or(16),
            },
        };
        doc.slab = Some(slab);
    }
    override_sweep(doc, Variable::Z, args.z_min, args.z_max, &args.sweep)
}

fn load(task: Task, common: &Common, inputs: &mut Inputs) -> Result<ScenarioDoc, CliError> {
    let mut doc = match &common.scenario {
        Some(p) => {
            let text = inputs.read(p)?;
            ScenarioDoc::parse(&text)
                .map_err(|e| CliError::schema(format!("{}: {e}", p.display())))?
        }
        None => ScenarioDoc::default(),
    };
    if doc.task.is_none() && common.scenario.is_some() {
        log::debug!("scenario has no task field; running {}", task.name());
    }
    let t = &mut doc.tolerances;
    t.rel_tol = common.rel_tol.or(t.rel_tol);
    t.abs_tol = common.abs_tol.or(t.abs_tol);
    t.max_subdivisions = common.max_subdiv.or(t.max_subdivisions);
    Ok(doc)
}

fn execute(command: Command) -> Result<(), CliError> {
    let mut inputs = Inputs::default();
    let (task, common, doc) = match command {
        Command::Material(common) => {
            let doc = load(Task::Material, &common, &mut inputs)?;
            (Task::Material, common, doc)
        }
        Command::Green(common) => {
            let doc = load(Task::Green, &common, &mut inputs)?;
            (Task::Green, common, doc)
        }
        Command::Cp { common, args } => {
            let mut doc = load(Task::Cp, &common, &mut inputs)?;
            if let Some(p) = &args.atom {
                doc.atom = Some(AtomRef::Inline(inputs.parse::<AtomDoc>(p)?));
            }
            if let Some(p) = &args.stack {
                doc.stack = Some(StackRef::Inline(Box::new(inputs.parse::<StackDoc>(p)?)));
            }
            override_sweep(&mut doc, Variable::Z, args.z_min, args.z_max, &args.sweep)?;
            doc.temperature = args.temp.or(doc.temperature);
            (Task::Cp, common, doc)
        }
        Command::Force {
            kind: ForceKind::Slab { common, args },
        }
        | Command::ForceSlab { common, args } => {
            let mut doc = load(Task::ForceSlab, &common, &mut inputs)?;
            apply_slab(&mut doc, &args, &mut inputs)?;
            (Task::ForceSlab, common, doc)
        }
        Command::Check { common, args } => {
            let mut doc = load(Task::Check, &common, &mut inputs)?;
            apply_slab(&mut doc, &args, &mut inputs)?;
            (Task::Check, common, doc)
        }
        Command::Force {
            kind: ForceKind::Plates { common, args },
        }
        | Command::ForcePlates { common, args } => {
            let mut doc = load(Task::ForcePlates, &common, &mut inputs)?;
            let a = args
                .mat_a
                .as_ref()
                .map(|p| inputs.parse::<MaterialDoc>(p))
                .transpose()?;
            let b = args
                .mat_b
                .as_ref()
                .map(|p| inputs.parse::<MaterialDoc>(p))
                .transpose()?;
            if a.is_some() || b.is_some() {
                let old = doc.plates.take();
                let pick = |new: Option<MaterialDoc>, old: Option<MaterialRef>, flag: &str| {
                    new.map(MaterialRef::Inline)
                        .or(old)
                        .ok_or_else(|| CliError::schema(format!("plates: {flag} is required")))
                };
                let (old_a, old_b) = match old {
                    Some(p) => (Some(p.a), Some(p.b)),
                    None => (None, None),
                };
                doc.plates = Some(scenario::PlatesDoc {
                    a: pick(a, old_a, "--mat-a")?,
                    b: pick(b, old_b, "--mat-b")?,
                });
            }
            override_sweep(
                &mut doc,
                Variable::Gap,
                args.gap_min,
                args.gap_max,
                &args.sweep,
            )?;
            doc.temperature = args.temp.or(doc.temperature);
            (Task::ForcePlates, common, doc)
        }
    };

    let scenario = doc.resolve(task, common.allow_gain_stack)?;
    let table = tasks::run(&scenario)?;
    let csv = output::csv(&table);

    if let Some(path) = &common.out {
        let manifest = Manifest {
            tool: "casimir-gain",
            version: env!("CARGO_PKG_VERSION"),
            library_version: casimir_gain::VERSION,
            task: task.name(),
            inputs: &inputs.records,
            tolerances: scenario.quad,
            temperature: scenario.temperature,
            allow_gain_stack: common.allow_gain_stack,
            sweep: scenario.sweep.as_ref(),
            columns: &table.columns,
            rows: table.rows.len(),
            row_errors: &table.row_errors,
        };
        std::fs::write(path, manifest.to_json())
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    }
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(csv.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::schema(format!("stdout: {e}")))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CASIMIR_GAIN_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::schema(format!(
            "CASIMIR_GAIN_THREADS: expected a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::schema(format!("CASIMIR_GAIN_THREADS: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e {
                CliError::Schema(_) => "input error",
                CliError::Numerical(_) => "numerical error",
            };
            eprintln!("casimir-gain: {kind}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
