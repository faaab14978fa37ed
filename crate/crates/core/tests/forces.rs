use casimir_gain::constants::C;
use casimir_gain::forces::{
    additivity_check, force_nr_dilute, force_nr_exact_film, force_r_dilute, force_r_dilute_window,
    ideal_casimir_pressure, lifshitz_two_plates, DiluteSlab,
};
use casimir_gain::greens::LayerStack;
use casimir_gain::materials::{AtomModel, LorentzOscillator, PermittivityModel};
use casimir_gain::numerics::QuadratureSpec;
use casimir_gain::potentials::{cp_nonresonant, cp_resonant};

mod common;
use common::{dielectric_ideal_ratio, logspace};

const W: f64 = 1e16;
const D2: f64 = 7.2e-59;

fn spec() -> QuadratureSpec {
    QuadratureSpec::with_rel_tol(1e-9)
}

fn ground() -> AtomModel {
    AtomModel::ground_two_level(W, D2).unwrap()
}

fn excited() -> AtomModel {
    AtomModel::excited_two_level(W, D2).unwrap()
}

fn absorber_model() -> PermittivityModel {
    PermittivityModel::single(LorentzOscillator::absorbing(2e16, 1.5e16, 1e15).unwrap()).unwrap()
}

fn absorber() -> LayerStack {
    LayerStack::half_space(absorber_model())
}

fn slab(atom: AtomModel, eta: f64, lo: f64, hi: f64, n: usize) -> DiluteSlab {
    DiluteSlab::new(atom, eta, lo * C / W, hi * C / W, n).unwrap()
}

#[test]
fn macroscopic_force_is_additive_over_atoms() {
    for atom in [ground(), excited()] {
        for stack in [LayerStack::perfect_mirror(), absorber()] {
            for (lo, hi) in [(0.05, 0.1), (0.3, 0.6), (2.0, 2.5)] {
                let s = slab(atom.clone(), 1e24, lo, hi, 8);
                let r = additivity_check(&s, &stack, &spec()).unwrap();
                assert!(r.max_susceptibility < 1e-4);
                assert!(r.deviation_nr < 1e-3, "nr {lo}-{hi}: {r:?}");
                if atom.is_excited() {
                    assert!(r.deviation_r < 1e-3, "r {lo}-{hi}: {r:?}");
                } else {
                    assert_eq!(r.macro_force.f_r, 0.0);
                }
            }
        }
    }
}

#[test]
fn force_is_linear_in_density() {
    let stack = absorber();
    let base = force_nr_dilute(&slab(excited(), 1e24, 0.2, 0.4, 8), &stack, &spec()).unwrap();
    let base_r = force_r_dilute(&slab(excited(), 1e24, 0.2, 0.4, 8), &stack, &spec()).unwrap();
    for eta in [1e10, 3e22, 1e26] {
        let s = slab(excited(), eta, 0.2, 0.4, 8);
        let f = force_nr_dilute(&s, &stack, &spec()).unwrap().value;
        let r = force_r_dilute(&s, &stack, &spec()).unwrap().value;
        let k = eta / 1e24;
        assert!((f / (k * base.value) - 1.0).abs() < 1e-12, "eta {eta}");
        assert!((r / (k * base_r.value) - 1.0).abs() < 1e-12, "eta {eta}");
    }
}

#[test]
fn thin_slab_reduces_to_single_atom_force() {
    let stack = LayerStack::perfect_mirror();
    let atom = excited();
    let (mid, eta) = (0.4 * C / W, 1e24);
    let mut prev = f64::INFINITY;
    let f_atom = {
        let nr = cp_nonresonant(&atom, &stack, mid, &spec()).unwrap();
        let r = cp_resonant(&atom, &stack, mid, &spec()).unwrap();
        -(nr.du_dz + r.du_dz)
    };
    let mut ratios = Vec::new();
    for half in [0.04, 0.02, 0.01] {
        let d = 2.0 * half * C / W;
        let s = DiluteSlab::new(atom.clone(), eta, mid - d / 2.0, mid + d / 2.0, 1).unwrap();
        let f = force_nr_dilute(&s, &stack, &spec()).unwrap().value
            + force_r_dilute(&s, &stack, &spec()).unwrap().value;
        let dev = (f / (eta * d * f_atom) - 1.0).abs();
        assert!(dev < prev);
        if prev.is_finite() {
            ratios.push(prev / dev);
        }
        prev = dev;
    }
    for r in ratios {
        assert!((r - 4.0).abs() < 0.3, "{r}");
    }
}

#[test]
fn broadened_resonant_force_approaches_sharp_lines() {
    let stack = absorber();
    let s = slab(excited(), 1e24, 0.3, 0.5, 4);
    let sharp = force_r_dilute(&s, &stack, &spec()).unwrap().value;
    let broad = force_r_dilute_window(&s, &stack, 1e-4, &spec())
        .unwrap()
        .value;
    assert!((broad / sharp - 1.0).abs() < 5e-3, "{broad:e} vs {sharp:e}");
}

#[test]
fn resonant_slab_force_oscillates_with_height() {
    let stack = LayerStack::perfect_mirror();
    let width = 0.05;
    let signs: Vec<f64> = (0..24)
        .map(|i| {
            let lo = 3.0 + 0.4 * i as f64;
            let s = slab(excited(), 1e24, lo, lo + width, 2);
            force_r_dilute(&s, &stack, &spec()).unwrap().value.signum()
        })
        .collect();
    let flips = signs.windows(2).filter(|p| p[0] != p[1]).count();
    // Sign changes every π/2 in units of c/ω; the span is 9.2.
    assert!(flips >= 5, "{signs:?}");
}

#[test]
fn exact_film_departs_from_the_dilute_result_linearly_in_chi() {
    let stack = LayerStack::perfect_mirror();
    let dev = |eta: f64| {
        let s = slab(ground(), eta, 0.2, 0.3, 4);
        let dilute = force_nr_dilute(&s, &stack, &spec()).unwrap().value;
        let exact = force_nr_exact_film(&s, &stack, &spec()).unwrap().value;
        (s.max_susceptibility(), (exact - dilute) / dilute)
    };
    let (chi1, d1) = dev(5e25);
    let (chi2, d2) = dev(1e26);
    assert!(chi1 > 1e-4 && chi2 < 1e-2);
    assert!(d1.abs() < 10.0 * chi1, "{d1} vs chi {chi1}");
    assert!((d2 / d1 - 2.0).abs() < 0.1, "{d1:e} {d2:e}");
}

#[test]
fn vanishing_density_has_no_noise_floor() {
    let stack = absorber();
    let s = slab(ground(), 1e-3, 0.2, 0.4, 4);
    let f = force_nr_dilute(&s, &stack, &spec()).unwrap();
    let big = force_nr_dilute(&slab(ground(), 1e24, 0.2, 0.4, 4), &stack, &spec()).unwrap();
    assert!((f.value / big.value * 1e27 - 1.0).abs() < 1e-12);
    let none = force_nr_dilute(&slab(ground(), 0.0, 0.2, 0.4, 4), &stack, &spec()).unwrap();
    assert_eq!(none.value, 0.0);
}

#[test]
fn identical_absorbers_attract() {
    let m = absorber_model();
    for d in logspace(1e-9, 1e-5, 5) {
        for t in [0.0, 300.0] {
            let p = lifshitz_two_plates(&m, &m, d, t, &spec()).unwrap().value;
            assert!(p < 0.0, "d {d}, T {t}: {p}");
        }
    }
}

#[test]
fn dispersionless_plates_match_the_polylog_oracle() {
    for eps in [10.0, 1e3, 1e8] {
        let m = PermittivityModel::constant(eps).unwrap();
        let expected = dielectric_ideal_ratio(eps);
        for d in [1e-8, 1e-6] {
            let p = lifshitz_two_plates(&m, &m, d, 0.0, &QuadratureSpec::default())
                .unwrap()
                .value;
            let ratio = p / ideal_casimir_pressure(d);
            assert!(
                (ratio / expected - 1.0).abs() < 1e-6,
                "eps {eps}: {ratio} vs {expected}"
            );
        }
    }
}
