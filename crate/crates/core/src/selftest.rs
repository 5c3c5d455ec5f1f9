//! Fast internal consistency suite behind `ris-keygen selftest`.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;

use crate::channel::covariances;
use crate::exec::Executor;
use crate::experiment::{run_sweep, ExperimentConfig, SweepAxis};
use crate::keygen::quantize_phase;
use crate::params::{validate, DerivedParams, RandomSource, SimRng, SystemParams};
use crate::presets::{figure_preset, Figure};
use crate::theory::{build_joint_model, mi_oracle, mi_oracle_terms, skr_lower_bound};

/// Maximum allowed |bound − oracle|, in bits per symbol.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

/// Random scenario for the bound/oracle comparison: every β in `(0, 2]`,
/// `N` in `0..=256`, even `T_s` in `2..=40`, and `σ²` log-uniform on
/// `[1e-4, 1e2]` with `P = 1`.
pub fn random_theory_case(rng: &mut SimRng) -> (SystemParams, DerivedParams) {
    let mut beta = || 2.0 * (1.0 - rng.random::<f64>());
    let (beta_ab, beta_ae, beta_be) = (beta(), beta(), beta());
    let (beta_ar, beta_rb, beta_re) = (beta(), beta(), beta());
    let t_s = 2 * rng.random_range(1..=20usize);
    let params = SystemParams {
        n_elements: rng.random_range(0..=256),
        t_k: t_s * (40 / t_s),
        t_s,
        f_blocks: 1,
        q_levels: 2,
        power: 1.0,
        noise_power: 10f64.powf(rng.random_range(-4.0..=2.0)),
        beta_ab,
        beta_ae,
        beta_be,
        beta_ar,
        beta_rb,
        beta_re,
    };
    let derived = validate(&params).expect("generated parameters are valid");
    (params, derived)
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SelfTestReport {
    pub checks: Vec<CheckResult>,
}

impl SelfTestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Largest |bound − oracle| over `draws` random scenarios, and whether
/// every Eve term was exactly zero.
pub fn oracle_agreement(seed: u64, draws: usize) -> (f64, bool) {
    let mut rng = RandomSource::new(seed, 0).rng();
    let mut worst = 0.0f64;
    let mut eve_zero = true;
    for _ in 0..draws {
        let (p, d) = random_theory_case(&mut rng);
        let model = build_joint_model(&p, &d);
        let Ok(terms) = mi_oracle_terms(&model) else {
            return (f64::INFINITY, false);
        };
        eve_zero &= terms.eve_given_ab == 0.0 && terms.eve_given_ba == 0.0;
        let oracle = mi_oracle(&model, p.t_s).unwrap_or(f64::NAN);
        let diff = (skr_lower_bound(&p, &d) - oracle).abs();
        worst = if diff.is_nan() {
            f64::INFINITY
        } else {
            worst.max(diff)
        };
    }
    (worst, eve_zero)
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

pub fn run_selftest(executor: &Executor) -> SelfTestReport {
    let mut checks = Vec::new();

    let (worst, eve_zero) = oracle_agreement(2024, 1000);
    checks.push(check(
        "bound_vs_oracle",
        worst <= ORACLE_TOLERANCE,
        format!("max |bound - oracle| = {worst:.3e} over 1000 draws (tol {ORACLE_TOLERANCE:e})"),
    ));
    checks.push(check(
        "eve_terms_zero",
        eve_zero,
        "I(G_ab; G_ae, G_be) and I(G_ba; G_ae, G_be) exactly 0".into(),
    ));

    let mut rng = RandomSource::new(2025, 0).rng();
    let worst_identity = (0..1000)
        .map(|_| {
            let (p, d) = random_theory_case(&mut rng);
            let rho = covariances(&p).rho_ab;
            let s = d.est_noise_var;
            ((rho + s).powi(2) - rho * rho - s * (2.0 * rho + s)).abs() / (rho + s).powi(2)
        })
        .fold(0.0f64, f64::max);
    checks.push(check(
        "determinant_identity",
        worst_identity <= 8.0 * f64::EPSILON,
        format!("max relative residual {worst_identity:.3e}"),
    ));

    let grid = 100_000;
    let nested = [2usize, 4, 8, 16].iter().all(|&q| {
        (0..grid).all(|i| {
            let theta = TAU * i as f64 / grid as f64;
            let coarse = quantize_phase(theta, q);
            let fine = quantize_phase(theta, 2 * q);
            matches!((coarse, fine), (Ok(c), Ok(f)) if c == f.div_ceil(2))
        })
    });
    checks.push(check(
        "quantizer_nesting",
        nested,
        format!("{grid}-point grid, Q in {{2, 4, 8, 16}}"),
    ));

    let small: Vec<ExperimentConfig> = figure_preset(Figure::Fig5)
        .with_n_keys(200)
        .with_seed(3)
        .curves
        .into_iter()
        .map(|c| ExperimentConfig {
            sweep_axis: SweepAxis::NElements,
            sweep_values: vec![1.0, 11.0],
            ..c.config
        })
        .collect();
    let mut identities = true;
    let mut equivalent = true;
    for config in &small {
        let serial = run_sweep(config, &Executor::serial());
        let other = run_sweep(config, executor);
        match (serial, other) {
            (Ok(a), Ok(b)) => {
                identities &= a.rows.iter().all(|r| r.identities_hold());
                equivalent &= a == b;
            }
            _ => {
                identities = false;
                equivalent = false;
            }
        }
    }
    checks.push(check(
        "throughput_identity",
        identities,
        "kmr = 1 - p and throughput = p log2(Q) / (T_s/2) on every row".into(),
    ));
    checks.push(check(
        "executor_equivalence",
        equivalent,
        format!("serial vs {} worker(s)", executor.workers()),
    ));

    SelfTestReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_cases_are_valid_and_varied() {
        let mut rng = RandomSource::new(1, 0).rng();
        let cases: Vec<_> = (0..200).map(|_| random_theory_case(&mut rng)).collect();
        assert!(cases
            .iter()
            .any(|(p, _)| p.n_elements == 0 || p.n_elements > 200));
        assert!(cases
            .iter()
            .all(|(p, _)| (1e-4..=1e2).contains(&p.noise_power)));
        assert!(cases
            .iter()
            .all(|(p, _)| p.beta_ab > 0.0 && p.beta_ab <= 2.0));
    }

    #[test]
    fn selftest_passes() {
        let report = run_selftest(&Executor::parallel(2).unwrap());
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
    }
}
