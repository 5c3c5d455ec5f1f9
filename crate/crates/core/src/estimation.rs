//! Least-squares channel estimates per switching period.
//!
//! Two equivalent ways of producing an estimate are provided. The pilot mode
//! simulates the `T_s / 2` received pilot symbols and applies the LS
//! estimator `x^H y / ‖x‖²`. The reduced mode skips the symbols and adds the
//! resulting `CN(0, σ̄²)` error directly, with `σ̄² = 2σ² / (T_s P)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{aggregate_all, sample_cn, ChannelBlock, RisSchedule};
use crate::error::{Error, Result};
use crate::params::{DerivedParams, SystemParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EstimationMode {
    /// Add the LS error in closed form.
    #[default]
    Reduced,
    /// Simulate every pilot symbol.
    Pilot,
}

impl fmt::Display for EstimationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimationMode::Reduced => "reduced",
            EstimationMode::Pilot => "pilot",
        })
    }
}

impl FromStr for EstimationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reduced" => Ok(EstimationMode::Reduced),
            "pilot" => Ok(EstimationMode::Pilot),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimation mode {other:?} (expected reduced or pilot)"
            ))),
        }
    }
}

/// Estimates of one block, indexed by switching period.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSet {
    /// Alice's estimates of the Bob→Alice channel.
    pub g_hat_ba: Vec<Complex64>,
    /// Bob's estimates of the Alice→Bob channel.
    pub g_hat_ab: Vec<Complex64>,
    /// Eve's estimates of the Alice→Eve channel.
    pub g_hat_ae: Vec<Complex64>,
    /// Eve's estimates of the Bob→Eve channel.
    pub g_hat_be: Vec<Complex64>,
    pub block_index: usize,
}

impl EstimateSet {
    pub fn periods(&self) -> usize {
        self.g_hat_ab.len()
    }
}

pub fn estimate_reduced<R: Rng + ?Sized>(
    rng: &mut R,
    g_true: Complex64,
    est_noise_var: f64,
) -> Complex64 {
    g_true + sample_cn(rng, est_noise_var)
}

/// Constant-modulus pilot block of `t_s / 2` symbols, each `√P`.
pub fn default_pilots(t_s: usize, power: f64) -> Vec<Complex64> {
    vec![Complex64::new(power.sqrt(), 0.0); t_s / 2]
}

/// LS estimate from the observations `y_t = g x_t + n_t`, `n_t ~ CN(0, σ²)`.
pub fn estimate_with_pilots<R: Rng + ?Sized>(
    rng: &mut R,
    g_true: Complex64,
    pilots: &[Complex64],
    noise_power: f64,
) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    for &x in pilots {
        let y = g_true * x + sample_cn(rng, noise_power);
        num += x.conj() * y;
        energy += x.norm_sqr();
    }
    num / energy
}

pub fn estimate_pilot<R: Rng + ?Sized>(
    rng: &mut R,
    g_true: Complex64,
    t_s: usize,
    power: f64,
    noise_power: f64,
) -> Complex64 {
    estimate_with_pilots(rng, g_true, &default_pilots(t_s, power), noise_power)
}

/// Runs one block of channel probing: for every switching period, Alice,
/// Bob and Eve each form an estimate with independent noise.
pub fn run_round<R: Rng + ?Sized>(
    rng: &mut R,
    block: &ChannelBlock,
    schedule: &RisSchedule,
    params: &SystemParams,
    derived: &DerivedParams,
    mode: EstimationMode,
    block_index: usize,
) -> Result<EstimateSet> {
    let periods = derived.periods_per_block;
    if schedule.periods() != periods {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} periods, expected {periods}",
            schedule.periods()
        )));
    }

    let pilots = default_pilots(params.t_s, params.power);
    let estimate = |rng: &mut R, g: Complex64| match mode {
        EstimationMode::Reduced => estimate_reduced(rng, g, derived.est_noise_var),
        EstimationMode::Pilot => estimate_with_pilots(rng, g, &pilots, params.noise_power),
    };

    let mut set = EstimateSet {
        g_hat_ba: Vec::with_capacity(periods),
        g_hat_ab: Vec::with_capacity(periods),
        g_hat_ae: Vec::with_capacity(periods),
        g_hat_be: Vec::with_capacity(periods),
        block_index,
    };
    for period in 0..periods {
        let [g_ab, g_ae, g_be] = aggregate_all(block, schedule, period)?;
        set.g_hat_ba.push(estimate(rng, g_ab));
        set.g_hat_ab.push(estimate(rng, g_ab));
        set.g_hat_ae.push(estimate(rng, g_ae));
        set.g_hat_be.push(estimate(rng, g_be));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{covariances, sample_block, sample_schedule};
    use crate::params::{validate, RandomSource};

    fn error_variance(mut draw: impl FnMut() -> Complex64, n: usize) -> (f64, f64) {
        let xs: Vec<f64> = (0..n).map(|_| draw().norm_sqr()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn noiseless_estimates_are_exact() {
        let g = Complex64::new(0.3, -1.7);
        let mut rng = RandomSource::new(1, 0).rng();
        assert_eq!(estimate_reduced(&mut rng, g, 0.0), g);
        assert_eq!(estimate_pilot(&mut rng, g, 10, 1.0, 0.0), g);
        assert_eq!(estimate_pilot(&mut rng, g, 4, 4.0, 0.0), g);
    }

    #[test]
    fn reduced_mode_is_deterministic() {
        let g = Complex64::new(1.0, 1.0);
        let a = estimate_reduced(&mut RandomSource::new(3, 3).rng(), g, 0.5);
        let b = estimate_reduced(&mut RandomSource::new(3, 3).rng(), g, 0.5);
        assert_eq!(a, b);
    }

    #[test]
    fn reduced_error_variance() {
        let mut rng = RandomSource::new(4, 0).rng();
        let zero = Complex64::new(0.0, 0.0);
        let (mean, _) = error_variance(|| estimate_reduced(&mut rng, zero, 1.0), 100_000);
        assert!((0.97..=1.03).contains(&mean), "{mean}");
    }

    #[test]
    fn pilot_error_variance_matches_closed_form() {
        let zero = Complex64::new(0.0, 0.0);
        for (t_s, expected) in [(2, 1.0), (40, 0.05)] {
            let mut rng = RandomSource::new(5, t_s as u64).rng();
            let (mean, se) =
                error_variance(|| estimate_pilot(&mut rng, zero, t_s, 1.0, 1.0), 100_000);
            assert!((mean - expected).abs() <= 3.0 * se, "t_s={t_s}: {mean}");
        }
    }

    #[test]
    fn pilot_content_does_not_matter() {
        let g = Complex64::new(-0.4, 0.9);
        let t_s = 10;
        let rotating: Vec<Complex64> = (0..t_s / 2)
            .map(|t| Complex64::from_polar(1.0, 1.1 * t as f64))
            .collect();
        let mut rng = RandomSource::new(6, 0).rng();
        let (a, se_a) = error_variance(|| estimate_pilot(&mut rng, g, t_s, 1.0, 1.0) - g, 100_000);
        let (b, se_b) = error_variance(
            || estimate_with_pilots(&mut rng, g, &rotating, 1.0) - g,
            100_000,
        );
        assert!(
            (a - b).abs() <= 3.0 * (se_a.powi(2) + se_b.powi(2)).sqrt(),
            "{a} vs {b}"
        );
        assert!((a - 0.2).abs() <= 3.0 * se_a);
    }

    #[test]
    fn noiseless_round_is_reciprocal() {
        let p = SystemParams {
            n_elements: 8,
            noise_power: 0.0,
            ..SystemParams::baseline()
        };
        let d = validate(&p).unwrap();
        for mode in [EstimationMode::Reduced, EstimationMode::Pilot] {
            let mut rng = RandomSource::new(7, 0).rng();
            let b = sample_block(&mut rng, &p);
            let s = sample_schedule(&mut rng, &p, &d);
            let set = run_round(&mut rng, &b, &s, &p, &d, mode, 0).unwrap();
            assert_eq!(set.periods(), 20);
            assert_eq!(set.g_hat_ab, set.g_hat_ba);
        }
    }

    #[test]
    fn no_ris_periods_share_the_direct_channel() {
        let p = SystemParams {
            n_elements: 0,
            noise_power: 1e-6,
            ..SystemParams::baseline()
        };
        let d = validate(&p).unwrap();
        let mut rng = RandomSource::new(8, 0).rng();
        let b = sample_block(&mut rng, &p);
        let s = sample_schedule(&mut rng, &p, &d);
        let set = run_round(&mut rng, &b, &s, &p, &d, EstimationMode::Reduced, 0).unwrap();
        for g in &set.g_hat_ab {
            assert!((g - b.h_ab).norm() < 0.01);
        }
        assert_ne!(set.g_hat_ab[0], set.g_hat_ab[1]);
    }

    #[test]
    fn mismatched_schedule_is_rejected() {
        let p = SystemParams {
            n_elements: 2,
            ..SystemParams::baseline()
        };
        let d = validate(&p).unwrap();
        let mut rng = RandomSource::new(9, 0).rng();
        let b = sample_block(&mut rng, &p);
        let s = RisSchedule::empty(20);
        assert!(matches!(
            run_round(&mut rng, &b, &s, &p, &d, EstimationMode::Reduced, 0),
            Err(Error::DimensionMismatch(_))
        ));
        let short = RisSchedule::empty(3);
        assert!(run_round(&mut rng, &b, &short, &p, &d, EstimationMode::Reduced, 0).is_err());
    }

    /// Pools `(ĝ_ab, other)` pairs over many blocks and periods.
    fn pooled_pairs(
        p: &SystemParams,
        pick: impl Fn(&EstimateSet, usize) -> (Complex64, Complex64),
        blocks: usize,
    ) -> Vec<(Complex64, Complex64)> {
        let d = validate(p).unwrap();
        let mut rng = RandomSource::new(10, 0).rng();
        let mut out = Vec::with_capacity(blocks * d.periods_per_block);
        for i in 0..blocks {
            let b = sample_block(&mut rng, p);
            let s = sample_schedule(&mut rng, p, &d);
            let set = run_round(&mut rng, &b, &s, p, &d, EstimationMode::Reduced, i).unwrap();
            out.extend((0..set.periods()).map(|l| pick(&set, l)));
        }
        out
    }

    /// Mean and standard error over per-block means (periods within a block
    /// share `h_ab`, blocks are independent).
    fn clustered_mean(xs: &[f64], cluster: usize) -> (f64, f64) {
        let means: Vec<f64> = xs
            .chunks(cluster)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let n = means.len() as f64;
        let mean = means.iter().sum::<f64>() / n;
        let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn alice_bob_covariance_structure() {
        let p = SystemParams {
            n_elements: 16,
            ..SystemParams::baseline()
        };
        let rho = covariances(&p).rho_ab;
        let sigma = validate(&p).unwrap().est_noise_var;
        let pairs = pooled_pairs(&p, |s, l| (s.g_hat_ab[l], s.g_hat_ba[l]), 5_000);

        let cross: Vec<f64> = pairs.iter().map(|(a, b)| (a * b.conj()).re).collect();
        let (c, se) = clustered_mean(&cross, 20);
        assert!((c - rho).abs() <= 3.0 * se, "E[g_ab g_ba*] = {c} vs {rho}");

        let power: Vec<f64> = pairs.iter().map(|(a, _)| a.norm_sqr()).collect();
        let (v, se) = clustered_mean(&power, 20);
        assert!((v - (rho + sigma)).abs() <= 3.0 * se, "E|g_ab|^2 = {v}");
    }

    #[test]
    fn eve_estimates_are_uncorrelated_with_bob() {
        let p = SystemParams {
            n_elements: 16,
            ..SystemParams::baseline()
        };
        let ae = pooled_pairs(&p, |s, l| (s.g_hat_ab[l], s.g_hat_ae[l]), 5_000);
        let be = pooled_pairs(&p, |s, l| (s.g_hat_ab[l], s.g_hat_be[l]), 5_000);
        for pairs in [ae, be] {
            for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
                let xs: Vec<f64> = pairs.iter().map(|(a, e)| part(a * e.conj())).collect();
                let (c, se) = clustered_mean(&xs, 20);
                assert!(c.abs() <= 3.0 * se, "{c} (se {se})");
            }
        }
    }
}
