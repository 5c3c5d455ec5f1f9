//! Monte Carlo experiments over parameter sweeps, and their CSV form.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::channel::{sample_block, sample_schedule};
use crate::error::{Error, Result};
use crate::estimation::{run_round, EstimationMode};
use crate::exec::Executor;
use crate::keygen::{assemble_keys, MatchCounts, ProtocolStats};
use crate::params::{snr_db_to_noise_power, validate, DerivedParams, RandomSource, SystemParams};
use crate::theory::skr_lower_bound;

/// Default Monte Carlo sample size per sweep point, in keys.
pub const DEFAULT_N_KEYS: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    NElements,
    SnrDb,
    Ts,
    QLevels,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NElements => "n_elements",
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Ts => "t_s",
            SweepAxis::QLevels => "q_levels",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &SystemParams, value: f64) -> Result<SystemParams> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidArgument(format!(
                    "{} must be a non-negative integer, got {value}",
                    self.name()
                )))
            }
        };
        let mut p = base.clone();
        match self {
            SweepAxis::NElements => p.n_elements = count()?,
            SweepAxis::Ts => p.t_s = count()?,
            SweepAxis::QLevels => p.q_levels = count()?,
            SweepAxis::SnrDb => {
                if !value.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "snr_db must be finite, got {value}"
                    )));
                }
                p.noise_power = snr_db_to_noise_power(value, p.power);
            }
        }
        Ok(p)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_elements" | "n" => Ok(SweepAxis::NElements),
            "snr_db" | "snr" => Ok(SweepAxis::SnrDb),
            "t_s" | "ts" => Ok(SweepAxis::Ts),
            "q_levels" | "q" => Ok(SweepAxis::QLevels),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep axis {other:?} (expected n_elements, snr_db, t_s or q_levels)"
            ))),
        }
    }
}

/// One curve: a baseline, the axis it is swept along, and Monte Carlo
/// settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub base: SystemParams,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    /// Minimum number of keys per point. Each round yields `M` keys, so the
    /// point runs `⌈n_keys / M⌉` rounds.
    pub n_keys: u64,
    pub master_seed: u64,
    pub mode: EstimationMode,
    pub include_theory: bool,
    /// Forces `n_elements = 0` after substitution, whatever the axis says.
    pub no_ris: bool,
}

impl ExperimentConfig {
    pub fn new(base: SystemParams, sweep_axis: SweepAxis, sweep_values: Vec<f64>) -> Self {
        Self {
            base,
            sweep_axis,
            sweep_values,
            n_keys: DEFAULT_N_KEYS,
            master_seed: 1,
            mode: EstimationMode::Reduced,
            include_theory: false,
            no_ris: false,
        }
    }

    /// Validated parameters of sweep point `value`.
    pub fn params_at(&self, value: f64) -> Result<(SystemParams, DerivedParams)> {
        let mut p = self.sweep_axis.apply(&self.base, value)?;
        if self.no_ris {
            p.n_elements = 0;
        }
        let d = validate(&p).map_err(|source| Error::SweepPoint {
            axis: self.sweep_axis.name(),
            value: value.to_string(),
            source,
        })?;
        Ok((p, d))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep_values.is_empty() {
            return Err(Error::InvalidArgument("sweep has no values".into()));
        }
        if self.n_keys == 0 {
            return Err(Error::InvalidArgument("n_keys must be >= 1".into()));
        }
        for &v in &self.sweep_values {
            self.params_at(v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    /// Parameters the point was simulated with.
    pub params: SystemParams,
    pub stats: ProtocolStats,
    pub theory_bound: Option<f64>,
    pub master_seed: u64,
}

impl ResultRow {
    pub fn kmr(&self) -> f64 {
        self.stats.kmr_hat
    }

    pub fn throughput(&self) -> f64 {
        self.stats.throughput
    }

    pub fn identities_hold(&self) -> bool {
        self.stats
            .identities_hold(self.params.q_levels, self.params.t_s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub sweep_axis: SweepAxis,
    pub rows: Vec<ResultRow>,
}

/// One key-generation round: `F` blocks of probing, key assembly at both
/// nodes, and the comparison of the `M` resulting key pairs.
pub fn simulate_round(
    source: RandomSource,
    params: &SystemParams,
    derived: &DerivedParams,
    mode: EstimationMode,
) -> Result<MatchCounts> {
    let mut rng = source.rng();
    let sets = (0..params.f_blocks)
        .map(|f| {
            let block = sample_block(&mut rng, params);
            let schedule = sample_schedule(&mut rng, params, derived);
            run_round(&mut rng, &block, &schedule, params, derived, mode, f)
        })
        .collect::<Result<Vec<_>>>()?;
    let (alice, bob) = assemble_keys(&sets, params, derived)?;
    MatchCounts::tally(&alice, &bob)
}

/// Runs sweep point `point` (an index into `config.sweep_values`).
pub fn run_point(
    config: &ExperimentConfig,
    point: usize,
    executor: &Executor,
) -> Result<ResultRow> {
    let value = *config.sweep_values.get(point).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "sweep point {point} out of range ({} values)",
            config.sweep_values.len()
        ))
    })?;
    let (params, derived) = config.params_at(value)?;
    if config.n_keys == 0 {
        return Err(Error::InvalidArgument("n_keys must be >= 1".into()));
    }
    let rounds = config.n_keys.div_ceil(derived.periods_per_block as u64);
    let counts = executor.map_sum(rounds, |trial| {
        let source = RandomSource::for_trial(config.master_seed, point, trial);
        simulate_round(source, &params, &derived, config.mode)
    })?;
    let stats = ProtocolStats::from_counts(&counts, params.q_levels, params.t_s)?;
    let theory_bound = config
        .include_theory
        .then(|| skr_lower_bound(&params, &derived));
    Ok(ResultRow {
        sweep_value: value,
        params,
        stats,
        theory_bound,
        master_seed: config.master_seed,
    })
}

pub fn run_sweep(config: &ExperimentConfig, executor: &Executor) -> Result<ExperimentResult> {
    config.validate()?;
    let rows = (0..config.sweep_values.len())
        .map(|point| run_point(config, point, executor))
        .collect::<Result<_>>()?;
    Ok(ExperimentResult {
        sweep_axis: config.sweep_axis,
        rows,
    })
}

pub const CSV_HEADER: &str = "sweep_axis,sweep_value,n_keys,kmr,match_prob,per_estimate_match,\
mean_handshakes,throughput_bits_per_symbol,theory_bound_bits_per_symbol,ci_halfwidth,seed";

/// Positional decimal with at least 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.000000000000".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn emit_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in &result.rows {
        let s = &row.stats;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            result.sweep_axis,
            row.sweep_value,
            s.n_keys,
            format_number(s.kmr_hat),
            format_number(s.match_prob_hat),
            format_number(s.per_estimate_match_hat),
            format_number(s.mean_handshakes),
            format_number(s.throughput),
            row.theory_bound.map(format_number).unwrap_or_default(),
            format_number(s.ci_halfwidth),
            row.master_seed,
        )?;
    }
    out.flush()
}

pub fn csv_string(result: &ExperimentResult) -> String {
    let mut buf = Vec::new();
    emit_csv(result, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

pub fn write_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    emit_csv(result, BufWriter::new(file)).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(axis: SweepAxis, values: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            n_keys: 400,
            master_seed: 9,
            ..ExperimentConfig::new(
                SystemParams {
                    f_blocks: 2,
                    ..SystemParams::baseline()
                },
                axis,
                values,
            )
        }
    }

    #[test]
    fn axis_substitution() {
        let base = SystemParams::baseline();
        assert_eq!(
            SweepAxis::NElements.apply(&base, 16.0).unwrap().n_elements,
            16
        );
        assert_eq!(SweepAxis::Ts.apply(&base, 10.0).unwrap().t_s, 10);
        assert_eq!(SweepAxis::QLevels.apply(&base, 8.0).unwrap().q_levels, 8);
        let p = SweepAxis::SnrDb.apply(&base, 10.0).unwrap();
        assert!((p.noise_power - 0.1).abs() < 1e-15);
        assert!(SweepAxis::NElements.apply(&base, 1.5).is_err());
        assert!(SweepAxis::Ts.apply(&base, -2.0).is_err());
        assert!("bogus".parse::<SweepAxis>().is_err());
        assert_eq!("snr_db".parse::<SweepAxis>().unwrap(), SweepAxis::SnrDb);
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let c = small(SweepAxis::NElements, vec![]);
        assert!(matches!(
            run_sweep(&c, &Executor::serial()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn failing_point_is_named() {
        let c = small(SweepAxis::Ts, vec![2.0, 3.0]);
        match run_sweep(&c, &Executor::serial()) {
            Err(Error::SweepPoint {
                axis,
                value,
                source,
            }) => {
                assert_eq!(axis, "t_s");
                assert_eq!(value, "3");
                assert_eq!(source.code(), "TS_NOT_DIVIDING_TK");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rounds_cover_requested_keys() {
        let c = small(SweepAxis::Ts, vec![2.0, 40.0]);
        let r = run_sweep(&c, &Executor::serial()).unwrap();
        assert_eq!(r.rows[0].stats.n_keys, 400);
        assert_eq!(r.rows[1].stats.n_keys, 400);
        let c = ExperimentConfig { n_keys: 401, ..c };
        assert_eq!(
            run_point(&c, 0, &Executor::serial()).unwrap().stats.n_keys,
            420
        );
    }

    #[test]
    fn no_ris_flag_overrides_axis() {
        let c = ExperimentConfig {
            no_ris: true,
            ..small(SweepAxis::NElements, vec![1.0, 61.0])
        };
        let r = run_sweep(&c, &Executor::serial()).unwrap();
        assert!(r.rows.iter().all(|row| row.params.n_elements == 0));
        // Same streams, same (RIS-free) model: identical statistics.
        assert_eq!(r.rows[0].params, r.rows[1].params);
    }

    #[test]
    fn noiseless_keys_always_match() {
        let c = ExperimentConfig {
            base: SystemParams {
                noise_power: 0.0,
                f_blocks: 5,
                q_levels: 8,
                n_elements: 4,
                ..SystemParams::baseline()
            },
            ..small(SweepAxis::Ts, vec![2.0, 10.0])
        };
        for row in run_sweep(&c, &Executor::serial()).unwrap().rows {
            assert_eq!(row.kmr(), 0.0);
            assert_eq!(row.stats.mean_handshakes, 1.0);
        }
    }

    #[test]
    fn serial_and_parallel_rows_are_identical() {
        let c = ExperimentConfig {
            include_theory: true,
            ..small(SweepAxis::NElements, vec![0.0, 1.0, 8.0])
        };
        let serial = run_sweep(&c, &Executor::serial()).unwrap();
        let pooled = run_sweep(&c, &Executor::parallel(4).unwrap()).unwrap();
        assert_eq!(serial, pooled);
        assert_eq!(csv_string(&serial), csv_string(&pooled));
        assert!(serial.rows.iter().all(ResultRow::identities_hold));
    }

    #[test]
    fn adding_points_keeps_existing_samples() {
        let a = run_sweep(&small(SweepAxis::NElements, vec![4.0]), &Executor::serial()).unwrap();
        let b = run_sweep(
            &small(SweepAxis::NElements, vec![4.0, 9.0]),
            &Executor::serial(),
        )
        .unwrap();
        assert_eq!(a.rows[0], b.rows[0]);
    }

    #[test]
    fn pilot_mode_runs() {
        let c = ExperimentConfig {
            mode: EstimationMode::Pilot,
            ..small(SweepAxis::Ts, vec![10.0])
        };
        let r = run_sweep(&c, &Executor::serial()).unwrap();
        assert!(r.rows[0].identities_hold());
    }

    #[test]
    fn csv_layout() {
        let c = small(SweepAxis::NElements, vec![3.0]);
        let csv = csv_string(&run_sweep(&c, &Executor::serial()).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[0], "n_elements");
        assert_eq!(fields[1], "3");
        assert_eq!(fields[8], "");
        assert_eq!(fields[10], "9");
        let digits = fields[3].chars().filter(char::is_ascii_digit).count();
        assert!(digits >= 10, "{}", fields[3]);
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.5), "0.500000000000");
        assert_eq!(format_number(0.0), "0.000000000000");
        assert_eq!(format_number(12.25), "12.2500000000");
        assert_eq!(format_number(f64::INFINITY), "inf");
        let s = format_number(0.00123456789012345);
        assert_eq!(s, "0.00123456789012");
        assert!(s.parse::<f64>().is_ok());
    }

    #[test]
    fn unwritable_destination() {
        let r = run_sweep(&small(SweepAxis::NElements, vec![0.0]), &Executor::serial()).unwrap();
        let err = write_csv(&r, Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(!err.is_validation());
    }
}
