use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ris_keygen::config::load_config;
use ris_keygen::estimation::EstimationMode;
use ris_keygen::exec::Executor;
use ris_keygen::experiment::{
    csv_string, format_number, run_point, run_sweep, write_csv, ExperimentConfig, ExperimentResult,
    SweepAxis, DEFAULT_N_KEYS,
};
use ris_keygen::params::{snr_db_to_noise_power, validate, SystemParams};
use ris_keygen::presets::{figure_preset, Figure};
use ris_keygen::selftest::run_selftest;
use ris_keygen::theory::{build_joint_model, mi_oracle, skr_lower_bound};
use ris_keygen::Error;

/// RIS-assisted secret key generation: simulation and analysis.
#[derive(Parser, Debug)]
#[command(name = "ris-keygen", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the closed-form secret-key-rate lower bound (and the oracle).
    Bound,
    /// Estimate the key mismatch rate by Monte Carlo.
    Kmr,
    /// Estimate the average key throughput by Monte Carlo.
    Throughput,
    /// Sweep one parameter and emit a CSV table.
    Sweep {
        /// n_elements, snr_db, t_s or q_levels
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated sweep values.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        values: Vec<f64>,
        /// Attach the closed-form bound to every row.
        #[arg(long)]
        theory: bool,
    },
    /// Reproduce the curve family of a reference figure.
    Figure {
        /// fig3, fig4, fig5 or fig6
        name: Figure,
    },
    /// Run the internal consistency checks.
    Selftest,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat key=value file with SystemParams field names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Keys per sweep point.
    #[arg(long, global = true, default_value_t = DEFAULT_N_KEYS)]
    keys: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true, default_value_t = EstimationMode::Reduced)]
    mode: EstimationMode,
    /// CSV destination (a directory for `figure`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    n_elements: Option<usize>,
    #[arg(long, global = true)]
    t_s: Option<usize>,
    #[arg(long, global = true)]
    q: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, global = true)]
    f_blocks: Option<usize>,
    /// Direct channels only.
    #[arg(long, global = true)]
    no_ris: bool,
}

impl Common {
    fn params(&self) -> Result<SystemParams, Error> {
        let mut p = SystemParams::baseline();
        if let Some(path) = &self.config {
            p = load_config(p, path)?;
        }
        if let Some(n) = self.n_elements {
            p.n_elements = n;
        }
        if let Some(t_s) = self.t_s {
            p.t_s = t_s;
        }
        if let Some(q) = self.q {
            p.q_levels = q;
        }
        if let Some(f) = self.f_blocks {
            p.f_blocks = f;
        }
        if let Some(snr) = self.snr_db {
            p.noise_power = snr_db_to_noise_power(snr, p.power);
        }
        if self.no_ris {
            p.n_elements = 0;
        }
        Ok(p)
    }

    fn executor(&self) -> Result<Executor, Error> {
        Executor::with_workers(self.workers)
    }

    fn experiment(&self, axis: SweepAxis, values: Vec<f64>) -> Result<ExperimentConfig, Error> {
        Ok(ExperimentConfig {
            n_keys: self.keys,
            master_seed: self.seed,
            mode: self.mode,
            no_ris: self.no_ris,
            ..ExperimentConfig::new(self.params()?, axis, values)
        })
    }

    /// Single-point experiment at the configured parameters.
    fn single_point(&self) -> Result<ExperimentResult, Error> {
        let p = self.params()?;
        let config = ExperimentConfig {
            include_theory: true,
            ..self.experiment(SweepAxis::NElements, vec![p.n_elements as f64])?
        };
        let row = run_point(&config, 0, &self.executor()?)?;
        Ok(ExperimentResult {
            sweep_axis: config.sweep_axis,
            rows: vec![row],
        })
    }
}

fn emit(result: &ExperimentResult, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => write_csv(result, path),
        None => {
            print!("{}", csv_string(result));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let common = &cli.common;
    match cli.command {
        Command::Bound => {
            let p = common.params()?;
            let d = validate(&p)?;
            let bound = skr_lower_bound(&p, &d);
            let oracle = mi_oracle(&build_joint_model(&p, &d), p.t_s)?;
            println!("skr_lower_bound_bits_per_symbol = {}", format_number(bound));
            println!("mi_oracle_bits_per_symbol = {}", format_number(oracle));
        }
        Command::Kmr => {
            let result = common.single_point()?;
            let s = &result.rows[0].stats;
            println!("kmr = {}", format_number(s.kmr_hat));
            println!("ci_halfwidth = {}", format_number(s.ci_halfwidth));
            println!(
                "per_estimate_mismatch = {}",
                format_number(1.0 - s.per_estimate_match_hat)
            );
            println!("n_keys = {}", s.n_keys);
            if let Some(out) = &common.out {
                write_csv(&result, out)?;
            }
        }
        Command::Throughput => {
            let result = common.single_point()?;
            let row = &result.rows[0];
            let s = &row.stats;
            println!(
                "throughput_bits_per_symbol = {}",
                format_number(s.throughput)
            );
            println!("match_prob = {}", format_number(s.match_prob_hat));
            println!("mean_handshakes = {}", format_number(s.mean_handshakes));
            if let Some(bound) = row.theory_bound {
                println!("skr_lower_bound_bits_per_symbol = {}", format_number(bound));
            }
            println!("n_keys = {}", s.n_keys);
            if let Some(out) = &common.out {
                write_csv(&result, out)?;
            }
        }
        Command::Sweep {
            axis,
            values,
            theory,
        } => {
            let config = ExperimentConfig {
                include_theory: theory,
                ..common.experiment(axis, values)?
            };
            let result = run_sweep(&config, &common.executor()?)?;
            emit(&result, common.out.as_deref())?;
        }
        Command::Figure { name } => {
            let mut preset = figure_preset(name)
                .with_n_keys(common.keys)
                .with_seed(common.seed)
                .with_mode(common.mode);
            if let Some(n) = common.n_elements {
                preset = preset.with_ris_elements(n);
            }
            let executor = common.executor()?;
            if let Some(dir) = &common.out {
                fs::create_dir_all(dir).map_err(|source| Error::Io {
                    path: dir.clone(),
                    source,
                })?;
            }
            for curve in &preset.curves {
                let result = run_sweep(&curve.config, &executor)?;
                match &common.out {
                    Some(dir) => {
                        let path = dir.join(format!("{}_{}.csv", name, curve.label));
                        write_csv(&result, &path)?;
                        eprintln!("wrote {}", path.display());
                    }
                    None => {
                        println!("# {} {}", name, curve.label);
                        print!("{}", csv_string(&result));
                    }
                }
            }
        }
        Command::Selftest => {
            let report = run_selftest(&common.executor()?);
            for check in &report.checks {
                println!("{check}");
            }
            if !report.all_passed() {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
