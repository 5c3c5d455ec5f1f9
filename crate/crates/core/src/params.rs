//! System parameters, derived quantities and the seeding contract.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stochastic step of the simulation.
pub type SimRng = ChaCha8Rng;

/// Scenario constants. Powers are in watts, the `beta_*` fields are the
/// (dimensionless) variances of the Rayleigh links.
///
/// `n_elements == 0` encodes the system without an RIS.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub n_elements: usize,
    /// Symbols reserved for key generation per coherence block.
    pub t_k: usize,
    /// Symbols per RIS switching period.
    pub t_s: usize,
    /// Coherence blocks combined into one key.
    pub f_blocks: usize,
    pub q_levels: usize,
    pub power: f64,
    pub noise_power: f64,
    pub beta_ab: f64,
    pub beta_ae: f64,
    pub beta_be: f64,
    pub beta_ar: f64,
    pub beta_rb: f64,
    pub beta_re: f64,
}

impl SystemParams {
    /// Baseline scenario: `T_k = 40`, `F = 100`, `P = 1 W`, `σ² = 1 W`,
    /// unit direct links and 0.7 RIS segments, with `T_s = 2`, `Q = 2` and a
    /// single RIS element.
    pub fn baseline() -> Self {
        Self {
            n_elements: 1,
            t_k: 40,
            t_s: 2,
            f_blocks: 100,
            q_levels: 2,
            power: 1.0,
            noise_power: 1.0,
            beta_ab: 1.0,
            beta_ae: 1.0,
            beta_be: 1.0,
            beta_ar: 0.7,
            beta_rb: 0.7,
            beta_re: 0.7,
        }
    }

    pub fn has_ris(&self) -> bool {
        self.n_elements > 0
    }

    pub fn validate(&self) -> Result<DerivedParams, ParamError> {
        validate(self)
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::baseline()
    }
}

/// A broken [`SystemParams`] invariant.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("TS_OUT_OF_RANGE: t_s = {t_s} must satisfy 2 <= t_s <= t_k = {t_k}")]
    TsOutOfRange { t_s: usize, t_k: usize },
    #[error("TS_NOT_DIVIDING_TK: t_s = {t_s} does not divide t_k = {t_k}")]
    TsNotDividingTk { t_s: usize, t_k: usize },
    #[error("TS_ODD: t_s = {t_s} must be even")]
    TsOdd { t_s: usize },
    #[error("Q_NOT_POWER_OF_TWO: q_levels = {q} must be a power of two >= 2")]
    QNotPowerOfTwo { q: usize },
    #[error("F_ZERO: f_blocks must be >= 1")]
    FBlocksZero,
    #[error("POWER_NOT_POSITIVE: power = {0} must be > 0")]
    PowerNotPositive(f64),
    #[error("NOISE_NEGATIVE: noise_power = {0} must be >= 0")]
    NoiseNegative(f64),
    #[error("BETA_NEGATIVE: {name} = {value} must be >= 0")]
    BetaNegative { name: &'static str, value: f64 },
}

impl ParamError {
    pub fn code(&self) -> &'static str {
        match self {
            ParamError::TsOutOfRange { .. } => "TS_OUT_OF_RANGE",
            ParamError::TsNotDividingTk { .. } => "TS_NOT_DIVIDING_TK",
            ParamError::TsOdd { .. } => "TS_ODD",
            ParamError::QNotPowerOfTwo { .. } => "Q_NOT_POWER_OF_TWO",
            ParamError::FBlocksZero => "F_ZERO",
            ParamError::PowerNotPositive(_) => "POWER_NOT_POSITIVE",
            ParamError::NoiseNegative(_) => "NOISE_NEGATIVE",
            ParamError::BetaNegative { .. } => "BETA_NEGATIVE",
        }
    }
}

/// Quantities computed once from validated parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedParams {
    /// Variance of the LS estimation error, `2σ² / (T_s P)`.
    pub est_noise_var: f64,
    /// Switching periods per block, `M = T_k / T_s`. Also the number of keys
    /// generated in parallel.
    pub periods_per_block: usize,
    /// Key bits contributed by one estimate, `log2(Q)`.
    pub bits_per_estimate: usize,
    /// Key length `L = F log2(Q)`.
    pub key_len_bits: usize,
    pub snr_linear: f64,
}

/// Checks every invariant of `params`, in a fixed order, and returns the
/// first violation or the derived quantities.
pub fn validate(params: &SystemParams) -> Result<DerivedParams, ParamError> {
    let SystemParams { t_s, t_k, .. } = *params;
    if t_s < 2 || t_s > t_k {
        return Err(ParamError::TsOutOfRange { t_s, t_k });
    }
    if t_k % t_s != 0 {
        return Err(ParamError::TsNotDividingTk { t_s, t_k });
    }
    if t_s % 2 != 0 {
        return Err(ParamError::TsOdd { t_s });
    }
    if params.q_levels < 2 || !params.q_levels.is_power_of_two() {
        return Err(ParamError::QNotPowerOfTwo { q: params.q_levels });
    }
    if params.f_blocks == 0 {
        return Err(ParamError::FBlocksZero);
    }
    // `!(x > 0)` also rejects NaN.
    if !(params.power > 0.0) || !params.power.is_finite() {
        return Err(ParamError::PowerNotPositive(params.power));
    }
    if !(params.noise_power >= 0.0) || !params.noise_power.is_finite() {
        return Err(ParamError::NoiseNegative(params.noise_power));
    }
    for (name, value) in [
        ("beta_ab", params.beta_ab),
        ("beta_ae", params.beta_ae),
        ("beta_be", params.beta_be),
        ("beta_ar", params.beta_ar),
        ("beta_rb", params.beta_rb),
        ("beta_re", params.beta_re),
    ] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(ParamError::BetaNegative { name, value });
        }
    }

    let bits_per_estimate = params.q_levels.trailing_zeros() as usize;
    Ok(DerivedParams {
        est_noise_var: 2.0 * params.noise_power / (t_s as f64 * params.power),
        periods_per_block: t_k / t_s,
        bits_per_estimate,
        key_len_bits: params.f_blocks * bits_per_estimate,
        snr_linear: params.power / params.noise_power,
    })
}

/// Noise power giving `snr_db` for transmit power `power`, with
/// `SNR = P / σ²`.
pub fn snr_db_to_noise_power(snr_db: f64, power: f64) -> f64 {
    power / 10f64.powf(snr_db / 10.0)
}

pub fn noise_power_to_snr_db(noise_power: f64, power: f64) -> f64 {
    10.0 * (power / noise_power).log10()
}

/// Counter-based seeding: a master seed plus a substream index.
///
/// The same pair always yields the same sample sequence, so work split
/// across threads reproduces a serial run exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub master_seed: u64,
    pub stream_id: u64,
}

/// Bits of the stream id reserved for the trial index.
const TRIAL_BITS: u32 = 40;

impl RandomSource {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Substream for one Monte Carlo trial of one sweep point. Distinct
    /// `(point, trial)` pairs never share a stream, and a point's streams do
    /// not depend on how many other points the sweep has.
    pub fn for_trial(master_seed: u64, point: usize, trial: u64) -> Self {
        debug_assert!(trial < 1 << TRIAL_BITS);
        Self::new(master_seed, ((point as u64) << TRIAL_BITS) | trial)
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = SimRng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

impl fmt::Display for RandomSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed {} / stream {:#x}",
            self.master_seed, self.stream_id
        )
    }
}
