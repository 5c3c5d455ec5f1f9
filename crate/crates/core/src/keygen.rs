//! Phase quantization, key assembly and key-agreement statistics.
//!
//! Over `F` blocks, switching period `ℓ` of every block contributes one
//! quantized phase to key `ℓ`, so `M = T_k / T_s` keys of
//! `L = F log2(Q)` bits are built in parallel. Keys are compared for exact
//! equality; mismatched keys are discarded and the handshake is repeated.

use std::f64::consts::TAU;
use std::ops::{Add, AddAssign};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::estimation::EstimateSet;
use crate::params::{DerivedParams, SystemParams};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Four-quadrant phase of `z`, wrapped to `[0, 2π)`. Zero maps to 0.
pub fn phase_of(z: Complex64) -> f64 {
    let theta = z.im.atan2(z.re);
    if theta >= 0.0 {
        return theta;
    }
    let wrapped = theta + TAU;
    // A tiny negative angle can round up to exactly 2π.
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Quantizer level `q ∈ 1..=Q` with `θ ∈ [2π(q−1)/Q, 2πq/Q)`.
///
/// Levels nest: the level at `Q` is always `⌈level at 2Q / 2⌉`, because
/// scaling `θ` by a power of two is exact in floating point.
pub fn quantize_phase(theta: f64, q_levels: usize) -> Result<usize> {
    if !(0.0..TAU).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "phase {theta} outside [0, 2π)"
        )));
    }
    if q_levels < 2 || !q_levels.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "q_levels = {q_levels} is not a power of two >= 2"
        )));
    }
    let bin = (theta * q_levels as f64 / TAU).floor() as usize;
    Ok(bin.min(q_levels - 1) + 1)
}

/// Big-endian binary encoding of `q − 1` on `log2(Q)` bits.
pub fn bits_from_level(level: usize, q_levels: usize) -> Result<Vec<bool>> {
    if !q_levels.is_power_of_two() || q_levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "q_levels = {q_levels} is not a power of two >= 2"
        )));
    }
    if level == 0 || level > q_levels {
        return Err(Error::InvalidArgument(format!(
            "level {level} outside 1..={q_levels}"
        )));
    }
    let width = q_levels.trailing_zeros();
    let value = level - 1;
    Ok((0..width).rev().map(|b| (value >> b) & 1 == 1).collect())
}

/// Renders a bit sequence as a `0`/`1` string.
pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Owner {
    Alice,
    Bob,
}

/// The `M` keys one node derived over `F` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyMaterial {
    pub owner: Owner,
    /// `levels[ℓ][f]`: quantizer output for period `ℓ` of block `f`.
    pub levels: Vec<Vec<usize>>,
    /// `keys[ℓ]`: the `L`-bit key built from `levels[ℓ]`.
    pub keys: Vec<Vec<bool>>,
}

impl KeyMaterial {
    fn from_levels(owner: Owner, levels: Vec<Vec<usize>>, q_levels: usize) -> Result<Self> {
        let keys = levels
            .iter()
            .map(|row| {
                let mut key = Vec::with_capacity(row.len() * q_levels.trailing_zeros() as usize);
                for &q in row {
                    key.extend(bits_from_level(q, q_levels)?);
                }
                Ok(key)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            owner,
            levels,
            keys,
        })
    }

    pub fn n_keys(&self) -> usize {
        self.keys.len()
    }
}

/// Builds Alice's keys from `ĝ_ba` and Bob's from `ĝ_ab`.
pub fn assemble_keys(
    estimate_sets: &[EstimateSet],
    params: &SystemParams,
    derived: &DerivedParams,
) -> Result<(KeyMaterial, KeyMaterial)> {
    if estimate_sets.len() != params.f_blocks {
        return Err(Error::DimensionMismatch(format!(
            "{} estimate sets for F = {}",
            estimate_sets.len(),
            params.f_blocks
        )));
    }
    let periods = derived.periods_per_block;
    if let Some(set) = estimate_sets
        .iter()
        .find(|s| s.g_hat_ab.len() != periods || s.g_hat_ba.len() != periods)
    {
        return Err(Error::DimensionMismatch(format!(
            "block {} has {} periods, expected {periods}",
            set.block_index,
            set.periods()
        )));
    }

    let q = params.q_levels;
    let levels_of = |pick: fn(&EstimateSet) -> &[Complex64]| -> Result<Vec<Vec<usize>>> {
        (0..periods)
            .map(|l| {
                estimate_sets
                    .iter()
                    .map(|set| quantize_phase(phase_of(pick(set)[l]), q))
                    .collect()
            })
            .collect()
    };
    let alice = KeyMaterial::from_levels(Owner::Alice, levels_of(|s| &s.g_hat_ba)?, q)?;
    let bob = KeyMaterial::from_levels(Owner::Bob, levels_of(|s| &s.g_hat_ab)?, q)?;
    Ok((alice, bob))
}

/// Integer tallies from which [`ProtocolStats`] are computed. Merging is
/// plain addition, so any grouping or order of rounds gives the same totals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MatchCounts {
    /// Key-generation rounds (handshakes) tallied.
    pub rounds: u64,
    pub keys: u64,
    pub matched_keys: u64,
    /// Σ over rounds of (matched keys in the round)².
    pub matched_keys_sq: u64,
    pub estimates: u64,
    pub matched_estimates: u64,
}

impl MatchCounts {
    /// Compares the keys of one round.
    pub fn tally(alice: &KeyMaterial, bob: &KeyMaterial) -> Result<Self> {
        if alice.levels.len() != bob.levels.len()
            || alice
                .levels
                .iter()
                .zip(&bob.levels)
                .any(|(a, b)| a.len() != b.len())
            || alice
                .keys
                .iter()
                .zip(&bob.keys)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::DimensionMismatch(
                "Alice's and Bob's key material differ in shape".into(),
            ));
        }
        let matched_keys = alice
            .keys
            .iter()
            .zip(&bob.keys)
            .filter(|(a, b)| a == b)
            .count() as u64;
        let (estimates, matched_estimates) = alice
            .levels
            .iter()
            .zip(&bob.levels)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold((0u64, 0u64), |(n, m), (x, y)| {
                (n + 1, m + u64::from(x == y))
            });
        Ok(Self {
            rounds: 1,
            keys: alice.keys.len() as u64,
            matched_keys,
            matched_keys_sq: matched_keys * matched_keys,
            estimates,
            matched_estimates,
        })
    }
}

impl Add for MatchCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            rounds: self.rounds + rhs.rounds,
            keys: self.keys + rhs.keys,
            matched_keys: self.matched_keys + rhs.matched_keys,
            matched_keys_sq: self.matched_keys_sq + rhs.matched_keys_sq,
            estimates: self.estimates + rhs.estimates,
            matched_estimates: self.matched_estimates + rhs.matched_estimates,
        }
    }
}

impl AddAssign for MatchCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Key-agreement metrics pooled over all rounds and all `M` keys.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolStats {
    pub match_prob_hat: f64,
    /// Key mismatch rate, `1 − p̂`.
    pub kmr_hat: f64,
    /// Fraction of single-estimate quantized phases that agree.
    pub per_estimate_match_hat: f64,
    /// Expected handshakes until a key matches, `1 / p̂` (infinite at p̂ = 0).
    pub mean_handshakes: f64,
    /// Average key throughput in bits per symbol, `p̂ log2(Q) / (T_s / 2)`.
    pub throughput: f64,
    /// 95% normal-approximation half-width on `p̂`. Keys from the same round
    /// share their channel blocks, so the spread is taken across rounds.
    pub ci_halfwidth: f64,
    pub n_keys: u64,
}

/// `p log2(Q) / (T_s / 2)`.
pub fn throughput_of(match_prob: f64, q_levels: usize, t_s: usize) -> f64 {
    match_prob * f64::from(q_levels.trailing_zeros()) / (t_s / 2) as f64
}

impl ProtocolStats {
    pub fn from_counts(counts: &MatchCounts, q_levels: usize, t_s: usize) -> Result<Self> {
        if counts.keys == 0 {
            return Err(Error::InvalidArgument("no keys to evaluate".into()));
        }
        let keys = counts.keys as f64;
        let p = counts.matched_keys as f64 / keys;
        let rounds = counts.rounds as f64;
        let ci_halfwidth = if counts.rounds >= 2 {
            // Per-round match fractions x_r = m_r / K with K keys per round.
            let per_round = keys / rounds;
            let sum_sq = counts.matched_keys_sq as f64 / (per_round * per_round);
            let var = ((sum_sq - rounds * p * p) / (rounds - 1.0)).max(0.0);
            Z_95 * (var / rounds).sqrt()
        } else {
            Z_95 * (p * (1.0 - p) / keys).sqrt()
        };
        Ok(Self {
            match_prob_hat: p,
            kmr_hat: 1.0 - p,
            per_estimate_match_hat: if counts.estimates == 0 {
                f64::NAN
            } else {
                counts.matched_estimates as f64 / counts.estimates as f64
            },
            mean_handshakes: if p > 0.0 { 1.0 / p } else { f64::INFINITY },
            throughput: throughput_of(p, q_levels, t_s),
            ci_halfwidth,
            n_keys: counts.keys,
        })
    }

    /// `kmr == 1 − p` and `throughput == p log2(Q) / (T_s / 2)`, bit for bit.
    pub fn identities_hold(&self, q_levels: usize, t_s: usize) -> bool {
        self.kmr_hat == 1.0 - self.match_prob_hat
            && self.throughput == throughput_of(self.match_prob_hat, q_levels, t_s)
    }
}

/// Pools the outcome of many rounds into one set of statistics.
pub fn match_stats(
    rounds: &[(KeyMaterial, KeyMaterial)],
    params: &SystemParams,
) -> Result<ProtocolStats> {
    let counts = rounds
        .iter()
        .map(|(a, b)| MatchCounts::tally(a, b))
        .sum::<Result<MatchCounts>>()?;
    ProtocolStats::from_counts(&counts, params.q_levels, params.t_s)
}

/// Handshakes until success for `n_keys` independent keys, each matching
/// with probability `match_prob`. Support is `1, 2, 3, …`.
pub fn simulate_handshake_counts<R: Rng + ?Sized>(
    rng: &mut R,
    match_prob: f64,
    n_keys: usize,
) -> Result<Vec<u64>> {
    if !(match_prob > 0.0 && match_prob <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "match probability {match_prob} outside (0, 1]"
        )));
    }
    let failures = Geometric::new(match_prob).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((0..n_keys).map(|_| failures.sample(rng) + 1).collect())
}
