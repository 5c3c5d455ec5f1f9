//! Block-fading channel realizations, RIS phase schedules and the aggregate
//! channels they induce.
//!
//! All links are circularly symmetric complex Gaussian and constant over a
//! coherence block. Reciprocity is structural: a single `h_ab` is stored for
//! both directions, and each RIS segment is stored once, from the node's
//! side. The RIS→node channels are the conjugates of the stored node→RIS
//! vectors, applied inside [`aggregate`].

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::{DerivedParams, SystemParams};

/// Draws one `CN(0, variance)` sample.
pub fn sample_cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Draws an angle uniformly from `[0, 2π)`.
pub fn sample_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let theta = rng.random::<f64>() * TAU;
    if theta >= TAU {
        0.0
    } else {
        theta
    }
}

/// One coherence block's realization of every link.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBlock {
    /// Alice↔Bob direct channel (both directions).
    pub h_ab: Complex64,
    pub h_ae: Complex64,
    pub h_be: Complex64,
    /// Alice→RIS, one entry per element.
    pub h_ar: Vec<Complex64>,
    /// Bob→RIS.
    pub h_br: Vec<Complex64>,
    /// RIS→Eve.
    pub h_re: Vec<Complex64>,
}

impl ChannelBlock {
    pub fn n_elements(&self) -> usize {
        self.h_ar.len()
    }
}

/// Per-period RIS phase configurations for one block: `M` rows of `N`
/// angles in `[0, 2π)`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RisSchedule {
    phases: Vec<f64>,
    periods: usize,
    elements: usize,
}

impl RisSchedule {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let periods = rows.len();
        let elements = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != elements) {
            return Err(Error::DimensionMismatch("ragged RIS schedule".into()));
        }
        if let Some(bad) = rows.iter().flatten().find(|t| !(0.0..TAU).contains(*t)) {
            return Err(Error::InvalidArgument(format!(
                "RIS phase {bad} outside [0, 2π)"
            )));
        }
        Ok(Self {
            phases: rows.into_iter().flatten().collect(),
            periods,
            elements,
        })
    }

    /// Schedule with `periods` empty rows, as used without an RIS.
    pub fn empty(periods: usize) -> Self {
        Self {
            phases: Vec::new(),
            periods,
            elements: 0,
        }
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn row(&self, period: usize) -> &[f64] {
        &self.phases[period * self.elements..(period + 1) * self.elements]
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// Which aggregate channel to compose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Link {
    AliceToBob,
    BobToAlice,
    AliceToEve,
    BobToEve,
}

/// Aggregate channel variances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covariances {
    pub rho_ab: f64,
    pub rho_ae: f64,
    pub rho_be: f64,
}

pub fn sample_block<R: Rng + ?Sized>(rng: &mut R, params: &SystemParams) -> ChannelBlock {
    let h_ab = sample_cn(rng, params.beta_ab);
    let h_ae = sample_cn(rng, params.beta_ae);
    let h_be = sample_cn(rng, params.beta_be);
    let n = params.n_elements;
    let h_ar = (0..n).map(|_| sample_cn(rng, params.beta_ar)).collect();
    let h_br = (0..n).map(|_| sample_cn(rng, params.beta_rb)).collect();
    let h_re = (0..n).map(|_| sample_cn(rng, params.beta_re)).collect();
    ChannelBlock {
        h_ab,
        h_ae,
        h_be,
        h_ar,
        h_br,
        h_re,
    }
}

pub fn sample_schedule<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SystemParams,
    derived: &DerivedParams,
) -> RisSchedule {
    let periods = derived.periods_per_block;
    let elements = params.n_elements;
    RisSchedule {
        phases: (0..periods * elements).map(|_| sample_phase(rng)).collect(),
        periods,
        elements,
    }
}

fn check_dims(block: &ChannelBlock, schedule: &RisSchedule, period: usize) -> Result<()> {
    if period >= schedule.periods {
        return Err(Error::PeriodOutOfRange {
            index: period,
            periods: schedule.periods,
        });
    }
    let n = block.h_ar.len();
    if block.h_br.len() != n || block.h_re.len() != n || schedule.elements != n {
        return Err(Error::DimensionMismatch(format!(
            "block has {n} RIS elements, schedule has {}",
            schedule.elements
        )));
    }
    Ok(())
}

/// `g = h_direct + Σ_n conj(h_{i,n}) e^{jθ_n} h'_n` for one period.
///
/// `period` is zero-based. Both directions of the Alice–Bob link evaluate
/// the same expression, so they agree bit for bit.
pub fn aggregate(
    block: &ChannelBlock,
    schedule: &RisSchedule,
    period: usize,
    link: Link,
) -> Result<Complex64> {
    check_dims(block, schedule, period)?;
    let row = schedule.row(period);
    Ok(match link {
        Link::AliceToBob | Link::BobToAlice => cascade_ab(block, row),
        Link::AliceToEve => cascade_ae(block, row),
        Link::BobToEve => cascade_be(block, row),
    })
}

/// The three distinct aggregates `[g_ab, g_ae, g_be]` of one period.
pub fn aggregate_all(
    block: &ChannelBlock,
    schedule: &RisSchedule,
    period: usize,
) -> Result<[Complex64; 3]> {
    check_dims(block, schedule, period)?;
    let row = schedule.row(period);
    Ok([
        cascade_ab(block, row),
        cascade_ae(block, row),
        cascade_be(block, row),
    ])
}

// h_rb is the conjugate of the stored h_br.
fn cascade_ab(block: &ChannelBlock, row: &[f64]) -> Complex64 {
    let mut g = block.h_ab;
    for ((a, b), &theta) in block.h_ar.iter().zip(&block.h_br).zip(row) {
        g += a.conj() * Complex64::cis(theta) * b.conj();
    }
    g
}

fn cascade_ae(block: &ChannelBlock, row: &[f64]) -> Complex64 {
    let mut g = block.h_ae;
    for ((a, e), &theta) in block.h_ar.iter().zip(&block.h_re).zip(row) {
        g += a.conj() * Complex64::cis(theta) * e;
    }
    g
}

fn cascade_be(block: &ChannelBlock, row: &[f64]) -> Complex64 {
    let mut g = block.h_be;
    for ((b, e), &theta) in block.h_br.iter().zip(&block.h_re).zip(row) {
        g += b.conj() * Complex64::cis(theta) * e;
    }
    g
}

pub fn covariances(params: &SystemParams) -> Covariances {
    let n = params.n_elements as f64;
    Covariances {
        rho_ab: params.beta_ab + n * params.beta_ar * params.beta_rb,
        rho_ae: params.beta_ae + n * params.beta_ar * params.beta_re,
        rho_be: params.beta_be + n * params.beta_rb * params.beta_re,
    }
}
