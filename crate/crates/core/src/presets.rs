//! Curve families of the four reference figures.
//!
//! Every preset starts from [`SystemParams::baseline`] with single-block keys
//! (`F = 1`), so each reported mismatch rate is that of one quantized phase
//! and the throughput is `(1 − KMR) log2(Q) / (T_s / 2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::EstimationMode;
use crate::experiment::{ExperimentConfig, SweepAxis};
use crate::params::SystemParams;

/// RIS size used by the SNR sweeps, which do not fix one.
pub const SNR_SWEEP_N_ELEMENTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Figure {
    /// KMR versus number of RIS elements.
    Fig3,
    /// KMR versus SNR.
    Fig4,
    /// Throughput versus number of RIS elements, with the bound.
    Fig5,
    /// Throughput versus SNR, with the bound.
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    fn sweeps_snr(self) -> bool {
        matches!(self, Figure::Fig4 | Figure::Fig6)
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown figure {s:?} (expected fig3, fig4, fig5 or fig6)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    /// File-name friendly identifier, e.g. `ris_ts2`.
    pub label: String,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FigurePreset {
    pub figure: Figure,
    pub curves: Vec<Curve>,
}

impl FigurePreset {
    pub fn with_n_keys(mut self, n_keys: u64) -> Self {
        self.curves
            .iter_mut()
            .for_each(|c| c.config.n_keys = n_keys);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.curves
            .iter_mut()
            .for_each(|c| c.config.master_seed = seed);
        self
    }

    pub fn with_mode(mut self, mode: EstimationMode) -> Self {
        self.curves.iter_mut().for_each(|c| c.config.mode = mode);
        self
    }

    /// Overrides the RIS size of the SNR sweeps. No effect on the
    /// element-count sweeps or on the no-RIS curves.
    pub fn with_ris_elements(mut self, n: usize) -> Self {
        if self.figure.sweeps_snr() {
            self.curves
                .iter_mut()
                .filter(|c| !c.config.no_ris)
                .for_each(|c| c.config.base.n_elements = n);
        }
        self
    }

    pub fn curve(&self, label: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.label == label)
    }
}

fn curve(label: &str, base: &SystemParams, axis: SweepAxis, values: &[f64], theory: bool) -> Curve {
    let mut config = ExperimentConfig::new(base.clone(), axis, values.to_vec());
    config.include_theory = theory;
    Curve {
        label: label.to_owned(),
        config,
    }
}

pub fn figure_preset(figure: Figure) -> FigurePreset {
    let baseline = SystemParams {
        f_blocks: 1,
        q_levels: 2,
        ..SystemParams::baseline()
    };
    let t_k = baseline.t_k;
    let with = |t_s: usize, q: usize, n: usize| SystemParams {
        t_s,
        q_levels: q,
        n_elements: n,
        ..baseline.clone()
    };
    let theory = matches!(figure, Figure::Fig5 | Figure::Fig6);

    let curves = if figure.sweeps_snr() {
        let snr: Vec<f64> = (-4..=8).map(|k| 5.0 * k as f64).collect();
        let n = SNR_SWEEP_N_ELEMENTS;
        let axis = SweepAxis::SnrDb;
        let mut no_ris = curve("no_ris", &with(t_k, 2, 0), axis, &snr, theory);
        no_ris.config.no_ris = true;
        vec![
            curve("ris_ts2_q2", &with(2, 2, n), axis, &snr, theory),
            curve("ris_ts2_q4", &with(2, 4, n), axis, &snr, theory),
            curve("ris_ts2_q8", &with(2, 8, n), axis, &snr, theory),
            curve("ris_tstk", &with(t_k, 2, n), axis, &snr, theory),
            no_ris,
        ]
    } else {
        let ns: Vec<f64> = (0..7).map(|k| (1 + 10 * k) as f64).collect();
        let axis = SweepAxis::NElements;
        let mut no_ris = curve("no_ris", &with(t_k, 2, 0), axis, &ns, theory);
        no_ris.config.no_ris = true;
        vec![
            curve("ris_ts2", &with(2, 2, 1), axis, &ns, theory),
            curve("ris_ts10", &with(10, 2, 1), axis, &ns, theory),
            curve("ris_tstk", &with(t_k, 2, 1), axis, &ns, theory),
            no_ris,
        ]
    };
    FigurePreset { figure, curves }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_sweeps() {
        for fig in [Figure::Fig3, Figure::Fig5] {
            let p = figure_preset(fig);
            let labels: Vec<&str> = p.curves.iter().map(|c| c.label.as_str()).collect();
            assert_eq!(labels, ["ris_ts2", "ris_ts10", "ris_tstk", "no_ris"]);
            for c in &p.curves {
                assert_eq!(c.config.sweep_axis, SweepAxis::NElements);
                assert_eq!(
                    c.config.sweep_values,
                    [1.0, 11.0, 21.0, 31.0, 41.0, 51.0, 61.0]
                );
                assert_eq!(c.config.base.q_levels, 2);
                assert_eq!(c.config.include_theory, fig == Figure::Fig5);
                c.config.validate().unwrap();
            }
            assert_eq!(p.curve("ris_tstk").unwrap().config.base.t_s, 40);
            assert!(p.curve("no_ris").unwrap().config.no_ris);
        }
    }

    #[test]
    fn snr_sweeps() {
        for fig in [Figure::Fig4, Figure::Fig6] {
            let p = figure_preset(fig);
            assert_eq!(p.curves.len(), 5);
            let qs: Vec<usize> = p.curves[..3]
                .iter()
                .map(|c| c.config.base.q_levels)
                .collect();
            assert_eq!(qs, [2, 4, 8]);
            for c in &p.curves {
                assert_eq!(c.config.sweep_axis, SweepAxis::SnrDb);
                assert_eq!(c.config.sweep_values.len(), 13);
                assert_eq!(c.config.sweep_values[0], -20.0);
                assert_eq!(c.config.sweep_values[12], 40.0);
                c.config.validate().unwrap();
            }
            assert_eq!(p.curves[0].config.base.n_elements, SNR_SWEEP_N_ELEMENTS);
            let p = p.with_ris_elements(100);
            assert_eq!(p.curves[0].config.base.n_elements, 100);
            assert_eq!(p.curve("no_ris").unwrap().config.base.n_elements, 0);
        }
    }

    #[test]
    fn names() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
        assert!("fig7".parse::<Figure>().is_err());
    }

    #[test]
    fn overrides() {
        let p = figure_preset(Figure::Fig3)
            .with_n_keys(5)
            .with_seed(11)
            .with_mode(EstimationMode::Pilot)
            .with_ris_elements(3);
        for c in &p.curves {
            assert_eq!((c.config.n_keys, c.config.master_seed), (5, 11));
            assert_eq!(c.config.mode, EstimationMode::Pilot);
        }
        assert_eq!(p.curves[0].config.base.n_elements, 1);
    }
}
