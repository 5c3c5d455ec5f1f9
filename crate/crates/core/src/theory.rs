//! Secret-key-rate lower bound and a Gaussian mutual-information oracle.
//!
//! The estimates `(Ĝ_ab, Ĝ_ba, Ĝ_ae, Ĝ_be)` are zero-mean complex Gaussian
//! with second-order structure fixed by the aggregate variances and the LS
//! error variance `σ̄²`. [`skr_lower_bound`] evaluates the closed form
//!
//! ```text
//! R = 2/T_s · log2(1 + ρ_ab² / (σ̄² (2ρ_ab + σ̄²)))
//! ```
//!
//! while [`mi_oracle`] recomputes the same rate from the covariance matrices
//! through log-determinants, including Eve's side information, without
//! using that formula. The two routes must agree.

use std::f64::consts::LN_2;

use nalgebra::{Cholesky, DMatrix, Matrix2, Matrix3, SymmetricEigen};
use num_complex::Complex64;

use crate::channel::covariances;
use crate::error::{Error, Result};
use crate::params::{DerivedParams, SystemParams};

/// Second-order statistics of the channel estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianJointModel {
    /// Covariance of `(Ĝ_ab, Ĝ_ba)`.
    pub cov_ab_ba: Matrix2<Complex64>,
    /// Covariance of `(Ĝ_ab, Ĝ_ae, Ĝ_be)`; identical for `Ĝ_ba` in place of
    /// `Ĝ_ab`.
    pub cov_with_eve: Matrix3<Complex64>,
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn build_joint_model(params: &SystemParams, derived: &DerivedParams) -> GaussianJointModel {
    let c = covariances(params);
    let s = derived.est_noise_var;
    let zero = re(0.0);
    GaussianJointModel {
        cov_ab_ba: Matrix2::new(
            re(c.rho_ab + s),
            re(c.rho_ab),
            re(c.rho_ab),
            re(c.rho_ab + s),
        ),
        cov_with_eve: Matrix3::new(
            re(c.rho_ab + s),
            zero,
            zero,
            zero,
            re(c.rho_ae + s),
            zero,
            zero,
            zero,
            re(c.rho_be + s),
        ),
    }
}

/// Closed-form lower bound from `ρ_ab`, `σ̄²` and `T_s`, in bits per symbol.
///
/// Infinite when `σ̄² = 0` and `ρ_ab > 0`; zero when `ρ_ab = 0`.
pub fn skr_bound_from(rho_ab: f64, est_noise_var: f64, t_s: usize) -> f64 {
    if rho_ab == 0.0 {
        return 0.0;
    }
    if est_noise_var == 0.0 {
        return f64::INFINITY;
    }
    let snr = rho_ab * rho_ab / (est_noise_var * (2.0 * rho_ab + est_noise_var));
    snr.ln_1p() / LN_2 / (t_s / 2) as f64
}

pub fn skr_lower_bound(params: &SystemParams, derived: &DerivedParams) -> f64 {
    skr_bound_from(
        covariances(params).rho_ab,
        derived.est_noise_var,
        params.t_s,
    )
}

/// Mutual-information terms behind [`mi_oracle`], in bits per estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleTerms {
    /// `I(Ĝ_ab; Ĝ_ba)`.
    pub legit: f64,
    /// `I(Ĝ_ab; Ĝ_ae, Ĝ_be)`.
    pub eve_given_ab: f64,
    /// `I(Ĝ_ba; Ĝ_ae, Ĝ_be)`.
    pub eve_given_ba: f64,
}

impl OracleTerms {
    /// `I(Ĝ_ab; Ĝ_ba) − min(Eve terms)`, per estimate.
    pub fn rate_per_estimate(&self) -> f64 {
        self.legit - self.eve_given_ab.min(self.eve_given_ba)
    }
}

pub fn mi_oracle_terms(model: &GaussianJointModel) -> Result<OracleTerms> {
    let pair = DMatrix::from_iterator(2, 2, model.cov_ab_ba.iter().copied());
    let eve = DMatrix::from_iterator(3, 3, model.cov_with_eve.iter().copied());
    let legit = gaussian_mutual_information(&pair, &[0], &[1])?;
    // The model stores a single matrix for both legitimate estimates.
    let eve_given_ab = gaussian_mutual_information(&eve, &[0], &[1, 2])?;
    let eve_given_ba = eve_given_ab;
    Ok(OracleTerms {
        legit,
        eve_given_ab,
        eve_given_ba,
    })
}

/// Secret-key rate from the covariance matrices, scaled to bits per symbol.
pub fn mi_oracle(model: &GaussianJointModel, t_s: usize) -> Result<f64> {
    let terms = mi_oracle_terms(model)?;
    Ok(terms.rate_per_estimate() / (t_s / 2) as f64)
}

/// Relative eigenvalue tolerance for PSD and singularity decisions.
const EIG_TOL: f64 = 1e-12;

/// `I(X; Y)` in bits for jointly circularly symmetric complex Gaussian
/// vectors, where `x` and `y` index into the Hermitian covariance `cov`.
///
/// Computed as `log det Σ_xx − log det(Σ_xx − Σ_xy Σ_yy⁻¹ Σ_yx)`, with the
/// factorizations carried out in double-double arithmetic.
/// Zero-variance coordinates are constants and are dropped. A conditional
/// covariance that is singular means `X` is determined by `Y`, which gives
/// an infinite result. Indefinite input is rejected.
pub fn gaussian_mutual_information(
    cov: &DMatrix<Complex64>,
    x: &[usize],
    y: &[usize],
) -> Result<f64> {
    let n = cov.nrows();
    if cov.ncols() != n || x.iter().chain(y).any(|&i| i >= n) {
        return Err(Error::DimensionMismatch(format!(
            "index out of range for {n}x{n} covariance"
        )));
    }
    let all: Vec<usize> = x.iter().chain(y).copied().collect();
    check_psd(&sub(cov, &all, &all))?;

    let live = |idx: &[usize]| -> Vec<usize> {
        idx.iter()
            .copied()
            .filter(|&i| cov[(i, i)].re > 0.0)
            .collect()
    };
    let (x, y) = (live(x), live(y));
    if x.is_empty() || y.is_empty() {
        return Ok(0.0);
    }

    let sxx = sub(cov, &x, &x);
    let Ok(pivots_x) = compensated::ldl_pivots(&sxx) else {
        // Σ_xx itself singular: X has a deterministic direction.
        return Ok(f64::INFINITY);
    };
    let logdet_x: f64 = pivots_x.iter().map(|d| d.ln()).sum();

    // Pivots of (y, x) past the y block are those of Σ_xx − Σ_xy Σ_yy⁻¹ Σ_yx.
    let order: Vec<usize> = y.iter().chain(&x).copied().collect();
    match compensated::ldl_pivots(&sub(cov, &order, &order)) {
        Ok(pivots) => {
            let logdet_c: f64 = pivots[y.len()..].iter().map(|d| d.ln()).sum();
            Ok((logdet_x - logdet_c) / LN_2)
        }
        Err(k) if k >= y.len() => Ok(f64::INFINITY),
        Err(_) => {
            let syy = sub(cov, &y, &y);
            let sxy = sub(cov, &x, &y);
            let conditional = &sxx - &sxy * pseudo_inverse(&syy) * sxy.adjoint();
            match log_det(&conditional) {
                Some(logdet_c) => Ok((logdet_x - logdet_c) / LN_2),
                None => Ok(f64::INFINITY),
            }
        }
    }
}

fn sub(m: &DMatrix<Complex64>, rows: &[usize], cols: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn check_psd(m: &DMatrix<Complex64>) -> Result<()> {
    if m.nrows() == 0 {
        return Ok(());
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EIG_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::IndefiniteCovariance {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Natural log-determinant of a Hermitian positive-definite matrix, or
/// `None` if it is singular.
fn log_det(m: &DMatrix<Complex64>) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)].re;
        if !(d > 0.0) {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

fn pseudo_inverse(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > EIG_TOL * scale {
            let v = eig.eigenvectors.column(k);
            out += (v * v.adjoint()).map(|z| z / lambda);
        }
    }
    out
}

/// LDLᴴ factorization in double-double arithmetic (about 106 significant
/// bits), so Schur complements of nearly singular blocks keep their digits.
mod compensated {
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    use super::EIG_TOL;

    #[derive(Clone, Copy, Debug, PartialEq)]
    pub struct Dd {
        hi: f64,
        lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd {
            hi: s,
            lo: b - (s - a),
        }
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

        pub fn from_f64(x: f64) -> Dd {
            Dd { hi: x, lo: 0.0 }
        }

        pub fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let (t, f) = two_sum(self.lo, o.lo);
            let r = quick_two_sum(s, e + t);
            quick_two_sum(r.hi, r.lo + f)
        }

        pub fn neg(self) -> Dd {
            Dd {
                hi: -self.hi,
                lo: -self.lo,
            }
        }

        pub fn sub(self, o: Dd) -> Dd {
            self.add(o.neg())
        }

        pub fn mul(self, o: Dd) -> Dd {
            let p = self.hi * o.hi;
            let e = self.hi.mul_add(o.hi, -p);
            quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
        }

        pub fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self.sub(o.mul(Dd::from_f64(q1)));
            let q2 = r.hi / o.hi;
            let r = r.sub(o.mul(Dd::from_f64(q2)));
            let q3 = r.hi / o.hi;
            quick_two_sum(q1, q2).add(Dd::from_f64(q3))
        }

        pub fn ln(self) -> f64 {
            self.hi.ln() + self.lo / self.hi
        }

        pub fn hi(self) -> f64 {
            self.hi
        }
    }

    #[derive(Clone, Copy, Debug)]
    struct Cdd {
        re: Dd,
        im: Dd,
    }

    impl Cdd {
        const ZERO: Cdd = Cdd {
            re: Dd::ZERO,
            im: Dd::ZERO,
        };

        fn from_c64(z: Complex64) -> Cdd {
            Cdd {
                re: Dd::from_f64(z.re),
                im: Dd::from_f64(z.im),
            }
        }

        fn sub(self, o: Cdd) -> Cdd {
            Cdd {
                re: self.re.sub(o.re),
                im: self.im.sub(o.im),
            }
        }

        /// `self · conj(o)`.
        fn mul_conj(self, o: Cdd) -> Cdd {
            Cdd {
                re: self.re.mul(o.re).add(self.im.mul(o.im)),
                im: self.im.mul(o.re).sub(self.re.mul(o.im)),
            }
        }

        fn scale(self, d: Dd) -> Cdd {
            Cdd {
                re: self.re.mul(d),
                im: self.im.mul(d),
            }
        }

        fn unscale(self, d: Dd) -> Cdd {
            Cdd {
                re: self.re.div(d),
                im: self.im.div(d),
            }
        }

        fn norm_sqr(self) -> Dd {
            self.re.mul(self.re).add(self.im.mul(self.im))
        }
    }

    /// Diagonal of `D` in `A = L D Lᴴ`, or the index of the first pivot
    /// that is not positive relative to its diagonal entry.
    pub fn ldl_pivots(a: &DMatrix<Complex64>) -> Result<Vec<Dd>, usize> {
        let n = a.nrows();
        let mut l = vec![Cdd::ZERO; n * n];
        let mut d = Vec::with_capacity(n);
        for j in 0..n {
            let mut dj = Dd::from_f64(a[(j, j)].re);
            for k in 0..j {
                dj = dj.sub(l[j * n + k].norm_sqr().mul(d[k]));
            }
            if !(dj.hi() > EIG_TOL * a[(j, j)].re) {
                return Err(j);
            }
            for i in j + 1..n {
                let mut v = Cdd::from_c64(a[(i, j)]);
                for k in 0..j {
                    v = v.sub(l[i * n + k].mul_conj(l[j * n + k]).scale(d[k]));
                }
                l[i * n + j] = v.unscale(dj);
            }
            d.push(dj);
        }
        Ok(d)
    }

}
