//! Exact posterior of the transformed target `β* = β_T + Γβ₋ₖ`.
//!
//! The likelihood contributes `N(m, Σₖ)` with `m = ΣₖX_TᵀY`; the slab `g`
//! multiplies it. Three choices are supported: flat (`g ∝ 1`), Gaussian
//! `N(0, σₙ²)` for `k = 1`, and Laplace with scale `σₙ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dist::{log_normal_cdf, normal_cdf, sample_truncated_above, sample_truncated_below};
use crate::error::{dim, invalid, Error, Result};
use crate::linalg::{mvn_sample_with_factor, SpdMatrix};
use crate::preprocess::PreprocessedData;

pub const MH_BURN_IN: usize = 5000;
pub const MH_THIN: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GPrior {
    #[default]
    Improper,
    Gaussian {
        sigma_n: f64,
    },
    Laplace {
        sigma_n: f64,
    },
}

impl GPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            GPrior::Improper => Ok(()),
            GPrior::Gaussian { sigma_n } | GPrior::Laplace { sigma_n } => {
                if *sigma_n > 0.0 && sigma_n.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("sigma_n must be positive and finite, got {sigma_n}")))
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum TargetPosterior {
    Improper { mean: DVector<f64>, cov: SpdMatrix },
    Gaussian { mean: f64, var: f64, sigma_n: f64 },
    Laplace { mean: DVector<f64>, cov: SpdMatrix, sigma_n: f64 },
}

/// Two-piece representation of the `k = 1` Laplace posterior
/// `∝ exp(−½G(u − m)² − |u|/σₙ)`: each half-line carries a Gaussian with a
/// shifted mean.
#[derive(Clone, Copy, Debug)]
pub struct LaplaceMixture {
    pub m_plus: f64,
    pub m_minus: f64,
    pub sd: f64,
    /// Probability of the `u ≥ 0` piece.
    pub p_plus: f64,
}

impl LaplaceMixture {
    pub fn new(m: f64, precision: f64, sigma_n: f64) -> Self {
        let shift = 1.0 / (sigma_n * precision);
        let m_plus = m - shift;
        let m_minus = m + shift;
        let root = precision.sqrt();
        let log_plus = 0.5 * precision * m_plus * m_plus + log_normal_cdf(m_plus * root);
        let log_minus = 0.5 * precision * m_minus * m_minus + log_normal_cdf(-m_minus * root);
        let p_plus = 1.0 / (1.0 + (log_minus - log_plus).exp());
        Self { m_plus, m_minus, sd: 1.0 / root, p_plus }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.p_plus {
            sample_truncated_above(self.m_plus, self.sd, 0.0, rng)
        } else {
            sample_truncated_below(self.m_minus, self.sd, 0.0, rng)
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        let p_minus = 1.0 - self.p_plus;
        let z_minus = -self.m_minus / self.sd;
        let z_plus = -self.m_plus / self.sd;
        if u < 0.0 {
            p_minus * normal_cdf((u - self.m_minus) / self.sd) / normal_cdf(z_minus)
        } else {
            let inner = normal_cdf((u - self.m_plus) / self.sd) - normal_cdf(z_plus);
            p_minus + self.p_plus * inner / normal_cdf(-z_plus)
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetDraws {
    /// `n_s × k`.
    pub draws: DMatrix<f64>,
    /// Metropolis–Hastings acceptance rate, when a chain was run.
    pub acceptance: Option<f64>,
}

/// Serializable parameters of a [`TargetPosterior`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub g: GPrior,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(dim("ragged matrix rows"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl TargetPosterior {
    pub fn k(&self) -> usize {
        match self {
            TargetPosterior::Improper { mean, .. } | TargetPosterior::Laplace { mean, .. } => mean.len(),
            TargetPosterior::Gaussian { .. } => 1,
        }
    }

    pub fn g(&self) -> GPrior {
        match self {
            TargetPosterior::Improper { .. } => GPrior::Improper,
            TargetPosterior::Gaussian { sigma_n, .. } => GPrior::Gaussian { sigma_n: *sigma_n },
            TargetPosterior::Laplace { sigma_n, .. } => GPrior::Laplace { sigma_n: *sigma_n },
        }
    }

    /// Closed-form mean and covariance where available (not for Laplace).
    pub fn gaussian_moments(&self) -> Option<(DVector<f64>, DMatrix<f64>)> {
        match self {
            TargetPosterior::Improper { mean, cov } => Some((mean.clone(), cov.matrix().clone())),
            TargetPosterior::Gaussian { mean, var, .. } => {
                Some((DVector::from_element(1, *mean), DMatrix::from_element(1, 1, *var)))
            }
            TargetPosterior::Laplace { .. } => None,
        }
    }

    pub fn to_spec(&self) -> TargetSpec {
        let g = self.g();
        match self {
            TargetPosterior::Improper { mean, cov } | TargetPosterior::Laplace { mean, cov, .. } => {
                TargetSpec { g, mean: mean.iter().copied().collect(), cov: matrix_to_rows(cov.matrix()) }
            }
            TargetPosterior::Gaussian { mean, var, .. } => TargetSpec { g, mean: vec![*mean], cov: vec![vec![*var]] },
        }
    }

    pub fn from_spec(spec: &TargetSpec) -> Result<Self> {
        spec.g.validate()?;
        let k = spec.mean.len();
        let cov = rows_to_matrix(&spec.cov)?;
        if k == 0 || cov.shape() != (k, k) {
            return Err(dim(format!("target mean has length {k} but covariance is {}x{}", cov.nrows(), cov.ncols())));
        }
        let mean = DVector::from_column_slice(&spec.mean);
        match spec.g {
            GPrior::Improper => Ok(TargetPosterior::Improper { mean, cov: SpdMatrix::new(cov)? }),
            GPrior::Gaussian { sigma_n } => {
                if k != 1 {
                    return Err(Error::Unsupported("Gaussian g requires a single target".into()));
                }
                if !(cov[(0, 0)] > 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                Ok(TargetPosterior::Gaussian { mean: mean[0], var: cov[(0, 0)], sigma_n })
            }
            GPrior::Laplace { sigma_n } => Ok(TargetPosterior::Laplace { mean, cov: SpdMatrix::new(cov)?, sigma_n }),
        }
    }

    /// Draws `n_s` samples (rows).
    pub fn sample<R: Rng + ?Sized>(&self, n_s: usize, rng: &mut R) -> Result<TargetDraws> {
        sample_target(self, n_s, rng)
    }
}

pub fn build_target_posterior(pp: &PreprocessedData, g: GPrior) -> Result<TargetPosterior> {
    g.validate()?;
    let mean = pp.projected_target.clone();
    match g {
        GPrior::Improper => Ok(TargetPosterior::Improper { mean, cov: pp.sigma_k.clone() }),
        GPrior::Gaussian { sigma_n } => {
            if pp.k() != 1 {
                return Err(Error::Unsupported(format!(
                    "Gaussian g is only available for a single target (k = {})",
                    pp.k()
                )));
            }
            let s2 = sigma_n * sigma_n;
            let norm_sq = pp.gram_k.matrix()[(0, 0)];
            let denom = norm_sq * s2 + 1.0;
            Ok(TargetPosterior::Gaussian { mean: s2 * pp.xty[0] / denom, var: s2 / denom, sigma_n })
        }
        GPrior::Laplace { sigma_n } => Ok(TargetPosterior::Laplace { mean, cov: pp.sigma_k.clone(), sigma_n }),
    }
}

pub fn sample_target<R: Rng + ?Sized>(tp: &TargetPosterior, n_s: usize, rng: &mut R) -> Result<TargetDraws> {
    if n_s == 0 {
        return Err(invalid("need at least one sample"));
    }
    match tp {
        TargetPosterior::Improper { mean, cov } => {
            let l = cov.cholesky_l();
            let mut draws = DMatrix::zeros(n_s, mean.len());
            for j in 0..n_s {
                let v = mvn_sample_with_factor(mean, &l, rng);
                draws.set_row(j, &v.transpose());
            }
            Ok(TargetDraws { draws, acceptance: None })
        }
        TargetPosterior::Gaussian { mean, var, .. } => {
            let sd = var.sqrt();
            let draws = DMatrix::from_fn(n_s, 1, |_, _| mean + sd * rng.sample::<f64, _>(StandardNormal));
            Ok(TargetDraws { draws, acceptance: None })
        }
        TargetPosterior::Laplace { mean, cov, sigma_n } if mean.len() == 1 => {
            let mix = LaplaceMixture::new(mean[0], 1.0 / cov.matrix()[(0, 0)], *sigma_n);
            let draws = DMatrix::from_fn(n_s, 1, |_, _| mix.sample(rng));
            Ok(TargetDraws { draws, acceptance: None })
        }
        TargetPosterior::Laplace { mean, cov, sigma_n } => independence_mh(mean, cov, *sigma_n, n_s, rng),
    }
}

fn independence_mh<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &SpdMatrix,
    sigma_n: f64,
    n_s: usize,
    rng: &mut R,
) -> Result<TargetDraws> {
    let l = cov.cholesky_l();
    let k = mean.len();
    let mut current = mean.clone();
    let mut current_l1 = current.lp_norm(1);
    let total = MH_BURN_IN + n_s * MH_THIN;
    let mut accepted = 0usize;
    let mut draws = DMatrix::zeros(n_s, k);
    let mut kept = 0;
    for it in 0..total {
        let proposal = mvn_sample_with_factor(mean, &l, rng);
        let prop_l1 = proposal.lp_norm(1);
        let log_ratio = -(prop_l1 - current_l1) / sigma_n;
        let u: f64 = rng.random();
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            current = proposal;
            current_l1 = prop_l1;
            accepted += 1;
        }
        if it >= MH_BURN_IN && (it - MH_BURN_IN + 1) % MH_THIN == 0 {
            draws.set_row(kept, &current.transpose());
            kept += 1;
        }
    }
    let rate = accepted as f64 / total as f64;
    if rate < 0.01 {
        return Err(Error::LowAcceptance { rate });
    }
    Ok(TargetDraws { draws, acceptance: Some(rate) })
}
