//! Comparison methods: mean-field VB on the whole vector, the oracle
//! least-squares region, the ZZ debiased LASSO and heuristic variance
//! predictions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cavi::{fit_cavi, CaviFit, CaviInit, SpikeSlabPrior, VariationalParams};
use crate::data::Dataset;
use crate::dist::normal_quantile;
use crate::error::{dim, invalid, Error, Result};
use crate::inference::{chi2_quantile, CredibleEllipsoid, CredibleInterval, CredibleRegion};
use crate::lasso::{cv_lasso, LassoConfig, LassoFit};
use crate::linalg::SpdMatrix;
use crate::model::{IsvbConfig, NoiseEstimate};
use crate::preprocess::{rescale_by_noise, select_columns, validate_targets};

/// Mean-field spike-and-slab fit on all `p` coordinates.
#[derive(Clone, Debug)]
pub struct FullMf {
    pub targets: Vec<usize>,
    pub fit: CaviFit,
    pub prior: SpikeSlabPrior,
}

impl FullMf {
    /// `n_s × k` draws of the target coordinates; columns are independent.
    pub fn draw<R: Rng + ?Sized>(&self, n_s: usize, rng: &mut R) -> DMatrix<f64> {
        let p = &self.fit.params;
        let mut out = DMatrix::zeros(n_s, self.targets.len());
        for j in 0..n_s {
            for (c, &t) in self.targets.iter().enumerate() {
                let u: f64 = rng.random();
                if u < p.q[t] {
                    let z: f64 = rng.sample(StandardNormal);
                    out[(j, c)] = p.mu[t] + p.tau[t] * z;
                }
            }
        }
        out
    }

    pub fn target_params(&self) -> VariationalParams {
        let p = &self.fit.params;
        VariationalParams {
            mu: self.targets.iter().map(|&t| p.mu[t]).collect(),
            tau: self.targets.iter().map(|&t| p.tau[t]).collect(),
            q: self.targets.iter().map(|&t| p.q[t]).collect(),
        }
    }
}

/// CAVI directly on the noise-rescaled `(X, Y)`, with the same prior
/// conventions as I-SVB.
pub fn full_mf<R: Rng + ?Sized>(
    d: &Dataset,
    targets: &[usize],
    cfg: &IsvbConfig,
    noise: &NoiseEstimate,
    rng: &mut R,
) -> Result<FullMf> {
    validate_targets(targets, d.p())?;
    let scaled = rescale_by_noise(d, noise.sigma())?;
    let prior = cfg.prior_for(d.p())?;
    let init = match cfg.cavi.init {
        CaviInit::Cold => None,
        CaviInit::Lasso => Some(match &noise.lasso {
            Some(fit) => fit.coefficients.clone(),
            None => cv_lasso(&d.x, &d.y, &cfg.lasso, rng)?.fit.coefficients,
        }),
    };
    let fit = fit_cavi(&scaled.x, &scaled.y, &prior, &cfg.cavi, init.as_ref().map(|v| v.as_slice()))?;
    Ok(FullMf { targets: targets.to_vec(), fit, prior })
}

/// Least-squares fit on the true support.
#[derive(Clone, Debug)]
pub struct OracleFit {
    pub support: Vec<usize>,
    pub coefficients: DVector<f64>,
    /// `(X_S₀ᵀX_S₀)⁻¹`, unscaled.
    pub inverse_gram: DMatrix<f64>,
    pub sigma2: f64,
}

impl OracleFit {
    /// Residual variance of the least-squares fit, `n − s₀` degrees of freedom.
    pub fn residual_variance(d: &Dataset, support: &[usize]) -> Result<f64> {
        let n = d.n();
        if n <= support.len() {
            return Err(Error::DegenerateDf { n, support: support.len() });
        }
        let fit = Self::new(d, support, 1.0)?;
        let xs = select_columns(&d.x, support);
        let r = &d.y - xs * &fit.coefficients;
        Ok(r.norm_squared() / (n - support.len()) as f64)
    }

    pub fn new(d: &Dataset, support: &[usize], sigma2: f64) -> Result<Self> {
        if support.is_empty() {
            return Ok(Self { support: vec![], coefficients: DVector::zeros(0), inverse_gram: DMatrix::zeros(0, 0), sigma2 });
        }
        let xs = select_columns(&d.x, support);
        let gram = SpdMatrix::new(xs.tr_mul(&xs)).map_err(|_| Error::RankDeficient("true support columns".into()))?;
        let coefficients = gram.solve(&xs.tr_mul(&d.y));
        let inverse_gram = gram.inverse()?.into_matrix();
        Ok(Self { support: support.to_vec(), coefficients, inverse_gram, sigma2 })
    }

    /// Region for `targets`: targets off the support are pinned at zero.
    pub fn region(&self, targets: &[usize], level: f64) -> Result<CredibleRegion> {
        let k = targets.len();
        let pos: Vec<Option<usize>> = targets.iter().map(|t| self.support.iter().position(|s| s == t)).collect();
        let center = DVector::from_fn(k, |i, _| pos[i].map_or(0.0, |a| self.coefficients[a]));
        let shape = DMatrix::from_fn(k, k, |i, j| match (pos[i], pos[j]) {
            (Some(a), Some(b)) => self.sigma2 * self.inverse_gram[(a, b)],
            _ => 0.0,
        });
        let fixed: Vec<bool> = pos.iter().map(Option::is_none).collect();
        if k == 1 {
            let half = if fixed[0] { 0.0 } else { (chi2_quantile(level, 1)? * shape[(0, 0)]).sqrt() };
            return Ok(CredibleRegion::Interval(CredibleInterval::new(center[0] - half, center[0] + half, level)?));
        }
        Ok(CredibleRegion::Ellipsoid(CredibleEllipsoid::new(center, shape, level, fixed)?))
    }
}

/// Oracle region from the dataset truth; `sigma2 = None` uses the residual
/// variance of the least-squares fit on the support.
pub fn oracle(d: &Dataset, targets: &[usize], level: f64, sigma2: Option<f64>) -> Result<CredibleRegion> {
    validate_targets(targets, d.p())?;
    let support = d.truth()?.support.clone();
    let s2 = match sigma2 {
        Some(s) => s,
        None if support.is_empty() => d.y.norm_squared() / d.n() as f64,
        None => OracleFit::residual_variance(d, &support)?,
    };
    OracleFit::new(d, &support, s2)?.region(targets, level)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZzResult {
    pub estimate: f64,
    pub interval: CredibleInterval,
}

/// Debiased LASSO for coordinate `j` with a nodewise-LASSO score vector.
/// `init` reuses an existing LASSO fit of `Y` on `X`.
pub fn zz_debiased<R: Rng + ?Sized>(
    d: &Dataset,
    j: usize,
    level: f64,
    sigma: f64,
    lasso: &LassoConfig,
    init: Option<&LassoFit>,
    rng: &mut R,
) -> Result<ZzResult> {
    let (n, p) = (d.n(), d.p());
    if n < 3 {
        return Err(invalid(format!("debiased estimator needs n >= 3, got {n}")));
    }
    if j >= p || p < 2 {
        return Err(invalid(format!("target index {} out of range for p = {p}", j + 1)));
    }
    let owned;
    let init = match init {
        Some(f) => f,
        None => {
            owned = cv_lasso(&d.x, &d.y, lasso, rng)?.fit;
            &owned
        }
    };
    if init.coefficients.len() != p {
        return Err(dim("initial LASSO fit has the wrong length"));
    }
    let rest: Vec<usize> = (0..p).filter(|&i| i != j).collect();
    let x_rest = select_columns(&d.x, &rest);
    let xj = d.x.column(j).clone_owned();
    let node = cv_lasso(&x_rest, &xj, lasso, rng)?.fit;
    let z = &xj - node.predict(&x_rest);
    let zx = z.dot(&xj);
    if !(zx.abs() > 1e-12 * z.norm() * xj.norm()) {
        return Err(Error::DegenerateResidual(zx.abs()));
    }
    let resid = init.residual(&d.x, &d.y);
    let estimate = init.coefficients[j] + z.dot(&resid) / zx;
    let half = normal_quantile((1.0 + level) / 2.0) * sigma * z.norm() / zx.abs();
    Ok(ZzResult { estimate, interval: CredibleInterval::new(estimate - half, estimate + half, level)? })
}

/// Predicted variances of the first target coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicVariances {
    pub oracle: f64,
    pub mf: f64,
    pub isvb: f64,
}

/// General form for a population covariance `sigma` and a support whose
/// first entry is the target.
pub fn heuristic_general(sigma: &DMatrix<f64>, support: &[usize], n: usize) -> Result<HeuristicVariances> {
    let Some(&t) = support.first() else {
        return Err(invalid("support must contain the target"));
    };
    if sigma.nrows() != sigma.ncols() || support.iter().any(|&s| s >= sigma.nrows()) {
        return Err(dim("support index outside the covariance matrix"));
    }
    let nf = n as f64;
    let s_tt = sigma[(t, t)];
    let sub = DMatrix::from_fn(support.len(), support.len(), |a, b| sigma[(support[a], support[b])]);
    let oracle = SpdMatrix::new(sub)?.inverse()?.matrix()[(0, 0)] / nf;
    let mut sum = 1.0 / s_tt;
    for &i in &support[1..] {
        let g = sigma[(t, i)] / s_tt;
        sum += g * g / (sigma[(i, i)] - s_tt * g * g);
    }
    Ok(HeuristicVariances { oracle, mf: 1.0 / (nf * s_tt), isvb: sum / nf })
}

fn check_rho(rho: f64, s0: usize) -> Result<()> {
    if !(0.0..1.0).contains(&rho) || s0 == 0 {
        return Err(invalid(format!("need rho in [0, 1) and s0 >= 1, got rho = {rho}, s0 = {s0}")));
    }
    Ok(())
}

/// Autoregressive design with support `{1, …, s₀}`.
pub fn heuristic_ar(rho: f64, s0: usize, n: usize) -> Result<HeuristicVariances> {
    check_rho(rho, s0)?;
    let nf = n as f64;
    let r2 = rho * rho;
    let oracle = if s0 >= 2 { 1.0 / (nf * (1.0 - r2)) } else { 1.0 / nf };
    let mut isvb = 1.0;
    for j in 1..s0 {
        let a = r2.powi(j as i32);
        isvb += a / (1.0 - a);
    }
    Ok(HeuristicVariances { oracle, mf: 1.0 / nf, isvb: isvb / nf })
}

/// Equicorrelated design.
pub fn heuristic_equicorrelated(rho: f64, s0: usize, n: usize) -> Result<HeuristicVariances> {
    check_rho(rho, s0)?;
    let nf = n as f64;
    let s = s0 as f64;
    let e = (1.0 - 2.0 * rho + rho * s) / (1.0 - rho + rho * s);
    let oracle = e / ((1.0 - rho) * nf);
    let isvb = (1.0 + (s - 1.0) * rho * rho / (1.0 - rho * rho)) / nf;
    Ok(HeuristicVariances { oracle, mf: 1.0 / nf, isvb })
}
