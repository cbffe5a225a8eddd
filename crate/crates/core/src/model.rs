//! The I-SVB pipeline: noise estimation, rescaling, decoupling, mean-field
//! VB for the nuisance block and the exact target posterior, combined into
//! a sampler for `β_T = β* − Γβ₋ₖ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cavi::{fit_cavi, lambda_range_warning, CaviConfig, CaviFit, CaviInit, SpikeSlabPrior, VariationalParams};
use crate::data::Dataset;
use crate::error::{dim, invalid, Error, Result};
use crate::lasso::{cv_lasso, estimate_noise, LassoConfig, LassoFit};
use crate::preprocess::{preprocess, rescale_by_noise, PreprocessedData};
use crate::target::{build_target_posterior, matrix_to_rows, rows_to_matrix, GPrior, TargetPosterior, TargetSpec};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const MODEL_FORMAT: &str = "isvb-model/1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseMode {
    /// Cross-validated LASSO residual variance.
    #[default]
    Estimate,
    Fixed { sigma2: f64 },
    /// The simulation truth.
    Known,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsvbConfig {
    pub g: GPrior,
    pub cavi: CaviConfig,
    /// Prior inclusion probability; `None` means one over the number of
    /// variational coordinates.
    pub inclusion: Option<f64>,
    pub slab_scale: f64,
    pub use_vb_mean: bool,
    pub noise: NoiseMode,
    pub lasso: LassoConfig,
}

impl Default for IsvbConfig {
    fn default() -> Self {
        Self {
            g: GPrior::Improper,
            cavi: CaviConfig::default(),
            inclusion: None,
            slab_scale: 1.0,
            use_vb_mean: false,
            noise: NoiseMode::Estimate,
            lasso: LassoConfig::default(),
        }
    }
}

impl IsvbConfig {
    pub fn prior_for(&self, coordinates: usize) -> Result<SpikeSlabPrior> {
        let w = self.inclusion.unwrap_or(1.0 / coordinates.max(2) as f64);
        SpikeSlabPrior::new(w, self.slab_scale)
    }
}

/// Noise level used for rescaling, with the LASSO fit behind it if any.
#[derive(Clone, Debug)]
pub struct NoiseEstimate {
    pub sigma2: f64,
    pub lasso: Option<LassoFit>,
}

impl NoiseEstimate {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

pub fn estimate_noise_level<R: Rng + ?Sized>(
    d: &Dataset,
    mode: NoiseMode,
    lasso: &LassoConfig,
    rng: &mut R,
) -> Result<NoiseEstimate> {
    match mode {
        NoiseMode::Estimate => {
            let cv = cv_lasso(&d.x, &d.y, lasso, rng)?;
            let sigma2 = estimate_noise(&d.x, &d.y, &cv.fit)?;
            if !(sigma2 > 0.0) {
                return Err(Error::Numerical { index: 0, reason: "estimated noise variance is zero".into() });
            }
            Ok(NoiseEstimate { sigma2, lasso: Some(cv.fit) })
        }
        NoiseMode::Fixed { sigma2 } => {
            if !(sigma2 > 0.0 && sigma2.is_finite()) {
                return Err(invalid(format!("fixed noise variance must be positive, got {sigma2}")));
            }
            Ok(NoiseEstimate { sigma2, lasso: None })
        }
        NoiseMode::Known => Ok(NoiseEstimate { sigma2: d.truth()?.sigma2, lasso: None }),
    }
}

/// Everything needed to draw from the I-SVB posterior of the targets.
#[derive(Clone, Debug)]
pub struct IsvbSampler {
    pub targets: Vec<usize>,
    pub rest: Vec<usize>,
    pub gamma: DMatrix<f64>,
    pub nuisance: VariationalParams,
    pub target: TargetPosterior,
    pub sigma2_hat: f64,
    pub use_vb_mean: bool,
}

impl IsvbSampler {
    pub fn k(&self) -> usize {
        self.targets.len()
    }

    /// `n_s × k` draws of `β_T`, columns in the order of `targets`.
    pub fn draw<R: Rng + ?Sized>(&self, n_s: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        let mut draws = self.target.sample(n_s, rng)?.draws;
        if self.use_vb_mean {
            let shift = &self.gamma * self.nuisance.mean();
            for j in 0..n_s {
                for t in 0..self.k() {
                    draws[(j, t)] -= shift[t];
                }
            }
            return Ok(draws);
        }
        let p = &self.nuisance;
        let mut shift = DVector::zeros(self.k());
        for j in 0..n_s {
            shift.fill(0.0);
            for i in 0..p.len() {
                let u: f64 = rng.random();
                if u < p.q[i] {
                    let z: f64 = rng.sample(StandardNormal);
                    shift.axpy(p.mu[i] + p.tau[i] * z, &self.gamma.column(i), 1.0);
                }
            }
            for t in 0..self.k() {
                draws[(j, t)] -= shift[t];
            }
        }
        Ok(draws)
    }

    /// Closed-form posterior mean when the target posterior is Gaussian.
    pub fn mean(&self) -> Option<DVector<f64>> {
        let (m, _) = self.target.gaussian_moments()?;
        Some(m - &self.gamma * self.nuisance.mean())
    }

    /// Closed-form posterior covariance `Σ + Γ diag(v) Γᵀ` when the target
    /// posterior is Gaussian; `v` drops out under `use_vb_mean`.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let (_, cov) = self.target.gaussian_moments()?;
        if self.use_vb_mean {
            return Some(cov);
        }
        let v = self.nuisance.variances();
        let scaled = DMatrix::from_fn(self.gamma.nrows(), self.gamma.ncols(), |r, c| self.gamma[(r, c)] * v[c]);
        Some(cov + scaled * self.gamma.transpose())
    }
}

#[derive(Clone, Debug)]
pub struct IsvbModel {
    pub pp: PreprocessedData,
    pub sampler: IsvbSampler,
    pub cavi: CaviFit,
    pub prior: SpikeSlabPrior,
    pub noise: NoiseEstimate,
    pub warnings: Vec<String>,
}

impl IsvbModel {
    pub fn draw<R: Rng + ?Sized>(&self, n_s: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        self.sampler.draw(n_s, rng)
    }

    pub fn sigma2_hat(&self) -> f64 {
        self.sampler.sigma2_hat
    }

    pub fn to_file(&self) -> ModelFile {
        let s = &self.sampler;
        let mut top: Vec<(usize, f64)> = s.rest.iter().zip(&s.nuisance.q).map(|(i, q)| (i + 1, *q)).collect();
        top.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        top.truncate(10);
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            targets: s.targets.iter().map(|t| t + 1).collect(),
            sigma2_hat: s.sigma2_hat,
            use_vb_mean: s.use_vb_mean,
            target: s.target.to_spec(),
            gamma: matrix_to_rows(&s.gamma),
            nuisance_columns: s.rest.iter().map(|i| i + 1).collect(),
            nuisance: s.nuisance.clone(),
            prior: self.prior,
            diagnostics: ModelDiagnostics {
                elbo_trace: self.cavi.elbo_trace.clone(),
                sweeps: self.cavi.sweeps,
                converged: self.cavi.converged,
                top_inclusion: top,
                warnings: self.warnings.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub elbo_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest inclusion probabilities as `(column, q)`, 1-based columns.
    pub top_inclusion: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

/// On-disk form of a fitted model; indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub targets: Vec<usize>,
    pub sigma2_hat: f64,
    pub use_vb_mean: bool,
    pub target: TargetSpec,
    pub gamma: Vec<Vec<f64>>,
    pub nuisance_columns: Vec<usize>,
    pub nuisance: VariationalParams,
    pub prior: SpikeSlabPrior,
    pub diagnostics: ModelDiagnostics,
}

impl ModelFile {
    pub fn into_sampler(self) -> Result<IsvbSampler> {
        if self.format != MODEL_FORMAT {
            return Err(invalid(format!("unknown model format '{}'", self.format)));
        }
        let to_zero = |v: &[usize]| -> Result<Vec<usize>> {
            v.iter().map(|i| i.checked_sub(1).ok_or_else(|| invalid("indices are 1-based"))).collect()
        };
        let targets = to_zero(&self.targets)?;
        let rest = to_zero(&self.nuisance_columns)?;
        let target = TargetPosterior::from_spec(&self.target)?;
        let gamma = rows_to_matrix(&self.gamma)?;
        let nuisance = VariationalParams::new(self.nuisance.mu, self.nuisance.tau, self.nuisance.q)?;
        if target.k() != targets.len() || gamma.nrows() != targets.len() {
            return Err(dim("target dimension disagrees between fields"));
        }
        if gamma.ncols() != nuisance.len() || rest.len() != nuisance.len() {
            return Err(dim("nuisance dimension disagrees between fields"));
        }
        Ok(IsvbSampler { targets, rest, gamma, nuisance, target, sigma2_hat: self.sigma2_hat, use_vb_mean: self.use_vb_mean })
    }
}

/// Full pipeline including noise estimation.
pub fn fit<R: Rng + ?Sized>(d: &Dataset, targets: &[usize], cfg: &IsvbConfig, rng: &mut R) -> Result<IsvbModel> {
    let noise = estimate_noise_level(d, cfg.noise, &cfg.lasso, rng)?;
    fit_with_noise(d, targets, cfg, noise, rng)
}

/// Pipeline with a noise estimate computed elsewhere (shared across methods
/// in a simulation replicate).
pub fn fit_with_noise<R: Rng + ?Sized>(
    d: &Dataset,
    targets: &[usize],
    cfg: &IsvbConfig,
    noise: NoiseEstimate,
    rng: &mut R,
) -> Result<IsvbModel> {
    cfg.g.validate()?;
    let scaled = rescale_by_noise(d, noise.sigma())?;
    let pp = preprocess(&scaled, targets)?;
    let prior = cfg.prior_for(pp.n_nuisance())?;
    let mut warnings = Vec::new();
    if let Some(w) = lambda_range_warning(&pp.w_check, prior.slab_scale) {
        warnings.push(w);
    }

    let init: Option<Vec<f64>> = match cfg.cavi.init {
        CaviInit::Cold => None,
        CaviInit::Lasso => {
            let coefs = match &noise.lasso {
                Some(fit) => fit.coefficients.clone(),
                None => cv_lasso(&d.x, &d.y, &cfg.lasso, rng)?.fit.coefficients,
            };
            Some(pp.rest.iter().map(|&i| coefs[i]).collect())
        }
    };
    let cavi = fit_cavi(&pp.w_check, &pp.y_check, &prior, &cfg.cavi, init.as_deref())?;
    if !cavi.converged {
        warnings.push(format!("CAVI stopped after {} sweeps without meeting the tolerance", cavi.sweeps));
    }
    let target = build_target_posterior(&pp, cfg.g)?;
    let sampler = IsvbSampler {
        targets: pp.targets.clone(),
        rest: pp.rest.clone(),
        gamma: pp.gamma.clone(),
        nuisance: cavi.params.clone(),
        target,
        sigma2_hat: noise.sigma2,
        use_vb_mean: cfg.use_vb_mean,
    };
    Ok(IsvbModel { pp, sampler, cavi, prior, noise, warnings })
}
