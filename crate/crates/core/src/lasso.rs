//! Coordinate-descent LASSO, K-fold cross-validation and the residual noise
//! estimator built on it.
//!
//! Objective: `½‖Y − Xβ‖²/n + λ‖β‖₁` (plus an unpenalized intercept when
//! requested).

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvRule {
    /// λ with the smallest mean held-out error.
    #[default]
    MinError,
    /// Largest λ whose error is within one standard error of the minimum.
    OneStandardError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoConfig {
    pub n_folds: usize,
    pub n_lambdas: usize,
    pub lambda_min_ratio: f64,
    pub rule: CvRule,
    pub standardize: bool,
    pub intercept: bool,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            n_folds: 10,
            n_lambdas: 100,
            lambda_min_ratio: 1e-3,
            rule: CvRule::MinError,
            standardize: false,
            intercept: false,
            tolerance: 1e-7,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoFit {
    pub coefficients: DVector<f64>,
    pub lambda: f64,
    pub support_size: usize,
    pub intercept: f64,
    /// Full coordinate sweeps spent on this λ.
    pub sweeps: usize,
}

impl LassoFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut out = x * &self.coefficients;
        if self.intercept != 0.0 {
            out.add_scalar_mut(self.intercept);
        }
        out
    }

    pub fn residual(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
        y - self.predict(x)
    }
}

#[derive(Clone, Debug)]
pub struct CvLasso {
    pub fit: LassoFit,
    pub lambdas: Vec<f64>,
    pub cv_mean: Vec<f64>,
    pub cv_se: Vec<f64>,
    pub chosen: usize,
    pub folds: Vec<usize>,
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

pub fn objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    0.5 * (y - x * beta).norm_squared() / n + lambda * beta.lp_norm(1)
}

/// `‖XᵀY‖_∞ / n`, the smallest λ at which the solution is zero.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    (x.tr_mul(y)).amax() / x.nrows() as f64
}

/// `count` log-spaced values from `λ_max` down to `ratio · λ_max`.
pub fn lambda_grid(x: &DMatrix<f64>, y: &DVector<f64>, count: usize, ratio: f64) -> Vec<f64> {
    let top = lambda_max(x, y).max(f64::MIN_POSITIVE);
    if count == 1 {
        return vec![top];
    }
    let step = ratio.ln() / (count - 1) as f64;
    (0..count).map(|i| top * (step * i as f64).exp()).collect()
}

/// Columns centred/scaled according to the configuration, with the
/// information needed to map coefficients back.
struct Prepared {
    x: DMatrix<f64>,
    y: DVector<f64>,
    x_mean: DVector<f64>,
    y_mean: f64,
    scale: DVector<f64>,
}

fn prepare(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Prepared {
    let (n, p) = x.shape();
    let mut xs = x.clone();
    let mut ys = y.clone();
    let mut x_mean = DVector::zeros(p);
    let mut y_mean = 0.0;
    if cfg.intercept {
        y_mean = y.mean();
        ys.add_scalar_mut(-y_mean);
        for j in 0..p {
            let m = x.column(j).mean();
            x_mean[j] = m;
            xs.column_mut(j).add_scalar_mut(-m);
        }
    }
    let mut scale = DVector::from_element(p, 1.0);
    if cfg.standardize {
        for j in 0..p {
            let s = (xs.column(j).norm_squared() / n as f64).sqrt();
            if s > 0.0 {
                scale[j] = s;
                xs.column_mut(j).unscale_mut(s);
            }
        }
    }
    Prepared { x: xs, y: ys, x_mean, y_mean, scale }
}

impl Prepared {
    fn to_fit(&self, beta_std: &DVector<f64>, lambda: f64, sweeps: usize) -> LassoFit {
        let coefficients = beta_std.component_div(&self.scale);
        let intercept = self.y_mean - self.x_mean.dot(&coefficients);
        let support_size = coefficients.iter().filter(|b| **b != 0.0).count();
        LassoFit { coefficients, lambda, support_size, intercept, sweeps }
    }
}

/// Coordinate-descent state for one design, reused along a λ path.
struct Solver<'a> {
    x: &'a DMatrix<f64>,
    col_sq: Vec<f64>,
    beta: DVector<f64>,
    resid: DVector<f64>,
    n: f64,
    tol: f64,
    max_sweeps: usize,
    /// `XᵀXⱼ/n`, filled in once column `j` first turns active.
    gram: Vec<Option<DVector<f64>>>,
}

impl<'a> Solver<'a> {
    fn new(x: &'a DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Self {
        let n = x.nrows() as f64;
        let col_sq = (0..x.ncols()).map(|j| x.column(j).norm_squared() / n).collect();
        Self { x, col_sq, beta: DVector::zeros(x.ncols()), resid: y.clone(), n, tol: cfg.tolerance, max_sweeps: cfg.max_sweeps, gram: vec![None; x.ncols()] }
    }

    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let d = self.col_sq[j];
        if d == 0.0 {
            return 0.0;
        }
        let col = self.x.column(j);
        let old = self.beta[j];
        let z = col.dot(&self.resid) / self.n + d * old;
        let new = soft_threshold(z, lambda) / d;
        let delta = new - old;
        if delta != 0.0 {
            self.beta[j] = new;
            self.resid.axpy(-delta, &col, 1.0);
        }
        delta.abs()
    }

    fn threshold(&self) -> f64 {
        self.tol * (1.0 + self.beta.amax())
    }

    /// Active-set step: moves toward the minimizer on `active` with the
    /// current signs held fixed, dropping a coordinate whenever its sign would
    /// flip, until the minimizer is sign consistent. Every move lowers the
    /// objective; the next full sweep checks the KKT conditions off the set.
    fn newton(&mut self, active: &[usize], lambda: f64) -> bool {
        let mut set: Vec<usize> = active.to_vec();
        for &j in active {
            if self.gram[j].is_none() {
                self.gram[j] = Some(self.x.tr_mul(&self.x.column(j)) / self.n);
            }
        }
        while !set.is_empty() && set.len() < self.x.nrows() {
            let m = set.len();
            let xa = DMatrix::from_fn(self.x.nrows(), m, |i, c| self.x[(i, set[c])]);
            let gram = DMatrix::from_fn(m, m, |a, b| self.gram[set[b]].as_ref().map_or(0.0, |g| g[set[a]]));
            let beta_a = DVector::from_fn(m, |c, _| self.beta[set[c]]);
            let mut rhs = xa.tr_mul(&self.resid) / self.n + &gram * &beta_a;
            for c in 0..m {
                rhs[c] -= lambda * beta_a[c].signum();
            }
            let Some(chol) = gram.cholesky() else { return false };
            let sol = chol.solve(&rhs);
            if sol.iter().any(|v| !v.is_finite()) {
                return false;
            }
            let mut step = 1.0;
            let mut blocker = None;
            for c in 0..m {
                if sol[c] * beta_a[c] <= 0.0 {
                    let t = beta_a[c] / (beta_a[c] - sol[c]);
                    if t < step {
                        step = t;
                        blocker = Some(c);
                    }
                }
            }
            let delta = (&sol - &beta_a) * step;
            self.resid.gemv(-1.0, &xa, &delta, 1.0);
            for c in 0..m {
                self.beta[set[c]] += delta[c];
            }
            match blocker {
                None => return true,
                Some(c) => {
                    self.resid.axpy(self.beta[set[c]], &self.x.column(set[c]), 1.0);
                    self.beta[set[c]] = 0.0;
                    set.remove(c);
                }
            }
        }
        false
    }

    /// Solves at `lambda` from the current warm start; returns full sweeps used.
    fn solve(&mut self, lambda: f64) -> usize {
        let p = self.x.ncols();
        let mut sweeps = 0;
        loop {
            let mut max_change = 0.0f64;
            for j in 0..p {
                max_change = max_change.max(self.update(j, lambda));
            }
            sweeps += 1;
            if max_change < self.threshold() || sweeps >= self.max_sweeps {
                return sweeps;
            }
            let active: Vec<usize> = (0..p).filter(|&j| self.beta[j] != 0.0).collect();
            if self.newton(&active, lambda) {
                continue;
            }
            loop {
                let mut max_change = 0.0f64;
                for &j in &active {
                    max_change = max_change.max(self.update(j, lambda));
                }
                sweeps += 1;
                if max_change < self.threshold() || sweeps >= self.max_sweeps {
                    break;
                }
            }
            if sweeps >= self.max_sweeps {
                return sweeps;
            }
        }
    }
}

fn check_inputs(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(dim(format!("X has {} rows but Y has length {}", x.nrows(), y.len())));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(dim("empty design"));
    }
    Ok(())
}

fn validate_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(invalid("lambda list is empty"));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(invalid("lambdas must be positive and finite"));
    }
    if lambdas.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("lambdas must be in descending order"));
    }
    Ok(())
}

/// Warm-started path over the given descending λ values.
pub fn lasso_path(x: &DMatrix<f64>, y: &DVector<f64>, lambdas: &[f64]) -> Result<Vec<LassoFit>> {
    lasso_path_with(x, y, lambdas, &LassoConfig::default())
}

pub fn lasso_path_with(x: &DMatrix<f64>, y: &DVector<f64>, lambdas: &[f64], cfg: &LassoConfig) -> Result<Vec<LassoFit>> {
    check_inputs(x, y)?;
    validate_lambdas(lambdas)?;
    let prep = prepare(x, y, cfg);
    Ok(run_path(&prep, lambdas, cfg, false))
}

/// Runs the path; with `saturate` it ends once the support reaches `n − 2`,
/// past which the residual noise estimate is undefined.
fn run_path(prep: &Prepared, lambdas: &[f64], cfg: &LassoConfig, saturate: bool) -> Vec<LassoFit> {
    let mut solver = Solver::new(&prep.x, &prep.y, cfg);
    let limit = prep.x.nrows().saturating_sub(2);
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let sweeps = solver.solve(lambda);
        let fit = prep.to_fit(&solver.beta, lambda, sweeps);
        let full = fit.support_size >= limit;
        out.push(fit);
        if saturate && full {
            break;
        }
    }
    out
}

fn fold_assignment<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    folds
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// K-fold cross-validated LASSO on the default λ grid.
pub fn cv_lasso<R: Rng + ?Sized>(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig, rng: &mut R) -> Result<CvLasso> {
    check_inputs(x, y)?;
    let n = x.nrows();
    let k = cfg.n_folds;
    if k < 2 {
        return Err(invalid(format!("need at least 2 folds, got {k}")));
    }
    if n < 2 * k {
        return Err(Error::DegenerateFolds(format!("{n} rows cannot fill {k} folds with at least 2 rows each")));
    }
    if cfg.n_lambdas == 0 || !(cfg.lambda_min_ratio > 0.0 && cfg.lambda_min_ratio < 1.0) {
        return Err(invalid("lambda grid needs at least one value and a ratio in (0, 1)"));
    }
    let folds = fold_assignment(n, k, rng);
    let prep = prepare(x, y, cfg);
    let lambdas = lambda_grid(&prep.x, &prep.y, cfg.n_lambdas, cfg.lambda_min_ratio);
    let full = run_path(&prep, &lambdas, cfg, true);

    let fold_errors: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
            let xt = select_rows(x, &train);
            let yt = DVector::from_fn(train.len(), |i, _| y[train[i]]);
            let xv = select_rows(x, &test);
            let yv = DVector::from_fn(test.len(), |i, _| y[test[i]]);
            let prep_f = prepare(&xt, &yt, cfg);
            let path = run_path(&prep_f, &lambdas[..full.len()], cfg, true);
            path.iter().map(|fit| fit.residual(&xv, &yv).norm_squared() / test.len() as f64).collect()
        })
        .collect();

    let usable = fold_errors.iter().map(|e| e.len()).min().unwrap_or(0).min(full.len());
    let mut cv_mean = Vec::with_capacity(usable);
    let mut cv_se = Vec::with_capacity(usable);
    let sizes: Vec<f64> = (0..k).map(|f| folds.iter().filter(|&&g| g == f).count() as f64).collect();
    for l in 0..usable {
        let errs: Vec<f64> = fold_errors.iter().map(|e| e[l]).collect();
        let mean = errs.iter().zip(&sizes).map(|(e, s)| e * s).sum::<f64>() / n as f64;
        let var = errs.iter().zip(&sizes).map(|(e, s)| s * (e - mean).powi(2)).sum::<f64>() / n as f64;
        cv_mean.push(mean);
        cv_se.push((var / (k as f64 - 1.0)).sqrt());
    }
    let mut best = 0;
    for l in 1..usable {
        if cv_mean[l] < cv_mean[best] {
            best = l;
        }
    }
    let chosen = match cfg.rule {
        CvRule::MinError => best,
        CvRule::OneStandardError => {
            let limit = cv_mean[best] + cv_se[best];
            (0..=best).find(|&l| cv_mean[l] <= limit).unwrap_or(best)
        }
    };
    Ok(CvLasso { fit: full[chosen].clone(), lambdas: lambdas[..usable].to_vec(), cv_mean, cv_se, chosen, folds })
}

/// `‖Y − Xβ̂‖² / (n − ŝ − 1)`.
pub fn estimate_noise(x: &DMatrix<f64>, y: &DVector<f64>, fit: &LassoFit) -> Result<f64> {
    check_inputs(x, y)?;
    let n = x.nrows();
    if n <= fit.support_size + 1 {
        return Err(Error::DegenerateDf { n, support: fit.support_size });
    }
    Ok(fit.residual(x, y).norm_squared() / (n - fit.support_size - 1) as f64)
}
