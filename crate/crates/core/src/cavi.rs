//! Coordinate-ascent variational inference for linear regression under a
//! spike-and-slab prior `w · Lap(λ) + (1 − w) · δ₀` with the mean-field
//! family `⊗ᵢ qᵢ N(μᵢ, τᵢ²) + (1 − qᵢ) δ₀`.
//!
//! Each coordinate update is an exact block maximization of the ELBO over
//! `(μᵢ, τᵢ, qᵢ)`. Writing `c = Xᵢᵀr₋ᵢ` and `d = ‖Xᵢ‖²`, the ELBO restricted
//! to coordinate `i` is
//!
//! ```text
//! q F(μ, τ) − q log(q/w) − (1 − q) log((1 − q)/(1 − w)),
//! F(μ, τ) = μc − ½d(τ² + μ²) − KL(N(μ, τ²) ‖ Lap(λ)).
//! ```
//!
//! `F` is strictly concave in `(μ, τ)`, so it is maximized by damped Newton
//! steps; the optimal `q` then satisfies `logit q = logit w + max F`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dist::{folded_normal_mean, normal_pdf, sign_balance};
use crate::error::{dim, invalid, Error, Result};

const Q_FLOOR: f64 = 1e-10;
const LN_2PI_E: f64 = 2.837_877_066_409_345_3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeSlabPrior {
    pub inclusion: f64,
    pub slab_scale: f64,
}

impl SpikeSlabPrior {
    pub fn new(inclusion: f64, slab_scale: f64) -> Result<Self> {
        if !(inclusion > 0.0 && inclusion < 1.0) {
            return Err(invalid(format!("inclusion probability must lie in (0, 1), got {inclusion}")));
        }
        if !(slab_scale > 0.0 && slab_scale.is_finite()) {
            return Err(invalid(format!("slab scale must be positive, got {slab_scale}")));
        }
        Ok(Self { inclusion, slab_scale })
    }

    /// `w = 1/p`, `λ = 1`.
    pub fn sparse_default(p: usize) -> Self {
        Self { inclusion: 1.0 / p.max(2) as f64, slab_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalParams {
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub q: Vec<f64>,
}

impl VariationalParams {
    pub fn new(mu: Vec<f64>, tau: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if mu.len() != tau.len() || mu.len() != q.len() {
            return Err(dim("mu, tau and q must have equal length"));
        }
        if tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("every tau must be positive and finite"));
        }
        if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("every q must lie in [0, 1]"));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("variational means"));
        }
        Ok(Self { mu, tau, q })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Posterior mean `qᵢμᵢ`.
    pub fn mean(&self) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| self.q[i] * self.mu[i])
    }

    /// Marginal variances `qᵢ(τᵢ² + μᵢ²) − (qᵢμᵢ)²`.
    pub fn variances(&self) -> DVector<f64> {
        DVector::from_fn(self.len(), |i, _| {
            let m = self.q[i] * self.mu[i];
            self.q[i] * (self.tau[i] * self.tau[i] + self.mu[i] * self.mu[i]) - m * m
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    Index,
    /// Descending magnitude of the initial means.
    #[default]
    DataDriven,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaviInit {
    /// Means from supplied coefficients (normally a cross-validated LASSO).
    #[default]
    Lasso,
    Cold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaviConfig {
    pub max_sweeps: usize,
    /// Stop once a sweep raises the ELBO by less than this.
    pub tolerance: f64,
    pub order: UpdateOrder,
    pub init: CaviInit,
}

impl Default for CaviConfig {
    fn default() -> Self {
        Self { max_sweeps: 1000, tolerance: 1e-6, order: UpdateOrder::DataDriven, init: CaviInit::Lasso }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaviFit {
    pub params: VariationalParams,
    pub elbo_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl CaviFit {
    pub fn final_elbo(&self) -> f64 {
        *self.elbo_trace.last().unwrap_or(&f64::NAN)
    }
}

/// `KL(N(μ, τ²) ‖ Lap(λ))` with `Lap(λ)` the density `(λ/2) e^{−λ|x|}`.
pub fn kl_normal_laplace(mu: f64, tau: f64, lambda: f64) -> f64 {
    lambda * folded_normal_mean(mu, tau) + (2.0 / lambda).ln() - 0.5 * (LN_2PI_E + 2.0 * tau.ln())
}

fn xlogx_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

/// KL divergence of one spike-and-slab factor from the prior.
pub fn coordinate_kl(q: f64, mu: f64, tau: f64, prior: &SpikeSlabPrior) -> f64 {
    let w = prior.inclusion;
    let slab = if q == 0.0 { 0.0 } else { q * kl_normal_laplace(mu, tau, prior.slab_scale) };
    xlogx_ratio(q, w) + slab + xlogx_ratio(1.0 - q, 1.0 - w)
}

fn check_dims(params: &VariationalParams, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.ncols() != params.len() {
        return Err(dim(format!("{} variational coordinates for {} columns", params.len(), x.ncols())));
    }
    if x.nrows() != y.len() {
        return Err(dim(format!("X has {} rows but Y has length {}", x.nrows(), y.len())));
    }
    Ok(())
}

/// `E_Q[log ℓ] − KL(Q ‖ Π)` up to the additive constant `−(n/2) log 2π`.
pub fn elbo(params: &VariationalParams, x: &DMatrix<f64>, y: &DVector<f64>, prior: &SpikeSlabPrior) -> Result<f64> {
    check_dims(params, x, y)?;
    let resid = y - x * params.mean();
    let col_sq: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).norm_squared()).collect();
    Ok(elbo_from_residual(params, &resid, &col_sq, prior))
}

fn elbo_from_residual(params: &VariationalParams, resid: &DVector<f64>, col_sq: &[f64], prior: &SpikeSlabPrior) -> f64 {
    let mut total = -0.5 * resid.norm_squared();
    for i in 0..params.len() {
        let (q, mu, tau) = (params.q[i], params.mu[i], params.tau[i]);
        let m = q * mu;
        let v = q * (tau * tau + mu * mu) - m * m;
        total -= 0.5 * col_sq[i] * v + coordinate_kl(q, mu, tau, prior);
    }
    total
}

/// The slab objective `F(μ, τ)` for one coordinate.
#[derive(Clone, Copy, Debug)]
pub struct SlabSlice {
    pub c: f64,
    pub d: f64,
    pub lambda: f64,
}

impl SlabSlice {
    pub fn value(&self, mu: f64, tau: f64) -> f64 {
        mu * self.c - 0.5 * self.d * (tau * tau + mu * mu) - kl_normal_laplace(mu, tau, self.lambda)
    }

    /// Maximizes `F` from the starting point by damped Newton steps; the
    /// objective never decreases along the iterates.
    pub fn maximize(&self, mu0: f64, tau0: f64) -> Option<(f64, f64, f64)> {
        let (c, d, lambda) = (self.c, self.d, self.lambda);
        let (mut mu, mut tau) = (mu0, tau0);
        let mut f = self.value(mu, tau);
        if !f.is_finite() {
            return None;
        }
        for _ in 0..200 {
            let a = mu / tau;
            let phi = normal_pdf(a);
            let gm = c - d * mu - lambda * sign_balance(a);
            let gt = -d * tau + 1.0 / tau - 2.0 * lambda * phi;
            let hmm = -d - 2.0 * lambda * phi / tau;
            let hmt = 2.0 * lambda * phi * a / tau;
            let htt = -d - 1.0 / (tau * tau) - 2.0 * lambda * phi * a * a / tau;
            let det = hmm * htt - hmt * hmt;
            let (dm, dt) = if det > 0.0 && det.is_finite() {
                (-(htt * gm - hmt * gt) / det, -(hmm * gt - hmt * gm) / det)
            } else {
                (-gm / hmm, -gt / htt)
            };
            let decrement = gm * dm + gt * dt;
            if !(decrement > 1e-14 * (1.0 + f.abs())) {
                break;
            }
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-12 {
                let nt = tau + step * dt;
                if nt > 0.0 {
                    let nm = mu + step * dm;
                    let nf = self.value(nm, nt);
                    if nf >= f {
                        mu = nm;
                        tau = nt;
                        f = nf;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if f.is_finite() && mu.is_finite() && tau > 0.0 {
            Some((mu, tau, f))
        } else {
            None
        }
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mutable CAVI state: parameters plus the residual `Y − X·E_Q[β]`.
pub struct CaviState<'a> {
    x: &'a DMatrix<f64>,
    col_sq: Vec<f64>,
    resid: DVector<f64>,
    pub params: VariationalParams,
    prior: SpikeSlabPrior,
}

impl<'a> CaviState<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &DVector<f64>, params: VariationalParams, prior: SpikeSlabPrior) -> Result<Self> {
        check_dims(&params, x, y)?;
        let col_sq = (0..x.ncols()).map(|j| x.column(j).norm_squared()).collect();
        let resid = y - x * params.mean();
        Ok(Self { x, col_sq, resid, params, prior })
    }

    pub fn elbo(&self) -> f64 {
        elbo_from_residual(&self.params, &self.resid, &self.col_sq, &self.prior)
    }

    /// Block update of coordinate `i`.
    pub fn update_coordinate(&mut self, i: usize) -> Result<()> {
        let col = self.x.column(i);
        let d = self.col_sq[i];
        let (q_old, mu_old, tau_old) = (self.params.q[i], self.params.mu[i], self.params.tau[i]);
        let m_old = q_old * mu_old;
        let c = col.dot(&self.resid) + d * m_old;
        let slice = SlabSlice { c, d, lambda: self.prior.slab_scale };
        let (mu, tau, f) = slice.maximize(mu_old, tau_old).ok_or_else(|| Error::Numerical {
            index: i,
            reason: format!("slab objective not finite (c = {c}, d = {d})"),
        })?;
        let w = self.prior.inclusion;
        let logit = (w / (1.0 - w)).ln() + f;
        let q = logistic(logit).clamp(Q_FLOOR, 1.0 - Q_FLOOR);
        let m_new = q * mu;
        if m_new != m_old {
            self.resid.axpy(m_old - m_new, &col, 1.0);
        }
        self.params.mu[i] = mu;
        self.params.tau[i] = tau;
        self.params.q[i] = q;
        Ok(())
    }

    pub fn into_params(self) -> VariationalParams {
        self.params
    }
}

/// Initial parameters: means from `coefficients` (or zero), `τ = 1`, `q = ½`.
pub fn initial_params(p: usize, coefficients: Option<&[f64]>) -> Result<VariationalParams> {
    let mu = match coefficients {
        Some(c) if c.len() != p => return Err(dim(format!("{} initial coefficients for {p} coordinates", c.len()))),
        Some(c) => c.to_vec(),
        None => vec![0.0; p],
    };
    VariationalParams::new(mu, vec![1.0; p], vec![0.5; p])
}

/// Coordinate visiting order for the configuration.
pub fn update_order(cfg: &CaviConfig, init_mu: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..init_mu.len()).collect();
    if cfg.order == UpdateOrder::DataDriven {
        order.sort_by(|&a, &b| init_mu[b].abs().total_cmp(&init_mu[a].abs()).then(a.cmp(&b)));
    }
    order
}

/// Runs CAVI sweeps until the ELBO gain drops below the tolerance.
///
/// `init_coefficients` seeds the means when `cfg.init` is [`CaviInit::Lasso`];
/// it is ignored for a cold start.
pub fn fit_cavi(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    prior: &SpikeSlabPrior,
    cfg: &CaviConfig,
    init_coefficients: Option<&[f64]>,
) -> Result<CaviFit> {
    if !(cfg.tolerance > 0.0) {
        return Err(invalid("CAVI tolerance must be positive"));
    }
    if cfg.max_sweeps == 0 {
        return Err(invalid("CAVI needs at least one sweep"));
    }
    let p = x.ncols();
    let seed = match cfg.init {
        CaviInit::Lasso => init_coefficients,
        CaviInit::Cold => None,
    };
    let params = initial_params(p, seed)?;
    let order = update_order(cfg, &params.mu);
    let mut state = CaviState::new(x, y, params, *prior)?;
    let mut trace = vec![state.elbo()];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        for &i in &order {
            state.update_coordinate(i)?;
        }
        sweeps += 1;
        let value = state.elbo();
        if !value.is_finite() {
            return Err(Error::Numerical { index: 0, reason: "ELBO became non-finite".into() });
        }
        let gain = value - trace[trace.len() - 1];
        trace.push(value);
        if gain.abs() < cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok(CaviFit { params: state.into_params(), elbo_trace: trace, sweeps, converged })
}

/// One draw `zᵢ · N(μᵢ, τᵢ²)`, `zᵢ ~ Bernoulli(qᵢ)`, written into `out`.
pub fn sample_mf_into<R: Rng + ?Sized>(params: &VariationalParams, rng: &mut R, out: &mut [f64]) {
    for i in 0..params.len() {
        let u: f64 = rng.random();
        out[i] = if u < params.q[i] {
            let z: f64 = rng.sample(StandardNormal);
            params.mu[i] + params.tau[i] * z
        } else {
            0.0
        };
    }
}

pub fn sample_mf<R: Rng + ?Sized>(params: &VariationalParams, rng: &mut R) -> DVector<f64> {
    let mut out = vec![0.0; params.len()];
    sample_mf_into(params, rng, &mut out);
    DVector::from_vec(out)
}

pub fn mf_mean(params: &VariationalParams) -> DVector<f64> {
    params.mean()
}

/// Message when `λ` lies outside `[‖W‖/(p−1), 4‖W‖√log(p−1)]`, where `‖W‖`
/// is the largest column norm.
pub fn lambda_range_warning(x: &DMatrix<f64>, lambda: f64) -> Option<String> {
    let p = x.ncols();
    if p < 3 {
        return None;
    }
    let norm = (0..p).map(|j| x.column(j).norm()).fold(0.0, f64::max);
    let low = norm / (p - 1) as f64;
    let high = 4.0 * norm * ((p - 1) as f64).ln().sqrt();
    if lambda < low || lambda > high {
        Some(format!("slab scale {lambda} outside the recommended range [{low:.4}, {high:.4}]"))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn random_problem(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = seeded(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut beta = DVector::zeros(p);
        beta[0] = 2.0;
        let y = &x * &beta + DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (x, y)
    }

    #[test]
    fn all_spike_elbo() {
        let (x, y) = random_problem(10, 3, 1);
        let prior = SpikeSlabPrior::new(0.2, 1.0).unwrap();
        let params = VariationalParams::new(vec![0.3; 3], vec![1.0; 3], vec![0.0; 3]).unwrap();
        let expected = -0.5 * y.norm_squared() - 3.0 * (1.0f64 / 0.8).ln();
        assert!((elbo(&params, &x, &y, &prior).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn tau_enters_only_through_stated_terms() {
        let (x, y) = random_problem(12, 2, 2);
        let prior = SpikeSlabPrior::new(0.3, 1.5).unwrap();
        let a = VariationalParams::new(vec![0.5, -1.0], vec![0.4, 0.7], vec![0.6, 0.9]).unwrap();
        let mut b = a.clone();
        b.tau[0] *= 2.0;
        let (q, mu, t0) = (a.q[0], a.mu[0], a.tau[0]);
        let t1 = 2.0 * t0;
        let d = x.column(0).norm_squared();
        let lik = -0.5 * d * q * (t1 * t1 - t0 * t0);
        let kl = q * (1.5 * (folded_normal_mean(mu, t1) - folded_normal_mean(mu, t0)) - (t1 / t0).ln());
        let change = elbo(&b, &x, &y, &prior).unwrap() - elbo(&a, &x, &y, &prior).unwrap();
        assert!((change - (lik - kl)).abs() < 1e-10);
    }

    #[test]
    fn zero_column_update() {
        let mut x = DMatrix::zeros(5, 2);
        x[(0, 1)] = 1.0;
        let y = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let prior = SpikeSlabPrior::new(0.1, 1.0).unwrap();
        let params = initial_params(2, None).unwrap();
        let mut st = CaviState::new(&x, &y, params, prior).unwrap();
        let before = st.elbo();
        st.update_coordinate(0).unwrap();
        let p = &st.params;
        let tau_star = (2.0 * std::f64::consts::PI).sqrt() / 2.0;
        assert!(p.mu[0].abs() < 1e-10);
        assert!((p.tau[0] - tau_star).abs() < 1e-8);
        let f_star = -1.0 - 2f64.ln() + 0.5 * LN_2PI_E + tau_star.ln();
        let expected_q = logistic((0.1f64 / 0.9).ln() + f_star);
        assert!((p.q[0] - expected_q).abs() < 1e-9);
        assert!(st.elbo() >= before - 1e-12);
    }

    #[test]
    fn update_is_idempotent_and_monotone() {
        let (x, y) = random_problem(20, 4, 3);
        let prior = SpikeSlabPrior::new(0.25, 1.0).unwrap();
        let mut st = CaviState::new(&x, &y, initial_params(4, None).unwrap(), prior).unwrap();
        for i in 0..4 {
            let before = st.elbo();
            st.update_coordinate(i).unwrap();
            assert!(st.elbo() >= before - 1e-9);
        }
        st.update_coordinate(2).unwrap();
        let snapshot = st.params.clone();
        st.update_coordinate(2).unwrap();
        assert!((st.params.mu[2] - snapshot.mu[2]).abs() < 1e-9);
        assert!((st.params.tau[2] - snapshot.tau[2]).abs() < 1e-9);
        assert!((st.params.q[2] - snapshot.q[2]).abs() < 1e-9);
    }

    #[test]
    fn single_coordinate_matches_grid() {
        let (x, y) = random_problem(20, 1, 4);
        let prior = SpikeSlabPrior::new(0.5, 1.0).unwrap();
        let fit = fit_cavi(&x, &y, &prior, &CaviConfig { init: CaviInit::Cold, ..CaviConfig::default() }, None).unwrap();
        let got = fit.final_elbo();
        let mut best = f64::NEG_INFINITY;
        for a in 0..=120 {
            let mu = 1.0 + 2.0 * a as f64 / 120.0;
            for b in 1..=60 {
                let tau = 0.6 * b as f64 / 60.0;
                for c in 0..=20 {
                    let q = c as f64 / 20.0;
                    let p = VariationalParams::new(vec![mu], vec![tau], vec![q]).unwrap();
                    best = best.max(elbo(&p, &x, &y, &prior).unwrap());
                }
            }
        }
        assert!(got >= best - 1e-9, "cavi {got} below grid {best}");
        assert!(got - best < 0.05);
    }

    #[test]
    fn strong_orthogonal_signal() {
        let n = 50;
        let mut x = DMatrix::zeros(n, 3);
        for i in 0..n {
            x[(i, i % 3)] = 1.0;
        }
        let mut rng = seeded(5);
        let y = DVector::from_fn(n, |i, _| if i % 3 == 0 { 4.0 } else { 0.0 } + rng.sample::<f64, _>(StandardNormal));
        let prior = SpikeSlabPrior::new(1.0 / 3.0, 1.0).unwrap();
        let fit = fit_cavi(&x, &y, &prior, &CaviConfig::default(), None).unwrap();
        let ols = x.column(0).dot(&y) / x.column(0).norm_squared();
        let p = &fit.params;
        assert!(p.q[0] > 0.99);
        assert!((p.mu[0] - ols).abs() < 3.0 * p.tau[0]);
        assert!(fit.elbo_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
    }

    #[test]
    fn null_response_switches_off() {
        let (x, _) = random_problem(40, 10, 6);
        let y = DVector::zeros(40);
        let prior = SpikeSlabPrior::new(0.01, 1.0).unwrap();
        let fit = fit_cavi(&x, &y, &prior, &CaviConfig::default(), None).unwrap();
        assert!(fit.params.q.iter().all(|&q| q < 0.05));
    }

    #[test]
    fn sampler_edge_cases_and_moments() {
        let off = VariationalParams::new(vec![1.0; 3], vec![1.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(sample_mf(&off, &mut seeded(1)), DVector::zeros(3));
        let point = VariationalParams::new(vec![1.5, -2.0], vec![1e-300; 2], vec![1.0; 2]).unwrap();
        assert_eq!(sample_mf(&point, &mut seeded(2)), DVector::from_vec(vec![1.5, -2.0]));

        let params = VariationalParams::new(vec![2.0, -1.0], vec![0.5, 2.0], vec![0.3, 0.8]).unwrap();
        let mut rng = seeded(3);
        let draws = 100_000;
        let (mut s, mut ss) = (DVector::zeros(2), DVector::zeros(2));
        for _ in 0..draws {
            let b = sample_mf(&params, &mut rng);
            s += &b;
            ss += b.component_mul(&b);
        }
        let mean = &s / draws as f64;
        let var = &ss / draws as f64 - mean.component_mul(&mean);
        let (em, ev) = (params.mean(), params.variances());
        for i in 0..2 {
            assert!((mean[i] - em[i]).abs() < 3.0 * (ev[i] / draws as f64).sqrt());
            assert!((var[i] / ev[i] - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn data_driven_order_sorts_by_magnitude() {
        let cfg = CaviConfig::default();
        assert_eq!(update_order(&cfg, &[0.1, -3.0, 0.0, 2.0]), vec![1, 3, 0, 2]);
        let idx = CaviConfig { order: UpdateOrder::Index, ..cfg };
        assert_eq!(update_order(&idx, &[0.1, -3.0, 0.0, 2.0]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn invalid_prior_rejected() {
        assert!(SpikeSlabPrior::new(0.0, 1.0).is_err());
        assert!(SpikeSlabPrior::new(0.5, -1.0).is_err());
    }
}
