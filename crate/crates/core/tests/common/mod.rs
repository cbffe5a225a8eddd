//! Checks shared by the property tests and the acceptance runner. Each returns
//! `Err` with a description of the first violation.

#![allow(dead_code)]

use isvb::baselines::{heuristic_ar, heuristic_equicorrelated, heuristic_general};
use isvb::cavi::{elbo, fit_cavi, CaviConfig, CaviInit, CaviState, SpikeSlabPrior, VariationalParams};
use isvb::data::{generate_dataset, Dataset, DesignKind, Scenario, ValueSpec};
use isvb::diagnostics::design_diagnostics;
use isvb::dist::normal_cdf;
use isvb::inference::{chi2_cdf, chi2_quantile};
use isvb::lasso::{lasso_path, soft_threshold};
use isvb::model::{fit, IsvbConfig};
use isvb::preprocess::{preprocess, select_columns};
use isvb::rng::{seeded, stream};
use isvb::target::{build_target_posterior, sample_target, GPrior};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

pub fn gaussian(n: usize, p: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    let x = gaussian(n, p, &mut rng);
    let beta = DVector::from_fn(p, |i, _| if i < 3 { 2.0 } else { 0.0 });
    let y = &x * beta + DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Dataset::new(x, y).unwrap()
}

pub fn projection_identities() -> Check {
    for case in 0..20u64 {
        let mut rng = stream(101, case);
        let n = rng.random_range(8..40);
        let p = rng.random_range(3..20);
        let k = rng.random_range(1..=3.min(p - 1));
        let d = random_dataset(n, p, 1000 + case);
        let mut targets: Vec<usize> = (0..p).collect();
        for i in 0..k {
            let j = rng.random_range(i..p);
            targets.swap(i, j);
        }
        targets.truncate(k);
        let pp = preprocess(&d, &targets).map_err(|e| e.to_string())?;
        let pb = &pp.p_basis;
        ensure!(pb.shape() == (n, n - k), "case {case}: P has shape {:?}", pb.shape());
        let gram_err = (pb.tr_mul(pb) - DMatrix::<f64>::identity(n - k, n - k)).amax();
        ensure!(gram_err < 1e-8, "case {case}: |PᵀP − I| = {gram_err:e}");
        let x_t = select_columns(&d.x, &targets);
        let kill = pb.tr_mul(&x_t).amax() / x_t.amax();
        ensure!(kill < 1e-8, "case {case}: |PᵀX_T| = {kill:e}");
        let w_err = (pb.tr_mul(&select_columns(&d.x, &pp.rest)) - &pp.w_check).amax();
        ensure!(w_err < 1e-8, "case {case}: W̌ differs from PᵀX₋ₖ by {w_err:e}");

        let beta = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta_t = DVector::from_fn(k, |i, _| beta[targets[i]]);
        let beta_rest = DVector::from_fn(pp.rest.len(), |i, _| beta[pp.rest[i]]);
        let lhs = (&d.y - &d.x * &beta).norm_squared();
        let star = &beta_t + &pp.gamma * &beta_rest;
        let m = (x_t.tr_mul(&x_t)).try_inverse().unwrap() * x_t.tr_mul(&d.y);
        let diff = &star - &m;
        let rhs = (&pp.y_check - &pp.w_check * &beta_rest).norm_squared() + (diff.transpose() * x_t.tr_mul(&x_t) * &diff)[0];
        ensure!((lhs - rhs).abs() <= 1e-8 * lhs.max(1.0), "case {case}: decomposition {lhs} vs {rhs}");
    }
    Ok(())
}

fn random_params(p: usize, rng: &mut impl Rng) -> VariationalParams {
    VariationalParams::new(
        (0..p).map(|_| rng.random_range(-2.0..2.0)).collect(),
        (0..p).map(|_| rng.random_range(0.1..1.5)).collect(),
        (0..p).map(|_| rng.random_range(0.02..0.98)).collect(),
    )
    .unwrap()
}

pub fn elbo_monotone() -> Check {
    for case in 0..50u64 {
        let mut rng = stream(202, case);
        let n = rng.random_range(5..30);
        let p = rng.random_range(2..10);
        let x = gaussian(n, p, &mut rng);
        let y = DVector::from_fn(n, |i, _| 1.5 * x[(i, 0)] + rng.sample::<f64, _>(StandardNormal));
        let prior = SpikeSlabPrior::new(rng.random_range(0.05..0.5), rng.random_range(0.3..3.0)).unwrap();
        let mut state = CaviState::new(&x, &y, random_params(p, &mut rng), prior).map_err(|e| e.to_string())?;
        let mut last = state.elbo();
        for sweep in 0..10 {
            let before = last;
            for i in 0..p {
                state.update_coordinate(i).map_err(|e| e.to_string())?;
                let now = state.elbo();
                ensure!(now >= last - 1e-8, "case {case} sweep {sweep} coordinate {i}: ELBO fell {last} -> {now}");
                last = now;
            }
            ensure!(last >= before - 1e-8, "case {case}: sweep {sweep} lowered the ELBO");
        }
        let cfg = CaviConfig { init: CaviInit::Cold, ..CaviConfig::default() };
        let f = fit_cavi(&x, &y, &prior, &cfg, None).map_err(|e| e.to_string())?;
        ensure!(f.elbo_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8), "case {case}: fit trace not monotone");
    }
    Ok(())
}

/// `E_Q[−½‖Y − Xβ‖²] − E_Q[log q(β)/π(β)]` by direct simulation.
fn monte_carlo_elbo(
    params: &VariationalParams,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    prior: &SpikeSlabPrior,
    draws: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let p = params.mu.len();
    let (w, lambda) = (prior.inclusion, prior.slab_scale);
    let mut beta = DVector::zeros(p);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let mut log_ratio = 0.0;
        for i in 0..p {
            let q = params.q[i];
            if rng.random::<f64>() < q {
                let z: f64 = rng.sample(StandardNormal);
                let b = params.mu[i] + params.tau[i] * z;
                beta[i] = b;
                let log_q = q.ln() - 0.5 * z * z - params.tau[i].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
                let log_pi = w.ln() + (lambda / 2.0).ln() - lambda * b.abs();
                log_ratio += log_q - log_pi;
            } else {
                beta[i] = 0.0;
                log_ratio += ((1.0 - q) / (1.0 - w)).ln();
            }
        }
        let v = -0.5 * (y - x * &beta).norm_squared() - log_ratio;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
    (mean, (var / draws as f64).sqrt())
}

pub fn elbo_matches_monte_carlo() -> Check {
    for case in 0..8u64 {
        let mut rng = stream(303, case);
        let n = rng.random_range(4..=20);
        let p = rng.random_range(1..=5);
        let x = gaussian(n, p, &mut rng);
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let prior = SpikeSlabPrior::new(rng.random_range(0.1..0.6), rng.random_range(0.5..2.0)).unwrap();
        let params = random_params(p, &mut rng);
        let exact = elbo(&params, &x, &y, &prior).map_err(|e| e.to_string())?;
        let (mc, se) = monte_carlo_elbo(&params, &x, &y, &prior, 200_000, &mut rng);
        ensure!((exact - mc).abs() <= 3.0 * se, "case {case}: ELBO {exact} vs Monte Carlo {mc} ± {se}");
    }
    Ok(())
}

pub fn improper_target_moments() -> Check {
    for case in 0..6u64 {
        let k = 1 + (case as usize % 3);
        let d = random_dataset(30, 8, 400 + case);
        let targets: Vec<usize> = (0..k).map(|i| (2 * i + case as usize) % 8).collect();
        let pp = preprocess(&d, &targets).map_err(|e| e.to_string())?;
        let tp = build_target_posterior(&pp, GPrior::Improper).map_err(|e| e.to_string())?;
        let (mean, cov) = tp.gaussian_moments().ok_or("improper posterior is not Gaussian")?;
        let x_t = select_columns(&d.x, &targets);
        let inv = x_t.tr_mul(&x_t).try_inverse().ok_or("singular target Gram matrix")?;
        let m = &inv * x_t.tr_mul(&d.y);
        let mean_err = (&mean - &m).amax() / m.amax().max(1.0);
        let cov_err = (&cov - &inv).amax() / inv.amax();
        ensure!(mean_err < 1e-10 && cov_err < 1e-10, "case {case}: moment errors {mean_err:e}, {cov_err:e}");

        let n_s = 40_000;
        let draws = sample_target(&tp, n_s, &mut seeded(case)).map_err(|e| e.to_string())?.draws;
        for c in 0..k {
            let col = draws.column(c);
            let avg = col.mean();
            let var = col.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (n_s - 1) as f64;
            let se_mean = (cov[(c, c)] / n_s as f64).sqrt();
            let se_var = cov[(c, c)] * (2.0 / (n_s - 1) as f64).sqrt();
            ensure!((avg - m[c]).abs() <= 3.0 * se_mean, "case {case}: draw mean {avg} vs {}", m[c]);
            ensure!((var - cov[(c, c)]).abs() <= 3.0 * se_var, "case {case}: draw variance {var} vs {}", cov[(c, c)]);
        }
    }
    Ok(())
}

/// Composite Simpson rule with `2m` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / (2 * m) as f64;
    let mut s = f(a) + f(b);
    for i in 1..2 * m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub fn laplace_sampler_cdf() -> Check {
    let cases = [(0.2, 1.0), (3.0, 0.5), (-1.0, 2.0), (0.05, 0.1)];
    for (case, &(shift, sigma_n)) in cases.iter().enumerate() {
        let mut rng = stream(505, case as u64);
        let n = 25;
        let x = gaussian(n, 3, &mut rng);
        let y = DVector::from_fn(n, |i, _| shift * x[(i, 0)] + 0.5 * x[(i, 2)] + rng.sample::<f64, _>(StandardNormal));
        let d = Dataset::new(x, y).unwrap();
        let pp = preprocess(&d, &[0]).map_err(|e| e.to_string())?;
        let tp = build_target_posterior(&pp, GPrior::Laplace { sigma_n }).map_err(|e| e.to_string())?;
        let mut draws: Vec<f64> = sample_target(&tp, 100_000, &mut seeded(9)).map_err(|e| e.to_string())?.draws.iter().copied().collect();
        draws.sort_by(f64::total_cmp);

        let g = d.x.column(0).norm_squared();
        let m = d.x.column(0).dot(&d.y) / g;
        let density = |u: f64| (-0.5 * g * (u - m).powi(2) - u.abs() / sigma_n).exp();
        let (lo, hi) = (m - 12.0 / g.sqrt() - 20.0 * sigma_n, m + 12.0 / g.sqrt() + 20.0 * sigma_n);
        let integral = |a: f64, b: f64| {
            if a < 0.0 && b > 0.0 {
                simpson(density, a, 0.0, 4000) + simpson(density, 0.0, b, 4000)
            } else {
                simpson(density, a, b, 4000)
            }
        };
        let total = integral(lo, hi);
        for j in 1..100 {
            let point = draws[j * draws.len() / 100];
            let cdf = integral(lo, point) / total;
            let empirical = j as f64 / 100.0;
            ensure!((cdf - empirical).abs() <= 0.01, "case {case}: CDF {cdf:.4} vs empirical {empirical:.2} at {point}");
        }
    }
    Ok(())
}

fn gamma_half(k: usize) -> f64 {
    // Γ(k/2) for small k by the recurrence from Γ(1) = 1 and Γ(½) = √π.
    let mut v = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut a = if k % 2 == 0 { 1.0 } else { 0.5 };
    while a + 0.5 < k as f64 / 2.0 {
        v *= a;
        a += 1.0;
    }
    v
}

fn chi2_cdf_quadrature(x: f64, k: usize) -> f64 {
    let c = 1.0 / (2f64.powf(k as f64 / 2.0) * gamma_half(k));
    // t = u² keeps the integrand smooth at the origin for odd k.
    simpson(|u| 2.0 * c * u.powi(k as i32 - 1) * (-u * u / 2.0).exp(), 0.0, x.sqrt(), 20_000)
}

pub fn chi2_quantiles() -> Check {
    for k in 1..=12 {
        for &level in &[0.01, 0.1, 0.5, 0.9, 0.95, 0.99, 0.999] {
            let q = chi2_quantile(level, k).map_err(|e| e.to_string())?;
            let back = chi2_cdf(q, k);
            ensure!((back - level).abs() < 1e-9, "k = {k}, level {level}: round trip gives {back}");
        }
    }
    for &k in &[2usize, 3, 4, 6] {
        let (mut lo, mut hi) = (0.0, 60.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if chi2_cdf_quadrature(mid, k) < 0.95 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let q = chi2_quantile(0.95, k).map_err(|e| e.to_string())?;
        ensure!((q - oracle).abs() < 1e-8, "k = {k}: quantile {q} vs quadrature {oracle}");
    }
    Ok(())
}

pub fn lasso_kkt_and_soft_threshold() -> Check {
    for case in 0..10u64 {
        let mut rng = stream(606, case);
        let n = rng.random_range(20..60);
        let p = rng.random_range(5..80);
        let d = random_dataset(n, p, 600 + case);
        let lmax = (d.x.tr_mul(&d.y) / n as f64).amax();
        let lambdas: Vec<f64> = (0..15).map(|i| lmax * 0.7f64.powi(i)).collect();
        let path = lasso_path(&d.x, &d.y, &lambdas).map_err(|e| e.to_string())?;
        for fit in &path {
            let grad = d.x.tr_mul(&(&d.y - &d.x * &fit.coefficients)) / n as f64;
            for j in 0..p {
                let b = fit.coefficients[j];
                let bad = if b == 0.0 {
                    grad[j].abs() - fit.lambda
                } else {
                    (grad[j] - fit.lambda * b.signum()).abs()
                };
                ensure!(bad <= 1e-6, "case {case}, λ = {}: KKT violated by {bad:e} at {j}", fit.lambda);
            }
        }
    }
    for case in 0..20u64 {
        let mut rng = stream(607, case);
        let n = rng.random_range(1..30);
        let x = gaussian(n, 1, &mut rng);
        let y = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let lambda = rng.random_range(0.01..2.0);
        let fit = &lasso_path(&x, &y, &[lambda]).map_err(|e| e.to_string())?[0];
        let nf = n as f64;
        let closed = soft_threshold(x.column(0).dot(&y) / nf, lambda) / (x.column(0).norm_squared() / nf);
        ensure!((fit.coefficients[0] - closed).abs() < 1e-10, "case {case}: {} vs {closed}", fit.coefficients[0]);
    }
    Ok(())
}

pub fn coherence_bound() -> Check {
    for case in 0..100u64 {
        let mut rng = stream(707, case);
        let n = rng.random_range(10..80);
        let p = rng.random_range(2..60);
        let rho: f64 = rng.random_range(0.0..0.95);
        let x = match case % 4 {
            0 => gaussian(n, p, &mut rng),
            1 => DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0)),
            2 => {
                let z = gaussian(n, p + 1, &mut rng);
                DMatrix::from_fn(n, p, |i, j| rho.sqrt() * z[(i, p)] + (1.0 - rho).sqrt() * z[(i, j)])
            }
            _ => {
                let z = gaussian(n, p, &mut rng);
                let mut x = z.clone();
                for j in 1..p {
                    for i in 0..n {
                        x[(i, j)] = rho * x[(i, j - 1)] + (1.0 - rho * rho).sqrt() * z[(i, j)];
                    }
                }
                x
            }
        };
        let t = rng.random_range(0..p);
        let diag = design_diagnostics(&x, &[t]).map_err(|e| e.to_string())?;
        if diag.mc < 1.0 - 1e-12 {
            let bound = diag.mc / (1.0 - diag.mc);
            ensure!(diag.bias_ratio <= bound * (1.0 + 1e-12), "case {case}: ratio {} above bound {bound}", diag.bias_ratio);
            ensure!(diag.bound_ok == Some(true), "case {case}: bound flagged as violated");
        }
    }
    Ok(())
}

pub fn heuristic_identities() -> Check {
    let n = 250;
    let inv_n = 1.0 / n as f64;
    for s0 in 1..=12 {
        for h in [heuristic_ar(0.0, s0, n), heuristic_equicorrelated(0.0, s0, n)] {
            let h = h.map_err(|e| e.to_string())?;
            for v in [h.oracle, h.mf, h.isvb] {
                ensure!((v - inv_n).abs() < 1e-15, "s0 = {s0}: ρ = 0 variance {v} is not 1/n");
            }
        }
        let support: Vec<usize> = (0..s0).map(|i| 3 * i).collect();
        let h = heuristic_general(&DMatrix::identity(40, 40), &support, n).map_err(|e| e.to_string())?;
        ensure!((h.isvb - inv_n).abs() < 1e-15 && (h.oracle - inv_n).abs() < 1e-15, "identity covariance does not give 1/n");
    }
    for i in 0..20 {
        let rho = i as f64 * 0.049;
        let h = heuristic_ar(rho, 2, n).map_err(|e| e.to_string())?;
        ensure!((h.isvb - h.oracle).abs() <= 1e-12 * h.oracle, "ρ = {rho}: AR s0 = 2 gives {} vs {}", h.isvb, h.oracle);
        let ar = DMatrix::from_fn(10, 10, |a, b| rho.powi((a as i32 - b as i32).abs()));
        let g = heuristic_general(&ar, &[4, 5], n).map_err(|e| e.to_string())?;
        ensure!((g.isvb - g.oracle).abs() <= 1e-12 * g.oracle, "ρ = {rho}: general AR form disagrees");
    }
    for i in 0..10 {
        let rho = i as f64 * 0.1;
        for s0 in 1..=20 {
            for h in [heuristic_ar(rho, s0, n), heuristic_equicorrelated(rho, s0, n)] {
                let h = h.map_err(|e| e.to_string())?;
                ensure!(h.isvb >= h.mf - 1e-15, "ρ = {rho}, s0 = {s0}: I-SVB {} below MF {}", h.isvb, h.mf);
            }
        }
    }
    Ok(())
}

pub fn property_suite() -> Vec<(&'static str, Check)> {
    vec![
        ("projection identities", projection_identities()),
        ("ELBO monotone", elbo_monotone()),
        ("ELBO vs Monte Carlo", elbo_matches_monte_carlo()),
        ("improper target moments", improper_target_moments()),
        ("Laplace sampler CDF", laplace_sampler_cdf()),
        ("chi-square quantiles", chi2_quantiles()),
        ("LASSO KKT and soft threshold", lasso_kkt_and_soft_threshold()),
        ("coherence bound", coherence_bound()),
        ("heuristic variances", heuristic_identities()),
    ]
}

/// Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Rejects at level 0.01 using Stephens' finite-sample form of the
/// asymptotic critical value 1.628.
pub fn ks_rejects_at_001(d: f64, n: usize) -> bool {
    let rn = (n as f64).sqrt();
    d * (rn + 0.12 + 0.11 / rn) > 1.628
}

pub struct BvmOutcome {
    pub passed: usize,
    pub seeds: usize,
}

pub fn bvm_scenario() -> Scenario {
    Scenario {
        id: Some("bvm".into()),
        n: 400,
        p: 100,
        s0: 5,
        k: 1,
        target_values: ValueSpec::LogN(1.0),
        other_values: ValueSpec::LogN(1.0),
        rho: 0.0,
        sigma2: 1.0,
        design_kind: DesignKind::Identity,
        support: Default::default(),
        sparsity: Default::default(),
    }
}

/// Draws from the fitted I-SVB posterior, standardized by its closed-form
/// mean and variance, tested against N(0, 1).
pub fn bvm(seeds: usize, n_samples: usize) -> Result<BvmOutcome, String> {
    let s = bvm_scenario();
    let mut passed = 0;
    for seed in 0..seeds as u64 {
        let d = generate_dataset(&s, &mut stream(808, seed)).map_err(|e| e.to_string())?;
        let model = fit(&d, &[0], &IsvbConfig::default(), &mut stream(809, seed)).map_err(|e| e.to_string())?;
        let mean = model.sampler.mean().ok_or("no closed-form mean")?[0];
        let sd = model.sampler.covariance().ok_or("no closed-form covariance")?[(0, 0)].sqrt();
        let draws = model.draw(n_samples, &mut stream(810, seed)).map_err(|e| e.to_string())?;
        let mut z: Vec<f64> = draws.column(0).iter().map(|v| (v - mean) / sd).collect();
        let ks = ks_statistic(&mut z, normal_cdf);
        if !ks_rejects_at_001(ks, n_samples) {
            passed += 1;
        }
    }
    Ok(BvmOutcome { passed, seeds })
}
