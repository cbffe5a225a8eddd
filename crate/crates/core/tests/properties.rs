mod common;

use common::*;

fn run(check: Check) {
    if let Err(msg) = check {
        panic!("{msg}");
    }
}

#[test]
fn projection_and_likelihood_decomposition() {
    run(projection_identities());
}

#[test]
fn elbo_never_decreases() {
    run(elbo_monotone());
}

#[test]
fn elbo_agrees_with_simulation() {
    run(elbo_matches_monte_carlo());
}

#[test]
fn improper_posterior_moments() {
    run(improper_target_moments());
}

#[test]
fn laplace_draws_follow_quadrature_cdf() {
    run(laplace_sampler_cdf());
}

#[test]
fn chi_square_quantile_accuracy() {
    run(chi2_quantiles());
}

#[test]
fn lasso_optimality() {
    run(lasso_kkt_and_soft_threshold());
}

#[test]
fn bias_ratio_within_coherence_bound() {
    run(coherence_bound());
}

#[test]
fn heuristic_variance_identities() {
    run(heuristic_identities());
}

#[test]
fn ks_statistic_of_exact_quantiles_is_small() {
    let n = 1000;
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let d = ks_statistic(&mut u, |x| x.clamp(0.0, 1.0));
    assert!((d - 0.5 / n as f64).abs() < 1e-12);
    assert!(!ks_rejects_at_001(d, n));
    assert!(ks_rejects_at_001(0.06, n));
}

#[test]
fn standardized_draws_look_normal_for_a_few_seeds() {
    let out = bvm(5, 1000).unwrap();
    assert!(out.passed >= 4, "{} of {} seeds passed", out.passed, out.seeds);
}
