//! Scalar normal-distribution helpers shared by the variational and sampling code.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use statrs::function::erf;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

/// `log Φ(x)`, accurate deep into the lower tail.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        (0.5 * erf::erfc(-x / SQRT_2)).ln()
    } else {
        // Asymptotic Mills-ratio expansion.
        let z2 = 1.0 / (x * x);
        let series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2 + 105.0 * z2.powi(4);
        -0.5 * x * x - LN_SQRT_2PI - (-x).ln() + series.ln()
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erf::erfc_inv(2.0 * p)
}

/// `1 - 2Φ(-a) = erf(a/√2)`.
pub fn sign_balance(a: f64) -> f64 {
    erf::erf(a / SQRT_2)
}

/// `E|Z|` for `Z ~ N(mu, tau^2)`.
pub fn folded_normal_mean(mu: f64, tau: f64) -> f64 {
    let a = mu / tau;
    mu * sign_balance(a) + 2.0 * tau * normal_pdf(a)
}

/// Standard normal conditioned on `[lower, ∞)`.
pub fn sample_std_normal_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower < 0.5 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z >= lower {
                return z;
            }
        }
    }
    // Exponential proposal with the optimal rate.
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let z = lower + exp.sample(rng);
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * (z - rate) * (z - rate) {
            return z;
        }
    }
}

/// Draw from `N(mean, sd^2)` truncated to `[lower, ∞)`.
pub fn sample_truncated_above<R: Rng + ?Sized>(mean: f64, sd: f64, lower: f64, rng: &mut R) -> f64 {
    mean + sd * sample_std_normal_above((lower - mean) / sd, rng)
}

/// Draw from `N(mean, sd^2)` truncated to `(-∞, upper]`.
pub fn sample_truncated_below<R: Rng + ?Sized>(mean: f64, sd: f64, upper: f64, rng: &mut R) -> f64 {
    mean - sd * sample_std_normal_above((mean - upper) / sd, rng)
}
