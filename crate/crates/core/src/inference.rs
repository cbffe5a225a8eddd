//! Credible intervals and ellipsoids built from posterior draws, and the χ²
//! quantile they need.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::dist::normal_quantile;
use crate::error::{dim, invalid, Error, Result};
use crate::linalg::SpdMatrix;
use crate::target::{matrix_to_rows, rows_to_matrix};

/// Relative slack on membership tests, so boundary points count as inside.
const MEMBERSHIP_SLACK: f64 = 1e-12;
/// Variance used for an all-zero sample covariance: any other point is excluded.
const POINT_VARIANCE: f64 = 1e-300;

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("credible level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

pub fn chi2_cdf(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(k as f64 / 2.0, x / 2.0)
}

fn chi2_ln_pdf(x: f64, k: usize) -> f64 {
    let h = k as f64 / 2.0;
    (h - 1.0) * x.ln() - x / 2.0 - h * std::f64::consts::LN_2 - ln_gamma(h)
}

/// Inverse χ²ₖ CDF: Wilson–Hilferty start, then Newton safeguarded by a
/// bisection bracket.
pub fn chi2_quantile(level: f64, k: usize) -> Result<f64> {
    check_level(level)?;
    if k == 0 {
        return Err(invalid("chi-square degrees of freedom must be at least 1"));
    }
    let kf = k as f64;
    let a = 2.0 / (9.0 * kf);
    let z = normal_quantile(level);
    let mut x = (kf * (1.0 - a + z * a.sqrt()).powi(3)).max(1e-8 * kf);

    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while chi2_cdf(hi, k) < level {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let f = chi2_cdf(x, k) - level;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / chi2_ln_pdf(x, k).exp();
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Type-7 (linearly interpolated) empirical quantile of sorted values.
pub fn sorted_quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl CredibleInterval {
    pub fn new(lower: f64, upper: f64, level: f64) -> Result<Self> {
        check_level(level)?;
        if !(lower <= upper) {
            return Err(invalid(format!("interval bounds out of order: [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper, level })
    }

    pub fn from_samples(samples: &[f64], level: f64) -> Result<Self> {
        check_level(level)?;
        if samples.len() < 2 {
            return Err(invalid(format!("need at least 2 samples, got {}", samples.len())));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("samples"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let tail = (1.0 - level) / 2.0;
        Self::new(sorted_quantile(&sorted, tail), sorted_quantile(&sorted, 1.0 - tail), level)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// `{v : (v − c)ᵀ Θ⁻¹ (v − c) ≤ χ}` on the free coordinates, with the
/// `fixed` coordinates pinned to the center.
#[derive(Clone, Debug)]
pub struct CredibleEllipsoid {
    pub center: DVector<f64>,
    pub shape: DMatrix<f64>,
    pub threshold: f64,
    pub level: f64,
    pub fixed: Vec<bool>,
    pub regularized: bool,
    free: Vec<usize>,
    factor: Option<SpdMatrix>,
}

impl PartialEq for CredibleEllipsoid {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center
            && self.shape == other.shape
            && self.threshold == other.threshold
            && self.level == other.level
            && self.fixed == other.fixed
            && self.regularized == other.regularized
    }
}

/// Cholesky-backed copy of `m`, with a ridge of `1e-12·trace/k` added when
/// `m` is numerically singular. Returns the matrix used and whether the
/// ridge was applied.
fn regularize(m: DMatrix<f64>) -> Result<(SpdMatrix, bool)> {
    let k = m.nrows();
    let mean_diag = m.trace() / k as f64;
    if !(mean_diag > 0.0) {
        if m.iter().any(|v| *v != 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        return Ok((SpdMatrix::new(DMatrix::identity(k, k) * POINT_VARIANCE)?, true));
    }
    let ridge = 1e-12 * mean_diag;
    if let Ok(spd) = SpdMatrix::new(m.clone()) {
        let l = spd.cholesky_l();
        if (0..k).all(|i| l[(i, i)] * l[(i, i)] > ridge) {
            return Ok((spd, false));
        }
    }
    let mut r = m;
    for i in 0..k {
        r[(i, i)] += ridge;
    }
    Ok((SpdMatrix::new(r)?, true))
}

impl CredibleEllipsoid {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>, level: f64, fixed: Vec<bool>) -> Result<Self> {
        check_level(level)?;
        let k = center.len();
        if k == 0 {
            return Err(invalid("ellipsoid needs at least one coordinate"));
        }
        if shape.shape() != (k, k) || fixed.len() != k {
            return Err(dim(format!("ellipsoid of dimension {k} got a {}x{} shape", shape.nrows(), shape.ncols())));
        }
        let free: Vec<usize> = (0..k).filter(|&i| !fixed[i]).collect();
        let (factor, regularized, threshold) = if free.is_empty() {
            (None, false, 0.0)
        } else {
            let sub = DMatrix::from_fn(free.len(), free.len(), |a, b| shape[(free[a], free[b])]);
            let (spd, reg) = regularize(sub)?;
            (Some(spd), reg, chi2_quantile(level, free.len())?)
        };
        Ok(Self { center, shape, threshold, level, fixed, regularized, free, factor })
    }

    /// Sample mean and `1/n_s` covariance of the rows of `draws`.
    pub fn from_samples(draws: &DMatrix<f64>, level: f64) -> Result<Self> {
        let (n_s, k) = draws.shape();
        if n_s <= k {
            return Err(invalid(format!("need more than {k} samples, got {n_s}")));
        }
        if draws.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("samples"));
        }
        let center = DVector::from_fn(k, |j, _| draws.column(j).mean());
        let mut centered = draws.clone();
        for j in 0..k {
            centered.column_mut(j).add_scalar_mut(-center[j]);
        }
        let shape = centered.tr_mul(&centered) / n_s as f64;
        Self::new(center, shape, level, vec![false; k])
    }

    pub fn k(&self) -> usize {
        self.center.len()
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        match &self.factor {
            None => 0.0,
            Some(f) => {
                let d = DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| v[i] - self.center[i]));
                f.inv_quad_form(&d)
            }
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        if v.len() != self.k() {
            return false;
        }
        let pinned = (0..self.k())
            .filter(|&i| self.fixed[i])
            .all(|i| (v[i] - self.center[i]).abs() <= MEMBERSHIP_SLACK * self.center[i].abs().max(1.0));
        pinned && self.quad_form(v) <= self.threshold * (1.0 + MEMBERSHIP_SLACK)
    }

    /// `√det Θ · χ^{k/2}`, proportional to the volume; zero when any
    /// coordinate is pinned.
    pub fn volume_proxy(&self) -> f64 {
        match &self.factor {
            Some(f) if self.free.len() == self.k() => {
                let k = self.k() as f64;
                (0.5 * f.ln_determinant() + 0.5 * k * self.threshold.ln()).exp()
            }
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RegionSpec", try_from = "RegionSpec")]
pub enum CredibleRegion {
    Interval(CredibleInterval),
    Ellipsoid(CredibleEllipsoid),
}

impl CredibleRegion {
    /// Interval for one column, ellipsoid otherwise.
    pub fn from_samples(draws: &DMatrix<f64>, level: f64) -> Result<Self> {
        if draws.ncols() == 1 {
            Ok(Self::Interval(CredibleInterval::from_samples(draws.column(0).as_slice(), level)?))
        } else {
            Ok(Self::Ellipsoid(CredibleEllipsoid::from_samples(draws, level)?))
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Self::Interval(_) => 1,
            Self::Ellipsoid(e) => e.k(),
        }
    }

    pub fn level(&self) -> f64 {
        match self {
            Self::Interval(i) => i.level,
            Self::Ellipsoid(e) => e.level,
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        match self {
            Self::Interval(i) => v.len() == 1 && i.contains(v[0]),
            Self::Ellipsoid(e) => e.contains(v),
        }
    }

    /// Interval length or ellipsoid volume proxy.
    pub fn size(&self) -> f64 {
        match self {
            Self::Interval(i) => i.length(),
            Self::Ellipsoid(e) => e.volume_proxy(),
        }
    }

    /// Midpoint or ellipsoid center.
    pub fn center(&self) -> DVector<f64> {
        match self {
            Self::Interval(i) => DVector::from_element(1, i.midpoint()),
            Self::Ellipsoid(e) => e.center.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    Interval {
        lower: f64,
        upper: f64,
        level: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        shape: Vec<Vec<f64>>,
        threshold: f64,
        level: f64,
        #[serde(default)]
        fixed: Vec<bool>,
        #[serde(default)]
        regularized: bool,
    },
}

impl From<CredibleRegion> for RegionSpec {
    fn from(r: CredibleRegion) -> Self {
        match r {
            CredibleRegion::Interval(i) => Self::Interval { lower: i.lower, upper: i.upper, level: i.level },
            CredibleRegion::Ellipsoid(e) => Self::Ellipsoid {
                center: e.center.iter().copied().collect(),
                shape: matrix_to_rows(&e.shape),
                threshold: e.threshold,
                level: e.level,
                fixed: e.fixed,
                regularized: e.regularized,
            },
        }
    }
}

impl TryFrom<RegionSpec> for CredibleRegion {
    type Error = Error;

    fn try_from(s: RegionSpec) -> Result<Self> {
        match s {
            RegionSpec::Interval { lower, upper, level } => Ok(Self::Interval(CredibleInterval::new(lower, upper, level)?)),
            RegionSpec::Ellipsoid { center, shape, level, fixed, .. } => {
                let k = center.len();
                let fixed = if fixed.is_empty() { vec![false; k] } else { fixed };
                let e = CredibleEllipsoid::new(DVector::from_vec(center), rows_to_matrix(&shape)?, level, fixed)?;
                Ok(Self::Ellipsoid(e))
            }
        }
    }
}
