//! Design conditions: mutual coherence and the bias ratio it bounds.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::Householder;
use crate::preprocess::{select_columns, validate_targets};

/// Coherence at or above this is treated as 1 and the bound is not checked.
const COHERENCE_ONE: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignDiagnostics {
    pub mc: f64,
    pub bias_ratio: f64,
    /// `mc/(1 − mc)`, absent when `mc` is 1.
    pub bound: Option<f64>,
    /// `None` when the bound is not defined.
    pub bound_ok: Option<bool>,
}

/// Largest absolute cosine between two distinct columns.
pub fn mutual_coherence(x: &DMatrix<f64>) -> Result<f64> {
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|n| *n == 0.0) {
        return Err(invalid(format!("column {} is zero", j + 1)));
    }
    let gram = x.tr_mul(x);
    let mut mc = 0.0f64;
    for i in 0..x.ncols() {
        for j in 0..i {
            mc = mc.max(gram[(i, j)].abs() / (norms[i] * norms[j]));
        }
    }
    Ok(mc.min(1.0))
}

/// `max‖HXᵢ‖ / max‖(I − H)Xᵢ‖` over non-target columns, `H` the projection
/// onto the target columns.
pub fn bias_ratio(x: &DMatrix<f64>, targets: &[usize]) -> Result<f64> {
    validate_targets(targets, x.ncols())?;
    let hh = Householder::factor(&select_columns(x, targets))?;
    let rest: Vec<usize> = (0..x.ncols()).filter(|j| !targets.contains(j)).collect();
    let mut rotated = select_columns(x, &rest);
    hh.apply_qt(&mut rotated);
    let k = targets.len();
    let (mut inside, mut outside) = (0.0f64, 0.0f64);
    for c in rotated.column_iter() {
        inside = inside.max(c.rows(0, k).norm());
        outside = outside.max(c.rows(k, c.len() - k).norm());
    }
    if outside == 0.0 {
        return Ok(if inside == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(inside / outside)
}

pub fn design_diagnostics(x: &DMatrix<f64>, targets: &[usize]) -> Result<DesignDiagnostics> {
    let mc = mutual_coherence(x)?;
    let ratio = bias_ratio(x, targets)?;
    let bound = (mc < COHERENCE_ONE).then(|| mc / (1.0 - mc));
    Ok(DesignDiagnostics { mc, bias_ratio: ratio, bound, bound_ok: bound.map(|b| ratio <= b + 1e-9) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn orthogonal_columns() {
        let x = DMatrix::<f64>::identity(5, 3) * 2.0;
        let d = design_diagnostics(&x, &[0]).unwrap();
        assert_eq!((d.mc, d.bias_ratio), (0.0, 0.0));
        assert_eq!(d.bound_ok, Some(true));
    }

    #[test]
    fn duplicated_column_skips_bound() {
        let mut rng = seeded(1);
        let mut x = DMatrix::from_fn(10, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = x.column(2).clone_owned();
        x.set_column(1, &c);
        let d = design_diagnostics(&x, &[0]).unwrap();
        assert!((d.mc - 1.0).abs() < 1e-12);
        assert_eq!(d.bound_ok, None);
    }

    #[test]
    fn zero_column_rejected() {
        let x = DMatrix::from_fn(4, 2, |i, j| if j == 0 { i as f64 + 1.0 } else { 0.0 });
        assert!(design_diagnostics(&x, &[0]).is_err());
    }

    #[test]
    fn random_gaussian_design_satisfies_bound() {
        let mut rng = seeded(2);
        let x = DMatrix::from_fn(100, 50, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = design_diagnostics(&x, &[0]).unwrap();
        assert_eq!(d.bound_ok, Some(true));
        assert!(d.mc > 0.0 && d.mc < 1.0);
    }

    #[test]
    fn ratio_matches_explicit_projection() {
        let mut rng = seeded(3);
        let x = DMatrix::from_fn(12, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let xt = select_columns(&x, &[1, 3]);
        let h = &xt * (xt.transpose() * &xt).try_inverse().unwrap() * xt.transpose();
        let m = DMatrix::identity(12, 12) - &h;
        let rest = [0, 2, 4];
        let num = rest.iter().map(|&j| (&h * x.column(j)).norm()).fold(0.0, f64::max);
        let den = rest.iter().map(|&j| (&m * x.column(j)).norm()).fold(0.0, f64::max);
        assert!((bias_ratio(&x, &[1, 3]).unwrap() - num / den).abs() < 1e-12);
    }
}
