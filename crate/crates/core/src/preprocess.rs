//! The target/nuisance decoupling transformation.
//!
//! For a target index set `T` of size `k`, with `H` the projection onto the
//! span of `X_T` and `P` an orthonormal basis of its complement:
//!
//! ```text
//! ‖Y − Xβ‖² = ‖HY − X_T β*‖² + ‖Y̌ − W̌ β₋ₖ‖²,   β* = β_T + Γ β₋ₖ,
//! W̌ = PᵀX₋ₖ,  Y̌ = PᵀY,  Σₖ = (X_TᵀX_T)⁻¹,  Γ = Σₖ X_TᵀX₋ₖ.
//! ```

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{dim, invalid, Error, Result};
use crate::linalg::{Householder, SpdMatrix};

#[derive(Clone, Debug)]
pub struct PreprocessedData {
    /// Target column indices in the caller's order.
    pub targets: Vec<usize>,
    /// Remaining column indices, ascending; position `j` of every nuisance
    /// vector refers to column `rest[j]`.
    pub rest: Vec<usize>,
    pub p_basis: DMatrix<f64>,
    pub w_check: DMatrix<f64>,
    pub y_check: DVector<f64>,
    pub sigma_k: SpdMatrix,
    pub gram_k: SpdMatrix,
    pub gamma: DMatrix<f64>,
    /// `X_TᵀY`.
    pub xty: DVector<f64>,
    /// `Σₖ X_TᵀY`, the least-squares fit of `Y` on the target columns.
    pub projected_target: DVector<f64>,
}

impl PreprocessedData {
    pub fn k(&self) -> usize {
        self.targets.len()
    }

    pub fn n_nuisance(&self) -> usize {
        self.rest.len()
    }

    /// `Γ β₋ₖ` for a dense nuisance vector, touching only its non-zeros.
    pub fn debias(&self, beta_rest: &[f64]) -> Result<DVector<f64>> {
        if beta_rest.len() != self.rest.len() {
            return Err(dim(format!("nuisance vector has length {}, expected {}", beta_rest.len(), self.rest.len())));
        }
        Ok(debias_sparse(&self.gamma, beta_rest.iter().copied().enumerate().filter(|(_, b)| *b != 0.0)))
    }
}

/// `Γ β₋ₖ` from `(position, value)` pairs; cost `O(k · nnz)`.
pub fn debias_sparse(gamma: &DMatrix<f64>, entries: impl IntoIterator<Item = (usize, f64)>) -> DVector<f64> {
    let mut out = DVector::zeros(gamma.nrows());
    for (j, b) in entries {
        out.axpy(b, &gamma.column(j), 1.0);
    }
    out
}

/// `X/σ̂`, `Y/σ̂`; truth is carried over unchanged.
pub fn rescale_by_noise(d: &Dataset, sigma_hat: f64) -> Result<Dataset> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(invalid(format!("noise scale must be positive and finite, got {sigma_hat}")));
    }
    Ok(Dataset { x: &d.x / sigma_hat, y: &d.y / sigma_hat, truth: d.truth.clone() })
}

pub fn validate_targets(targets: &[usize], p: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(invalid("target set is empty"));
    }
    if targets.len() >= p {
        return Err(invalid(format!("{} targets leave no nuisance coordinates (p = {p})", targets.len())));
    }
    let mut seen = vec![false; p];
    for &t in targets {
        if t >= p {
            return Err(invalid(format!("target index {} out of range for p = {p}", t + 1)));
        }
        if std::mem::replace(&mut seen[t], true) {
            return Err(invalid(format!("target index {} repeated", t + 1)));
        }
    }
    Ok(())
}

pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

pub fn preprocess(d: &Dataset, targets: &[usize]) -> Result<PreprocessedData> {
    let (n, p) = (d.n(), d.p());
    validate_targets(targets, p)?;
    let k = targets.len();
    if k >= n {
        return Err(invalid(format!("target dimension {k} must be below n = {n}")));
    }
    let mut is_target = vec![false; p];
    for &t in targets {
        is_target[t] = true;
    }
    let rest: Vec<usize> = (0..p).filter(|&j| !is_target[j]).collect();
    let x_t = select_columns(&d.x, targets);
    let x_rest = select_columns(&d.x, &rest);

    let hh = Householder::factor(&x_t).map_err(|e| match e {
        Error::RankDeficient(msg) => Error::RankDeficient(format!("target columns: {msg}")),
        other => other,
    })?;
    let p_basis = hh.complement();
    let w_check = hh.project_complement(&x_rest);
    let y_check = hh.project_complement(&DMatrix::from_column_slice(n, 1, d.y.as_slice())).column(0).clone_owned();

    let gram_k = SpdMatrix::new(x_t.tr_mul(&x_t))?;
    let sigma_k = gram_k.inverse()?;
    let cross = x_t.tr_mul(&x_rest);
    let gamma = gram_k.solve_matrix(&cross);
    let xty = x_t.tr_mul(&d.y);
    let projected_target = gram_k.solve(&xty);

    Ok(PreprocessedData { targets: targets.to_vec(), rest, p_basis, w_check, y_check, sigma_k, gram_k, gamma, xty, projected_target })
}
