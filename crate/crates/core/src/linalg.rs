//! Dense linear-algebra primitives: SPD matrices, Householder orthonormal
//! complements and multivariate normal sampling.
//!
//! Matrices are `nalgebra` column-major `DMatrix<f64>`; column access is
//! contiguous, which the coordinate-wise solvers rely on.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{dim, Error, Result};

pub fn ensure_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite_vec(v: &DVector<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SpdMatrix {
    /// Validates symmetry (1e-10 relative to the largest entry), symmetrizes
    /// and factors.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(dim(format!("SPD matrix must be square, got {}x{}", mat.nrows(), mat.ncols())));
        }
        ensure_finite(&mat, "SPD matrix")?;
        let scale = mat.amax().max(f64::MIN_POSITIVE);
        let n = mat.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        let chol = Cholesky::new(sym.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { mat: sym, chol })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// Lower-triangular factor `L` with `A = L Lᵀ`.
    pub fn cholesky_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `vᵀ A⁻¹ v`.
    pub fn inv_quad_form(&self, v: &DVector<f64>) -> f64 {
        let mut w = v.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut w);
        w.norm_squared()
    }

    pub fn determinant(&self) -> f64 {
        self.chol.determinant()
    }

    pub fn ln_determinant(&self) -> f64 {
        self.chol.ln_determinant()
    }

    /// Inverse via the Cholesky factor.
    pub fn inverse(&self) -> Result<SpdMatrix> {
        let inv = self.chol.inverse();
        SpdMatrix::new((&inv + inv.transpose()) * 0.5)
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }
}

/// Free-function form of [`SpdMatrix::inverse`].
pub fn spd_inverse(a: &SpdMatrix) -> Result<SpdMatrix> {
    a.inverse()
}

/// Householder QR factorization of a tall `n × k` matrix, keeping the
/// reflectors so that `Q` and `Qᵀ` can be applied without forming `Q`.
#[derive(Clone, Debug)]
pub struct Householder {
    /// Column `j` holds reflector `v_j`, zero above row `j`.
    reflectors: DMatrix<f64>,
    betas: Vec<f64>,
    r_diag: Vec<f64>,
}

impl Householder {
    /// Factors `b`. Fails when a column is (numerically) in the span of the
    /// preceding ones or when `k >= n`.
    pub fn factor(b: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = b.shape();
        if k == 0 {
            return Err(dim("need at least one column"));
        }
        if k >= n {
            return Err(dim(format!("orthonormal complement needs k < n (k = {k}, n = {n})")));
        }
        ensure_finite(b, "basis matrix")?;
        let mut a = b.clone();
        let mut reflectors = DMatrix::zeros(n, k);
        let mut betas = Vec::with_capacity(k);
        let mut r_diag = Vec::with_capacity(k);
        for j in 0..k {
            let col_norm = b.column(j).norm();
            let alpha = a.column(j).rows(j, n - j).norm();
            if col_norm == 0.0 || alpha <= 1e-10 * col_norm {
                return Err(Error::RankDeficient(format!("column {j} lies in the span of the preceding columns")));
            }
            let x0 = a[(j, j)];
            let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
            let mut v = a.column(j).rows(j, n - j).clone_owned();
            v[0] += sign * alpha;
            let beta = 2.0 / v.norm_squared();
            for c in j..k {
                let s = beta * v.dot(&a.column(c).rows(j, n - j));
                let mut col = a.column_mut(c);
                col.rows_mut(j, n - j).axpy(-s, &v, 1.0);
            }
            reflectors.column_mut(j).rows_mut(j, n - j).copy_from(&v);
            betas.push(beta);
            r_diag.push(-sign * alpha);
        }
        Ok(Self { reflectors, betas, r_diag })
    }

    pub fn nrows(&self) -> usize {
        self.reflectors.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.reflectors.ncols()
    }

    pub fn r_diagonal(&self) -> &[f64] {
        &self.r_diag
    }

    fn reflect(&self, j: usize, m: &mut DMatrix<f64>) {
        let n = self.nrows();
        let v = self.reflectors.column(j);
        let v = v.rows(j, n - j);
        let beta = self.betas[j];
        for c in 0..m.ncols() {
            let mut col = m.column_mut(c);
            let mut seg = col.rows_mut(j, n - j);
            let s = beta * v.dot(&seg);
            if s != 0.0 {
                seg.axpy(-s, &v, 1.0);
            }
        }
    }

    /// `m ← Qᵀ m`.
    pub fn apply_qt(&self, m: &mut DMatrix<f64>) {
        assert_eq!(m.nrows(), self.nrows());
        for j in 0..self.ncols() {
            self.reflect(j, m);
        }
    }

    /// `m ← Q m`.
    pub fn apply_q(&self, m: &mut DMatrix<f64>) {
        assert_eq!(m.nrows(), self.nrows());
        for j in (0..self.ncols()).rev() {
            self.reflect(j, m);
        }
    }

    /// Trailing `n − k` columns of the full orthogonal factor.
    pub fn complement(&self) -> DMatrix<f64> {
        let (n, k) = (self.nrows(), self.ncols());
        let mut e = DMatrix::zeros(n, n - k);
        for i in 0..(n - k) {
            e[(k + i, i)] = 1.0;
        }
        self.apply_q(&mut e);
        e
    }

    /// `Pᵀ m` where `P` is [`Householder::complement`], computed in `O(nk·cols)`.
    pub fn project_complement(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = m.clone();
        self.apply_qt(&mut w);
        let k = self.ncols();
        w.rows(k, self.nrows() - k).clone_owned()
    }
}

/// Orthonormal basis `P` (n × (n−k)) of the orthogonal complement of the
/// column span of `b`: `PᵀP = I` and `Pᵀb = 0`.
pub fn orthonormal_complement(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(Householder::factor(b)?.complement())
}

/// One draw from `N(mean, cov)`.
pub fn mvn_sample<R: Rng + ?Sized>(mean: &DVector<f64>, cov: &SpdMatrix, rng: &mut R) -> Result<DVector<f64>> {
    if mean.len() != cov.dim() {
        return Err(dim(format!("mean has length {} but covariance is {}x{}", mean.len(), cov.dim(), cov.dim())));
    }
    let l = cov.cholesky_l();
    Ok(mvn_sample_with_factor(mean, &l, rng))
}

/// Draw using a precomputed lower Cholesky factor.
pub fn mvn_sample_with_factor<R: Rng + ?Sized>(mean: &DVector<f64>, l: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + l * z
}
