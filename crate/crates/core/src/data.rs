//! Datasets, simulation scenarios, Gaussian random designs and CSV ingestion.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::linalg::{ensure_finite, ensure_finite_vec, SpdMatrix};

/// Ground truth attached to simulated data.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub beta: DVector<f64>,
    /// Sorted indices of the non-zero entries of `beta`.
    pub support: Vec<usize>,
    pub sigma2: f64,
}

impl Truth {
    pub fn new(beta: DVector<f64>, sigma2: f64) -> Result<Self> {
        ensure_finite_vec(&beta, "true coefficients")?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
        }
        let support = beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(i, _)| i).collect();
        Ok(Self { beta, support, sigma2 })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub truth: Option<Truth>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() < 2 || x.ncols() < 1 {
            return Err(dim(format!("need n >= 2 and p >= 1, got {}x{}", x.nrows(), x.ncols())));
        }
        if y.len() != x.nrows() {
            return Err(dim(format!("X has {} rows but Y has length {}", x.nrows(), y.len())));
        }
        ensure_finite(&x, "design matrix")?;
        ensure_finite_vec(&y, "response")?;
        Ok(Self { x, y, truth: None })
    }

    pub fn with_truth(mut self, truth: Truth) -> Result<Self> {
        if truth.beta.len() != self.p() {
            return Err(dim(format!("truth has {} coefficients, X has {} columns", truth.beta.len(), self.p())));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn truth(&self) -> Result<&Truth> {
        self.truth.as_ref().ok_or(Error::MissingTruth)
    }
}

/// Row covariance family of a Gaussian random design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    Equicorrelated,
    Autoregressive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub rho: f64,
}

impl CovarianceSpec {
    pub fn new(kind: CovarianceKind, rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(invalid(format!("correlation must lie in [0, 1), got {rho}")));
        }
        Ok(Self { kind, rho })
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match self.kind {
            CovarianceKind::Identity => 0.0,
            CovarianceKind::Equicorrelated => self.rho,
            CovarianceKind::Autoregressive => self.rho.powi(i.abs_diff(j) as i32),
        }
    }

    /// Draws an `n × p` matrix with iid `N_p(0, Σ)` rows.
    ///
    /// Uses the exact one-factor (equicorrelated) and first-order recursion
    /// (autoregressive) representations, which cost `O(np)` instead of the
    /// `O(p³ + np²)` of a dense Cholesky factor.
    pub fn sample_design<R: Rng + ?Sized>(&self, n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(n, p);
        let rho = self.rho;
        match self.kind {
            CovarianceKind::Identity => {
                for i in 0..n {
                    for j in 0..p {
                        x[(i, j)] = rng.sample(StandardNormal);
                    }
                }
            }
            CovarianceKind::Equicorrelated => {
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                for i in 0..n {
                    let common: f64 = rng.sample(StandardNormal);
                    for j in 0..p {
                        let e: f64 = rng.sample(StandardNormal);
                        x[(i, j)] = a * common + b * e;
                    }
                }
            }
            CovarianceKind::Autoregressive => {
                let b = (1.0 - rho * rho).sqrt();
                for i in 0..n {
                    let mut prev: f64 = rng.sample(StandardNormal);
                    x[(i, 0)] = prev;
                    for j in 1..p {
                        let e: f64 = rng.sample(StandardNormal);
                        prev = rho * prev + b * e;
                        x[(i, j)] = prev;
                    }
                }
            }
        }
        x
    }
}

pub fn build_covariance(spec: CovarianceSpec, p: usize) -> Result<SpdMatrix> {
    let spec = CovarianceSpec::new(spec.kind, spec.rho)?;
    SpdMatrix::new(DMatrix::from_fn(p, p, |i, j| spec.entry(i, j)))
}

/// How coefficient values are produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSpec {
    Constant(f64),
    /// Explicit values, recycled when fewer than needed.
    Values(Vec<f64>),
    /// `multiplier · ln n`.
    LogN(f64),
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

impl ValueSpec {
    fn validate(&self) -> Result<()> {
        match self {
            ValueSpec::Values(v) if v.is_empty() => Err(invalid("value list is empty")),
            ValueSpec::Normal { sd, .. } if !(*sd >= 0.0) => Err(invalid("normal sd must be non-negative")),
            ValueSpec::Uniform { low, high } if !(low < high) => Err(invalid("uniform needs low < high")),
            _ => Ok(()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, count: usize, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            ValueSpec::Constant(c) => vec![*c; count],
            ValueSpec::Values(v) => (0..count).map(|i| v[i % v.len()]).collect(),
            ValueSpec::LogN(m) => vec![m * (n as f64).ln(); count],
            ValueSpec::Normal { mean, sd } => {
                let d = Normal::new(*mean, *sd).expect("validated sd");
                (0..count).map(|_| d.sample(rng)).collect()
            }
            ValueSpec::Uniform { low, high } => {
                let d = Uniform::new(*low, *high).expect("validated bounds");
                (0..count).map(|_| d.sample(rng)).collect()
            }
        }
    }

    /// True when every draw is certainly non-zero.
    fn surely_nonzero(&self, n: usize) -> bool {
        match self {
            ValueSpec::Constant(c) => *c != 0.0,
            ValueSpec::Values(v) => v.iter().all(|x| *x != 0.0),
            ValueSpec::LogN(m) => *m != 0.0 && n > 1,
            ValueSpec::Normal { .. } | ValueSpec::Uniform { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Identity,
    Equicorrelated,
    Autoregressive,
    /// Fixed design read from a CSV file; the scenario's `n` and `p` must match it.
    Fixed {
        path: PathBuf,
        #[serde(default)]
        header: bool,
    },
}

/// Where the non-target non-zero coefficients go.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportPlacement {
    /// Uniformly without replacement among the non-target indices.
    #[default]
    Random,
    /// Immediately after the targets (`k, k+1, …`).
    Leading,
}

/// What `s0` counts when some target coefficients are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityConvention {
    /// `s0` is the total number of non-zero coefficients.
    #[default]
    TotalNonzeros,
    /// `s0 − k` non-target coefficients are non-zero whatever the target values.
    TargetsIncluded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: usize,
    pub p: usize,
    pub s0: usize,
    pub k: usize,
    pub target_values: ValueSpec,
    pub other_values: ValueSpec,
    pub rho: f64,
    pub sigma2: f64,
    pub design_kind: DesignKind,
    #[serde(default)]
    pub support: SupportPlacement,
    #[serde(default)]
    pub sparsity: SparsityConvention,
}

impl Scenario {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let s: Scenario = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(invalid(format!("need n >= 2 and p >= 1, got n = {}, p = {}", self.n, self.p)));
        }
        if self.k < 1 || self.k >= self.p {
            return Err(invalid(format!("target dimension k = {} must satisfy 1 <= k < p", self.k)));
        }
        if self.k >= self.n {
            return Err(invalid(format!("target dimension k = {} must be below n = {}", self.k, self.n)));
        }
        if self.s0 > self.p {
            return Err(invalid(format!("s0 = {} exceeds p = {}", self.s0, self.p)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(invalid(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if let ValueSpec::Values(v) = &self.target_values {
            if v.len() != self.k {
                return Err(invalid(format!("target_values lists {} values for k = {}", v.len(), self.k)));
            }
        }
        self.target_values.validate()?;
        self.other_values.validate()?;
        if !matches!(self.design_kind, DesignKind::Fixed { .. }) {
            CovarianceSpec::new(CovarianceKind::Identity, self.rho)?;
        }
        let min_targets = if self.target_values.surely_nonzero(self.n) { self.k } else { 0 };
        let others = match self.sparsity {
            SparsityConvention::TotalNonzeros => self.s0.saturating_sub(min_targets),
            SparsityConvention::TargetsIncluded => self.s0.saturating_sub(self.k),
        };
        if others > self.p - self.k {
            return Err(invalid(format!(
                "s0 = {} needs {others} non-target non-zeros but only {} non-target coordinates exist",
                self.s0,
                self.p - self.k
            )));
        }
        Ok(())
    }

    pub fn id_or(&self, fallback: &str) -> String {
        self.id.clone().unwrap_or_else(|| fallback.to_string())
    }

    /// Row covariance, or `None` for a fixed design.
    pub fn covariance(&self) -> Option<CovarianceSpec> {
        let kind = match self.design_kind {
            DesignKind::Identity => CovarianceKind::Identity,
            DesignKind::Equicorrelated => CovarianceKind::Equicorrelated,
            DesignKind::Autoregressive => CovarianceKind::Autoregressive,
            DesignKind::Fixed { .. } => return None,
        };
        let rho = if kind == CovarianceKind::Identity { 0.0 } else { self.rho };
        Some(CovarianceSpec { kind, rho })
    }

    /// The design source for repeated dataset generation; a fixed design is read once.
    pub fn design_source(&self) -> Result<DesignSource> {
        match &self.design_kind {
            DesignKind::Fixed { path, header } => {
                let x = read_matrix_csv(path, *header)?;
                if x.shape() != (self.n, self.p) {
                    return Err(dim(format!(
                        "fixed design {} is {}x{} but scenario declares {}x{}",
                        path.display(),
                        x.nrows(),
                        x.ncols(),
                        self.n,
                        self.p
                    )));
                }
                Ok(DesignSource::Fixed(x))
            }
            _ => Ok(DesignSource::Random(self.covariance().expect("random design"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum DesignSource {
    Random(CovarianceSpec),
    Fixed(DMatrix<f64>),
}

/// Draws `(X, β⁰, Y)` for a scenario. Targets are the first `k` coordinates.
pub fn generate_dataset<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> Result<Dataset> {
    s.validate()?;
    let source = s.design_source()?;
    generate_with_design(s, &source, rng)
}

pub fn generate_with_design<R: Rng + ?Sized>(s: &Scenario, source: &DesignSource, rng: &mut R) -> Result<Dataset> {
    let (n, p, k) = (s.n, s.p, s.k);
    let x = match source {
        DesignSource::Random(spec) => spec.sample_design(n, p, rng),
        DesignSource::Fixed(x) => x.clone(),
    };
    let mut beta = DVector::zeros(p);
    let targets = s.target_values.draw(k, n, rng);
    for (j, v) in targets.iter().enumerate() {
        beta[j] = *v;
    }
    let nonzero_targets = targets.iter().filter(|v| **v != 0.0).count();
    let others = match s.sparsity {
        SparsityConvention::TotalNonzeros => s.s0.saturating_sub(nonzero_targets),
        SparsityConvention::TargetsIncluded => s.s0.saturating_sub(k),
    };
    if others > p - k {
        return Err(invalid(format!("cannot place {others} non-zeros among {} non-target coordinates", p - k)));
    }
    let mut positions: Vec<usize> = match s.support {
        SupportPlacement::Random => index::sample(rng, p - k, others).into_iter().map(|i| i + k).collect(),
        SupportPlacement::Leading => (k..k + others).collect(),
    };
    positions.sort_unstable();
    let values = s.other_values.draw(others, n, rng);
    for (pos, v) in positions.iter().zip(values) {
        beta[*pos] = v;
    }
    let sigma = s.sigma2.sqrt();
    let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &x * &beta + noise * sigma;
    Dataset::new(x, y)?.with_truth(Truth::new(beta, s.sigma2)?)
}

fn parse_record(record: &csv::StringRecord, path: &Path, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let t = cell.trim();
            let v: f64 = t.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("column {}: '{t}' is not a number", c + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { path: path.to_path_buf(), line, msg: format!("column {}: non-finite value", c + 1) });
            }
            Ok(v)
        })
        .collect()
}

fn read_rows(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(header).flexible(true).from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    let offset = if header { 2 } else { 1 };
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        rows.push(parse_record(&rec, path, i + offset)?);
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { path: path.to_path_buf(), line, msg: format!("{other:?}") },
    }
}

/// Reads a numeric CSV into a matrix; every row must have the same width.
pub fn read_matrix_csv(path: &Path, header: bool) -> Result<DMatrix<f64>> {
    let rows = read_rows(path, header)?;
    if rows.is_empty() {
        return Err(Error::Parse { path: path.to_path_buf(), line: 0, msg: "no data rows".into() });
    }
    let width = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + if header { 2 } else { 1 },
                msg: format!("expected {width} columns, found {}", r.len()),
            });
        }
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// Reads a single-column CSV into a vector.
pub fn read_vector_csv(path: &Path, header: bool) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path, header)?;
    if m.ncols() != 1 {
        return Err(Error::Parse { path: path.to_path_buf(), line: 1, msg: format!("expected one column, found {}", m.ncols()) });
    }
    Ok(m.column(0).clone_owned())
}

pub fn load_csv(x_path: &Path, y_path: &Path, header: bool) -> Result<Dataset> {
    let x = read_matrix_csv(x_path, header)?;
    let y = read_vector_csv(y_path, header)?;
    Dataset::new(x, y)
}
