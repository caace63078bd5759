//! Gaussian kernels, kernel matrices and projection onto the PSD cone.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};

/// Kernel values below this are flushed to zero.
pub const KERNEL_FLUSH: f64 = 1e-300;

/// Per-coordinate precision `eta` of the Gaussian kernel
/// `k(x, y) = exp(-(x - y)^T diag(eta) (x - y))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PrecisionVector(Vec<f64>);

impl PrecisionVector {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(PsdError::invalid("precision vector must have dimension >= 1"));
        }
        if let Some(bad) = eta.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(PsdError::invalid(format!("precision entries must be finite and > 0, got {bad}")));
        }
        Ok(PrecisionVector(eta))
    }

    /// `tau * 1_d`.
    pub fn isotropic(tau: f64, dim: usize) -> Result<Self> {
        Self::new(vec![tau; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Returns `tau` when every entry equals `tau`.
    pub fn isotropic_value(&self) -> Option<f64> {
        let first = self.0[0];
        self.0.iter().all(|&v| v == first).then_some(first)
    }

    /// Entrywise `factor * eta`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for PrecisionVector {
    type Error = PsdError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PrecisionVector> for Vec<f64> {
    fn from(p: PrecisionVector) -> Self {
        p.0
    }
}

/// Row-major `n x d` matrix of points. Used for kernel centers, design points and samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    data: Vec<f64>,
    rows: usize,
    dim: usize,
}

/// The centers `x_1..x_m` of a model, one per row.
pub type CenterMatrix = Points;

impl Points {
    /// Builds from row-major data. Zero rows are allowed; entries must be finite.
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(PsdError::invalid("point dimension must be >= 1"));
        }
        if data.len() != rows * dim {
            return Err(PsdError::invalid(format!(
                "expected {} entries for a {rows}x{dim} matrix, got {}",
                rows * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(PsdError::invalid("point coordinates must be finite"));
        }
        Ok(Points { data, rows, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).ok_or_else(|| PsdError::invalid("no rows given"))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            check_dim(dim, r.len())?;
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, data)
    }

    pub(crate) fn from_raw(rows: usize, dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * dim);
        Points { data, rows, dim }
    }

    pub fn empty(dim: usize) -> Self {
        Points { data: Vec::new(), rows: 0, dim }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(|r| r.to_vec()).collect()
    }

    /// Rows `range` as a new matrix.
    pub fn select_rows(&self, range: std::ops::Range<usize>) -> Points {
        Points::from_raw(range.len(), self.dim, self.data[range.start * self.dim..range.end * self.dim].to_vec())
    }

    /// Per-coordinate `(min, max)` over the rows.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.rows == 0 {
            return None;
        }
        let mut lo = self.row(0).to_vec();
        let mut hi = lo.clone();
        for r in self.iter_rows() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(r[k]);
                hi[k] = hi[k].max(r[k]);
            }
        }
        Some((lo, hi))
    }
}

#[inline]
pub(crate) fn kernel_unchecked(eta: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut q = 0.0;
    for k in 0..eta.len() {
        let t = x[k] - y[k];
        q += eta[k] * t * t;
    }
    let v = (-q).exp();
    if v < KERNEL_FLUSH {
        0.0
    } else {
        v
    }
}

/// Gaussian kernel `exp(-(x - y)^T diag(eta) (x - y))`.
pub fn kernel(eta: &PrecisionVector, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(eta.dim(), x.len())?;
    check_dim(eta.dim(), y.len())?;
    Ok(kernel_unchecked(eta.as_slice(), x, y))
}

/// `[K]_ij = k(x_i, y_j)`.
pub fn kernel_matrix(eta: &PrecisionVector, x: &Points, y: &Points) -> Result<DMatrix<f64>> {
    check_dim(eta.dim(), x.dim())?;
    check_dim(eta.dim(), y.dim())?;
    let e = eta.as_slice();
    Ok(DMatrix::from_fn(x.rows(), y.rows(), |i, j| kernel_unchecked(e, x.row(i), y.row(j))))
}

/// `(k(x, c_1), ..., k(x, c_m))`.
pub fn kernel_vector(eta: &PrecisionVector, centers: &Points, x: &[f64]) -> Result<DVector<f64>> {
    check_dim(eta.dim(), centers.dim())?;
    check_dim(eta.dim(), x.len())?;
    let e = eta.as_slice();
    Ok(DVector::from_iterator(centers.rows(), centers.iter_rows().map(|c| kernel_unchecked(e, x, c))))
}

const SYMMETRY_TOL: f64 = 1e-10;

fn symmetrized(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(PsdError::invalid(format!("matrix must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(PsdError::invalid("matrix has non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(PsdError::invalid(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Frobenius-nearest PSD matrix: eigendecompose, clamp negative eigenvalues to zero, reconstruct.
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrized(m)?;
    Ok(project_symmetric(sym))
}

pub(crate) fn project_symmetric(sym: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(sym);
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let sym = symmetrized(m)?;
    if sym.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(SymmetricEigen::new(sym).eigenvalues.min())
}

/// Square root of a symmetric PSD matrix (negative eigenvalues clamped).
pub(crate) fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.transpose()
}

/// Spectral norm of a symmetric matrix.
pub(crate) fn symmetric_operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    eig.eigenvalues.amax()
}
