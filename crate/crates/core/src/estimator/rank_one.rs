//! Rank-one fit: kernel ridge regression of `g = sqrt(f)` on Nystrom centers,
//! `(K_nm^T K_nm + lambda n K_mm) a = K_nm^T g_n`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};
use crate::estimator::{design_points, EvaluationOracle, FitConfig, OracleKind};
use crate::linalg::{kernel_matrix, Points, PrecisionVector};
use crate::model::RankOneModel;

const RESIDUAL_TOL: f64 = 1e-8;
const JITTER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneReport {
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub lambda: f64,
    /// `||M a - b|| / ||b||` for the system that was solved, shifted by `jitter` (0 when `b = 0`).
    pub relative_residual: f64,
    /// Diagonal shift added to `M`, 0 if none.
    pub jitter: f64,
}

#[derive(Debug, Clone)]
pub struct RankOneFit {
    pub model: RankOneModel,
    pub report: RankOneReport,
}

/// Fits `g` from its values at `points`, with the given centers.
pub fn fit_rank_one_from_values(
    points: &Points,
    values: &[f64],
    centers: Points,
    tau: f64,
    lambda: f64,
) -> Result<RankOneFit> {
    check_dim(points.rows(), values.len())?;
    check_dim(points.dim(), centers.dim())?;
    let (n, m) = (points.rows(), centers.rows());
    if m == 0 || n < m {
        return Err(PsdError::invalid(format!("need n >= m >= 1, got n = {n}, m = {m}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(PsdError::invalid("lambda must be finite and > 0"));
    }
    let eta = PrecisionVector::isotropic(tau, points.dim())?;
    let knm = kernel_matrix(&eta, points, &centers)?;
    let kmm = kernel_matrix(&eta, &centers, &centers)?;
    let g = DVector::from_column_slice(values);
    let system = knm.tr_mul(&knm) + &kmm * (lambda * n as f64);
    let rhs = knm.tr_mul(&g);

    let scale = rhs.norm();
    let (a, jitter, resid) = solve_spd(&system, &rhs, RESIDUAL_TOL * scale)?;
    let relative_residual = if scale > 0.0 { resid / scale } else { 0.0 };
    let model = RankOneModel::new(a, centers, eta)?;
    Ok(RankOneFit { model, report: RankOneReport { n, m, tau, lambda, relative_residual, jitter } })
}

/// Cholesky solve with iterative refinement. When the factorization fails or the
/// residual exceeds `tol`, the system is shifted by `JITTER * trace / m` and solved
/// again; the residual is then that of the shifted system.
fn solve_spd(system: &DMatrix<f64>, rhs: &DVector<f64>, tol: f64) -> Result<(DVector<f64>, f64, f64)> {
    let m = system.nrows();
    let attempt = |matrix: &DMatrix<f64>| -> Option<(DVector<f64>, f64)> {
        let chol = Cholesky::new(matrix.clone())?;
        let mut a = chol.solve(rhs);
        for _ in 0..3 {
            let r = rhs - matrix * &a;
            a += chol.solve(&r);
        }
        if a.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let resid = (matrix * &a - rhs).norm();
        Some((a, resid))
    };
    let first = attempt(system);
    if let Some((a, resid)) = &first {
        if *resid <= tol {
            return Ok((a.clone(), 0.0, *resid));
        }
    }
    let shift = JITTER * system.trace() / m as f64;
    let shifted = system + DMatrix::identity(m, m) * shift;
    match attempt(&shifted) {
        Some((a, resid)) if resid <= tol => Ok((a, shift, resid)),
        Some((_, resid)) => Err(PsdError::IllConditioned(format!(
            "normal-equation residual {resid:e} exceeds {tol:e} even after a shift of {shift:e}"
        ))),
        None => Err(PsdError::IllConditioned(format!(
            "system is not positive definite even after a shift of {shift:e}"
        ))),
    }
}

/// Draws the design with [`design_points`], evaluates `g` and solves for the coefficients.
pub fn fit_rank_one(oracle: &EvaluationOracle, cfg: &FitConfig) -> Result<RankOneFit> {
    cfg.validate()?;
    if oracle.kind() != OracleKind::SquareRoot {
        return Err(PsdError::invalid("the rank-one fit needs a square-root oracle"));
    }
    let (points, centers) = design_points(oracle.domain(), cfg)?;
    let values = oracle.evaluate_all(&points)?;
    fit_rank_one_from_values(&points, &values, centers, cfg.tau, cfg.lambda)
}
