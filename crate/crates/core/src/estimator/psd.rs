//! General PSD fit: minimize a convex quadratic in `A` over the PSD cone by
//! monotone accelerated projected gradient with backtracking.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};
use crate::estimator::{design_points, EvaluationOracle, FitConfig};
use crate::integration::{squared_gram, HyperRectangle};
use crate::linalg::{kernel_matrix, project_symmetric, Points, PrecisionVector};
use crate::model::GaussianPsdModel;

/// Relative eigenvalue floor of the preconditioner.
const WHITENING_FLOOR: f64 = 1e-10;

/// Which quadratic objective [`fit_psd`] minimizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdLoss {
    /// `int_X f(x; A)^2 dx - 2 sum_i f_p(x_i) f(x_i; A) + lambda ||K^1/2 A K^1/2||_F^2`,
    /// with the squared integral in closed form over the domain.
    #[default]
    Integral,
    /// `(1/n) sum_i (f(x_i; A) - f_p(x_i))^2 + lambda ||K^1/2 A K^1/2||_F^2`.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdFitOptions {
    pub max_iters: usize,
    pub loss: PsdLoss,
    /// Stop once the gradient mapping norm falls below `tol * (1 + ||A||_F)`.
    pub tol: f64,
}

impl Default for PsdFitOptions {
    fn default() -> Self {
        PsdFitOptions { max_iters: 500, loss: PsdLoss::Integral, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdFitReport {
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub lambda: f64,
    pub loss: PsdLoss,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_mapping_norm: f64,
    /// Objective after each iteration, starting with `A = 0`; nonincreasing.
    pub objective_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PsdFit {
    pub model: GaussianPsdModel,
    pub report: PsdFitReport,
}

enum Curvature {
    /// Dense `m^2 x m^2` Gram matrix of the squared integral.
    Gram(DMatrix<f64>),
    /// `(1/n) K_nm^T diag(f(x_i; A)) K_nm`, with the target values at the rows.
    Samples(DMatrix<f64>, Vec<f64>),
}

/// `F(A) = <A, H(A)> - 2 <A, B> + lambda tr(K A K A)`, plus `(1/n) sum_i f_p(x_i)^2`
/// for the empirical loss.
struct Quadratic {
    curvature: Curvature,
    b: DMatrix<f64>,
    kmm: DMatrix<f64>,
    lambda: f64,
    /// Preconditioner: the iterates are `B = R A R` with `R^-1` stored here.
    rinv: DMatrix<f64>,
}

impl Quadratic {
    fn h(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let m = a.nrows();
        match &self.curvature {
            Curvature::Gram(g) => {
                let v = g * nalgebra::DVector::from_column_slice(a.as_slice());
                DMatrix::from_column_slice(m, m, v.as_slice())
            }
            Curvature::Samples(knm, _) => {
                let n = knm.nrows();
                let ka = knm * a;
                let mut scaled = knm.clone();
                for i in 0..n {
                    let fi: f64 = ka.row(i).dot(&knm.row(i));
                    scaled.row_mut(i).scale_mut(fi / n as f64);
                }
                knm.tr_mul(&scaled)
            }
        }
    }

    fn reg(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.kmm * a * &self.kmm * self.lambda
    }

    /// The objective and the size of the terms it was summed from, so that callers
    /// can tell rounding from descent.
    fn lift(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let a = &self.rinv * b * &self.rinv;
        (&a + a.transpose()) * 0.5
    }

    fn value(&self, b: &DMatrix<f64>) -> (f64, f64) {
        self.value_at(&self.lift(b))
    }

    fn gradient(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        &self.rinv * self.gradient_at(&self.lift(b)) * &self.rinv
    }

    fn value_at(&self, a: &DMatrix<f64>) -> (f64, f64) {
        let reg = a.dot(&self.reg(a));
        match &self.curvature {
            // residual form: no cancellation near a perfect fit
            Curvature::Samples(knm, values) => {
                let ka = knm * a;
                let n = values.len() as f64;
                let mse: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (ka.row(i).dot(&knm.row(i)) - v).powi(2))
                    .sum::<f64>()
                    / n;
                (mse + reg, mse + reg.abs())
            }
            Curvature::Gram(_) => {
                let quad = a.dot(&self.h(a));
                let lin = 2.0 * a.dot(&self.b);
                (quad - lin + reg, quad.abs() + lin.abs() + reg.abs())
            }
        }
    }

    fn gradient_at(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        (self.h(a) - &self.b + self.reg(a)) * 2.0
    }

    /// Power iteration for the largest eigenvalue of the (PSD) Hessian in `B`.
    fn curvature_estimate(&self, m: usize) -> f64 {
        let mut v = DMatrix::from_fn(m, m, |i, j| 1.0 + ((i * 7 + j * 13) % 5) as f64 * 0.1);
        v = (&v + v.transpose()) * 0.5;
        let mut est = 0.0;
        for _ in 0..30 {
            let norm = v.norm();
            if norm == 0.0 {
                return 1.0;
            }
            v /= norm;
            let w = self.gradient(&v) + &self.rinv * &self.b * &self.rinv * 2.0;
            est = v.dot(&w);
            v = w;
        }
        est.max(f64::MIN_POSITIVE)
    }
}

/// `(C + delta I)^(-1/2)` for the feature second moment `C = K_nm^T K_nm / n`.
/// Congruence maps the PSD cone onto itself, so iterating on `B = R A R` changes the
/// conditioning of the problem but not its solution.
fn whitening(knm: &DMatrix<f64>) -> DMatrix<f64> {
    let m = knm.ncols();
    let c = knm.tr_mul(knm) / knm.nrows() as f64;
    let delta = (WHITENING_FLOOR * c.trace() / m as f64).max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::new(c);
    let d = eig.eigenvalues.map(|l| 1.0 / (l.max(0.0) + delta).sqrt());
    let r = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
    (&r + r.transpose()) * 0.5
}

fn project(a: DMatrix<f64>) -> DMatrix<f64> {
    project_symmetric((&a + a.transpose()) * 0.5)
}

/// Fits the coefficient matrix for fixed evaluation values and centers.
/// `domain` is where the squared integral of [`PsdLoss::Integral`] is taken.
#[allow(clippy::too_many_arguments)]
pub fn fit_psd_from_values(
    points: &Points,
    values: &[f64],
    centers: Points,
    domain: &HyperRectangle,
    tau: f64,
    lambda: f64,
    opts: &PsdFitOptions,
) -> Result<PsdFit> {
    check_dim(points.rows(), values.len())?;
    check_dim(points.dim(), centers.dim())?;
    check_dim(points.dim(), domain.dim())?;
    let (n, m) = (points.rows(), centers.rows());
    if m == 0 || n == 0 {
        return Err(PsdError::invalid("need at least one point and one center"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(PsdError::ContractViolation(format!("density value {v} is not a finite number >= 0")));
    }
    let eta = PrecisionVector::isotropic(tau, points.dim())?;
    let knm = kernel_matrix(&eta, points, &centers)?;
    let kmm = kernel_matrix(&eta, &centers, &centers)?;
    let rinv = whitening(&knm);
    let mut weighted = knm.clone();
    for i in 0..n {
        weighted.row_mut(i).scale_mut(values[i]);
    }
    let data = knm.tr_mul(&weighted);
    let q = match opts.loss {
        PsdLoss::Integral => Quadratic {
            curvature: Curvature::Gram(squared_gram(&centers, &eta, domain)?),
            b: data,
            kmm,
            lambda,
            rinv,
        },
        PsdLoss::Empirical => Quadratic {
            curvature: Curvature::Samples(knm, values.to_vec()),
            b: data / n as f64,
            kmm,
            lambda,
            rinv,
        },
    };

    let mut step = 1.0 / q.curvature_estimate(m);
    let mut x = DMatrix::zeros(m, m);
    let (mut fx, _) = q.value(&x);
    let mut y = x.clone();
    let mut s = 1.0f64;
    let mut trace = vec![fx];
    let mut converged = false;
    let mut gm_norm = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        iterations += 1;
        let gy = q.gradient(&y);
        let (fy, fy_scale) = q.value(&y);
        let mut z;
        let mut fz;
        let mut tries = 0;
        loop {
            z = project(&y - &gy * step);
            let (value, scale) = q.value(&z);
            fz = value;
            let diff = &z - &y;
            let slack = 1e-14 * fy_scale.max(scale);
            if fz <= fy + gy.dot(&diff) + diff.norm_squared() / (2.0 * step) + slack || tries > 60 {
                break;
            }
            step *= 0.5;
            tries += 1;
        }
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
            let s_next = 0.5 * (1.0 + (1.0 + 4.0 * s * s).sqrt());
            y = &x + (&x - &x_prev) * ((s - 1.0) / s_next);
            s = s_next;
        } else {
            // the momentum overshot: restart from the best point
            y = x.clone();
            s = 1.0;
        }
        trace.push(fx);

        let gx = q.gradient(&x);
        let mapped = project(&x - &gx * step);
        gm_norm = (&x - mapped).norm() / step;
        if gm_norm < opts.tol * (1.0 + x.norm()) {
            converged = true;
            break;
        }
    }
    let x = q.lift(&x);
    let warning = (!converged).then(|| {
        format!("iteration budget of {} exhausted; gradient mapping norm {gm_norm:e}", opts.max_iters)
    });
    let model = match GaussianPsdModel::new(x.clone(), centers.clone(), eta.clone()) {
        Ok(model) => model,
        Err(_) => GaussianPsdModel::new_repaired(x, centers, eta)?,
    };
    Ok(PsdFit {
        model,
        report: PsdFitReport {
            n,
            m,
            tau,
            lambda,
            loss: opts.loss,
            iterations,
            converged,
            gradient_mapping_norm: gm_norm,
            objective_trace: trace,
            warning,
        },
    })
}

/// Draws the design with [`design_points`], evaluates the density and fits `A`.
/// Square-root oracles are squared.
pub fn fit_psd(oracle: &EvaluationOracle, cfg: &FitConfig, opts: &PsdFitOptions) -> Result<PsdFit> {
    cfg.validate()?;
    let (points, centers) = design_points(oracle.domain(), cfg)?;
    let values: Vec<f64> = points.iter_rows().map(|x| oracle.density_value(x)).collect::<Result<_>>()?;
    fit_psd_from_values(&points, &values, centers, oracle.domain(), cfg.tau, cfg.lambda, opts)
}
