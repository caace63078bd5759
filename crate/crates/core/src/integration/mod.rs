//! Closed-form integration of Gaussian PSD models over hyper-rectangles.
//!
//! Every pair of kernels factors as
//! `k(x, x_i) k(x, x_j) = k_{eta/2}(x_i, x_j) k_{2 eta}(x, (x_i + x_j) / 2)`,
//! so the integral over a box reduces to a weighted sum of separable Gaussian
//! integrals, each a product of `d` differences of `erf`.

mod rect;
mod squared;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::erf::{erf_interval, erf_point, ErfPoint};
use crate::error::{check_dim, Result};
use crate::linalg::{kernel_unchecked, Points, PrecisionVector};
use crate::model::GaussianPsdModel;

pub use rect::HyperRectangle;
pub use squared::{
    integrate_squared, integrate_squared_monte_carlo, integrate_squared_with_cap, squared_gram,
    DEFAULT_SQUARED_TERM_CAP,
};

/// Counters for integral evaluations and `erf` computations.
///
/// Atomic so one instance may be shared across threads.
#[derive(Debug, Default)]
pub struct IntegralAccounting {
    integral_evals: AtomicU64,
    erf_calls: AtomicU64,
}

/// Plain-value copy of [`IntegralAccounting`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountingSnapshot {
    pub integral_evals: u64,
    pub erf_calls: u64,
}

impl IntegralAccounting {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn integral_evals(&self) -> u64 {
        self.integral_evals.load(Ordering::Relaxed)
    }

    pub fn erf_calls(&self) -> u64 {
        self.erf_calls.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> AccountingSnapshot {
        AccountingSnapshot { integral_evals: self.integral_evals(), erf_calls: self.erf_calls() }
    }

    pub(crate) fn add_integral(&self) {
        self.integral_evals.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn add_erf(&self, n: u64) {
        self.erf_calls.fetch_add(n, Ordering::Relaxed);
    }
}

/// Storage of one face's `erf` values.
pub(crate) trait FaceValues {
    fn values(&self) -> &[ErfPoint];
}

impl FaceValues for Vec<ErfPoint> {
    fn values(&self) -> &[ErfPoint] {
        self
    }
}

impl FaceValues for std::rc::Rc<Vec<ErfPoint>> {
    fn values(&self) -> &[ErfPoint] {
        self
    }
}

/// Model-dependent data reused by every box integral.
#[derive(Debug, Clone)]
pub(crate) struct IntegrationPlan {
    m: usize,
    d: usize,
    /// `A_ij * k_{eta/2}(x_i, x_j)`, row-major.
    weights: Vec<f64>,
    /// Pairs `i <= j` with a nonzero weight, as `i * m + j`.
    term_pairs: Vec<usize>,
    /// Weight of each term, off-diagonal ones doubled.
    term_weights: Vec<f64>,
    /// `(x_i + x_j) / 2` for each term, term-major then coordinate.
    term_mids: Vec<f64>,
    /// `(x_i + x_j) / 2` for every ordered pair, pair-major then coordinate.
    mids: Vec<f64>,
    /// `sqrt(2 eta_k)`.
    scale: Vec<f64>,
    /// `c_{2 eta} = (pi/4)^{d/2} det(diag(2 eta))^{-1/2}`.
    norm: f64,
}

impl IntegrationPlan {
    pub(crate) fn new(a: &nalgebra::DMatrix<f64>, centers: &Points, eta: &PrecisionVector) -> Self {
        let m = centers.rows();
        let d = centers.dim();
        let half: Vec<f64> = eta.as_slice().iter().map(|v| 0.5 * v).collect();
        let mut weights = Vec::with_capacity(m * m);
        let mut mids = Vec::with_capacity(m * m * d);
        for i in 0..m {
            for j in 0..m {
                let (xi, xj) = (centers.row(i), centers.row(j));
                weights.push(a[(i, j)] * kernel_unchecked(&half, xi, xj));
                mids.extend((0..d).map(|k| 0.5 * (xi[k] + xj[k])));
            }
        }
        let mut term_pairs = Vec::with_capacity(m * (m + 1) / 2);
        let mut term_weights = Vec::with_capacity(m * (m + 1) / 2);
        let mut term_mids = Vec::new();
        for i in 0..m {
            for j in i..m {
                let w = if i == j { weights[i * m + j] } else { weights[i * m + j] + weights[j * m + i] };
                if w != 0.0 {
                    let p = i * m + j;
                    term_pairs.push(p);
                    term_weights.push(w);
                    term_mids.extend_from_slice(&mids[p * d..(p + 1) * d]);
                }
            }
        }
        let scale = eta.as_slice().iter().map(|v| (2.0 * v).sqrt()).collect();
        let norm = eta
            .as_slice()
            .iter()
            .map(|v| std::f64::consts::PI.sqrt() / (2.0 * (2.0 * v).sqrt()))
            .product();
        IntegrationPlan { m, d, weights, term_pairs, term_weights, term_mids, mids, scale, norm }
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    fn at(&self, axis: usize, coord: f64, mid: f64) -> ErfPoint {
        if coord == f64::NEG_INFINITY {
            ErfPoint::NEG_INF
        } else if coord == f64::INFINITY {
            ErfPoint::POS_INF
        } else {
            erf_point(self.scale[axis] * (coord - mid))
        }
    }

    /// `erf` values at one face of a box, one per nonzero term, written into `buf`.
    /// The midpoints are symmetric, so a finite face costs at most `m (m + 1) / 2`
    /// evaluations.
    pub(crate) fn face_values_into(&self, axis: usize, coord: f64, acct: &IntegralAccounting, buf: &mut Vec<ErfPoint>) {
        buf.clear();
        buf.extend(self.term_mids.iter().skip(axis).step_by(self.d).map(|&mid| self.at(axis, coord, mid)));
        if coord.is_finite() {
            acct.add_erf(self.term_pairs.len() as u64);
        }
    }

    pub(crate) fn face_values(&self, axis: usize, coord: f64, acct: &IntegralAccounting) -> Vec<ErfPoint> {
        let mut buf = Vec::with_capacity(self.term_pairs.len());
        self.face_values_into(axis, coord, acct, &mut buf);
        buf
    }

    /// Same values as [`Self::face_values`] but evaluated independently for every
    /// ordered pair: `m^2` calls per finite face.
    fn face_values_full(&self, axis: usize, coord: f64, acct: &IntegralAccounting) -> Vec<ErfPoint> {
        let m = self.m;
        let full: Vec<ErfPoint> =
            self.mids.iter().skip(axis).step_by(self.d).map(|&mid| self.at(axis, coord, mid)).collect();
        if coord.is_finite() {
            acct.add_erf((m * m) as u64);
        }
        self.term_pairs.iter().map(|&p| full[p]).collect()
    }

    /// Mass of the box whose faces have the given `erf` values.
    pub(crate) fn mass_from_faces<L: FaceValues, H: FaceValues>(&self, lower: &[L], upper: &[H]) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (t, &w) in self.term_weights.iter().enumerate() {
            let mut prod = 1.0;
            for k in 0..self.d {
                prod *= erf_interval(lower[k].values()[t], upper[k].values()[t]);
            }
            // Kahan summation
            let y = w * prod - comp;
            let tot = sum + y;
            comp = (tot - sum) - y;
            sum = tot;
        }
        (self.norm * sum).max(0.0)
    }
}

/// `int_Q f(x; A, X, eta) dx` in closed form.
///
/// Performs `2 d m^2` `erf` evaluations for a bounded box; infinite faces use
/// `erf(+-inf) = +-1` and are not counted.
pub fn integrate(model: &GaussianPsdModel, q: &HyperRectangle, acct: &IntegralAccounting) -> Result<f64> {
    check_dim(model.dim(), q.dim())?;
    let plan = model.plan();
    let lower: Vec<Vec<ErfPoint>> = (0..q.dim()).map(|k| plan.face_values_full(k, q.lower()[k], acct)).collect();
    let upper: Vec<Vec<ErfPoint>> = (0..q.dim()).map(|k| plan.face_values_full(k, q.upper()[k], acct)).collect();
    acct.add_integral();
    Ok(plan.mass_from_faces(&lower, &upper))
}

/// Integral of the model over `R^d`.
pub fn total_mass(model: &GaussianPsdModel) -> f64 {
    integrate(model, &HyperRectangle::whole_space(model.dim()), &IntegralAccounting::new())
        .expect("whole space has the model dimension")
}
