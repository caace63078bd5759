//! Gaussian PSD models `f(x) = sum_ij A_ij k(x, x_i) k(x, x_j)` and their rank-one special case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, PsdError, Result};
use crate::integration::{HyperRectangle, IntegrationPlan};
use crate::linalg::{
    kernel_matrix, kernel_unchecked, min_eigenvalue, project_psd, psd_sqrt, symmetric_operator_norm, CenterMatrix,
    PrecisionVector,
};

/// Model files carry this in their `format_version` field.
pub const MODEL_FORMAT_VERSION: u32 = 1;

const PSD_TOL: f64 = 1e-9;

/// A PSD model parametrized by `(A, X, eta)`.
#[derive(Debug, Clone)]
pub struct GaussianPsdModel {
    a: DMatrix<f64>,
    centers: CenterMatrix,
    eta: PrecisionVector,
    /// Set when `A = a a^T` came from a rank-one model.
    rank_one: Option<DVector<f64>>,
    plan: IntegrationPlan,
}

/// A signed Gaussian linear model `g(x) = sum_i a_i k(x, x_i)`; its square is a PSD model.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneModel {
    a: DVector<f64>,
    centers: CenterMatrix,
    eta: PrecisionVector,
}

/// Upper bounds on the sup-norm Lipschitz constants of `f` and, for rank-one models, of `sqrt(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBounds {
    pub lip_f: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lip_sqrt_f: Option<f64>,
}

fn check_shapes(m: usize, centers: &CenterMatrix, eta: &PrecisionVector) -> Result<()> {
    if centers.rows() == 0 {
        return Err(PsdError::invalid("a model needs at least one center"));
    }
    check_dim(centers.rows(), m)?;
    check_dim(eta.dim(), centers.dim())
}

impl GaussianPsdModel {
    /// Validates that `A` is symmetric with smallest eigenvalue `>= -1e-9 * max(1, max|A_ij|)`.
    pub fn new(a: DMatrix<f64>, centers: CenterMatrix, eta: PrecisionVector) -> Result<Self> {
        if !a.is_square() {
            return Err(PsdError::invalid(format!("A must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        check_shapes(a.nrows(), &centers, &eta)?;
        let lam = min_eigenvalue(&a)?;
        let scale = a.amax().max(1.0);
        if lam < -PSD_TOL * scale {
            return Err(PsdError::invalid(format!("A is not positive semi-definite (min eigenvalue {lam:e})")));
        }
        Ok(Self::assemble(a, centers, eta, None))
    }

    /// Like [`Self::new`] but projects `A` onto the PSD cone first.
    pub fn new_repaired(a: DMatrix<f64>, centers: CenterMatrix, eta: PrecisionVector) -> Result<Self> {
        let a = project_psd(&a)?;
        check_shapes(a.nrows(), &centers, &eta)?;
        Ok(Self::assemble(a, centers, eta, None))
    }

    fn assemble(a: DMatrix<f64>, centers: CenterMatrix, eta: PrecisionVector, rank_one: Option<DVector<f64>>) -> Self {
        let plan = IntegrationPlan::new(&a, &centers, &eta);
        GaussianPsdModel { a, centers, eta, rank_one, plan }
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn centers(&self) -> &CenterMatrix {
        &self.centers
    }

    pub fn eta(&self) -> &PrecisionVector {
        &self.eta
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    pub fn num_centers(&self) -> usize {
        self.centers.rows()
    }

    /// The vector `a` when this model is the square of a linear model.
    pub fn rank_one_coefficients(&self) -> Option<&DVector<f64>> {
        self.rank_one.as_ref()
    }

    pub fn as_rank_one(&self) -> Option<RankOneModel> {
        self.rank_one
            .as_ref()
            .map(|a| RankOneModel { a: a.clone(), centers: self.centers.clone(), eta: self.eta.clone() })
    }

    pub(crate) fn plan(&self) -> &IntegrationPlan {
        &self.plan
    }

    /// `f(x)` before clamping; may be slightly negative from roundoff.
    pub fn evaluate_unclamped(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.raw(x))
    }

    fn raw(&self, x: &[f64]) -> f64 {
        let e = self.eta.as_slice();
        let k: Vec<f64> = self.centers.iter_rows().map(|c| kernel_unchecked(e, x, c)).collect();
        if let Some(a) = &self.rank_one {
            let s: f64 = a.iter().zip(&k).map(|(a, k)| a * k).sum();
            return s * s;
        }
        let m = k.len();
        let mut total = 0.0;
        for i in 0..m {
            if k[i] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..m {
                row += self.a[(i, j)] * k[j];
            }
            total += k[i] * row;
        }
        total
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        self.raw(x).max(0.0)
    }

    /// `f(x)`, clamped at zero.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.evaluate_unchecked(x))
    }

    /// Sup-norm Lipschitz bounds `sqrt(8 tau) d ||K^1/2 A K^1/2||` and, for
    /// rank-one models, `sqrt(2 tau) d ||K^1/2 a||`. Requires `eta = tau 1_d`.
    pub fn lipschitz_bounds(&self) -> Result<LipschitzBounds> {
        let tau = self.eta.isotropic_value().ok_or_else(|| {
            PsdError::Unsupported("Lipschitz bounds are only available for isotropic precision".into())
        })?;
        let d = self.dim() as f64;
        let k = kernel_matrix(&self.eta, &self.centers, &self.centers)?;
        let root = psd_sqrt(&k);
        let inner = &root * &self.a * &root;
        let lip_f = (8.0 * tau).sqrt() * d * symmetric_operator_norm(&inner);
        let lip_sqrt_f = self.rank_one.as_ref().map(|a| {
            let ka = a.dot(&(&k * a)).max(0.0);
            (2.0 * tau).sqrt() * d * ka.sqrt()
        });
        Ok(LipschitzBounds { lip_f, lip_sqrt_f })
    }

    /// The center bounding box inflated by `delta`, together with the closed-form
    /// bound on the model mass outside it:
    /// `2 pi^{d/2} det(diag(2 eta))^{-1/2} sum_k exp(-2 eta_k delta_k^2) * sum_ij A_ij k_{eta/2}(x_i, x_j)`.
    pub fn tail_box(&self, delta: &[f64]) -> Result<(HyperRectangle, f64)> {
        check_dim(self.dim(), delta.len())?;
        if delta.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(PsdError::invalid("tail margins must be finite and >= 0"));
        }
        let (lo, hi) = self.centers.bounding_box().expect("models have at least one center");
        let lower = lo.iter().zip(delta).map(|(l, d)| l - d).collect();
        let upper = hi.iter().zip(delta).map(|(h, d)| h + d).collect();
        let rect = HyperRectangle::new(lower, upper)?;
        let eta = self.eta.as_slice();
        let det: f64 = eta.iter().map(|e| 2.0 * e).product();
        let gauss = 2.0 * std::f64::consts::PI.powf(0.5 * self.dim() as f64) / det.sqrt();
        let tails: f64 = eta.iter().zip(delta).map(|(e, d)| (-2.0 * e * d * d).exp()).sum();
        let weight: f64 = self.plan.weights().iter().sum();
        Ok((rect, gauss * tails * weight))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| PsdError::invalid(format!("model JSON: {e}")))
    }
}

impl PartialEq for GaussianPsdModel {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.centers == other.centers && self.eta == other.eta && self.rank_one == other.rank_one
    }
}

impl RankOneModel {
    pub fn new(a: DVector<f64>, centers: CenterMatrix, eta: PrecisionVector) -> Result<Self> {
        check_shapes(a.len(), &centers, &eta)?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(PsdError::invalid("coefficients must be finite"));
        }
        Ok(RankOneModel { a, centers, eta })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn centers(&self) -> &CenterMatrix {
        &self.centers
    }

    pub fn eta(&self) -> &PrecisionVector {
        &self.eta
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    /// The signed value `sum_i a_i k(x, x_i)`.
    pub fn linear_evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let e = self.eta.as_slice();
        Ok(self.centers.iter_rows().zip(self.a.iter()).map(|(c, a)| a * kernel_unchecked(e, x, c)).sum())
    }

    /// The density `(sum_i a_i k(x, x_i))^2`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.linear_evaluate(x)?.powi(2))
    }

    /// The PSD model with `A = a a^T`.
    pub fn to_psd(&self) -> GaussianPsdModel {
        let a = &self.a * self.a.transpose();
        GaussianPsdModel::assemble(a, self.centers.clone(), self.eta.clone(), Some(self.a.clone()))
    }

    pub fn lipschitz_bounds(&self) -> Result<LipschitzBounds> {
        self.to_psd().lipschitz_bounds()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    format_version: u32,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    eta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    rank_one_a: Option<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// JSON: `{"format_version", "A": rows, "X": rows, "eta", "rank_one_a"?}`; floats round-trip exactly.
impl Serialize for GaussianPsdModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr {
            format_version: MODEL_FORMAT_VERSION,
            a: rows_of(&self.a),
            x: self.centers.to_rows(),
            eta: self.eta.as_slice().to_vec(),
            rank_one_a: self.rank_one.as_ref().map(|a| a.iter().copied().collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianPsdModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = ModelRepr::deserialize(d)?;
        if r.format_version != MODEL_FORMAT_VERSION {
            return Err(D::Error::custom(format!("unsupported model format_version {}", r.format_version)));
        }
        let m = r.a.len();
        if r.a.iter().any(|row| row.len() != m) {
            return Err(D::Error::custom("A must be square"));
        }
        let a = DMatrix::from_row_iterator(m, m, r.a.into_iter().flatten());
        let centers = CenterMatrix::from_rows(&r.x).map_err(D::Error::custom)?;
        let eta = PrecisionVector::new(r.eta).map_err(D::Error::custom)?;
        match r.rank_one_a {
            None => GaussianPsdModel::new(a, centers, eta).map_err(D::Error::custom),
            Some(v) => {
                let vec = DVector::from_vec(v);
                let one = RankOneModel::new(vec.clone(), centers, eta).map_err(D::Error::custom)?;
                let outer = &vec * vec.transpose();
                if (&outer - &a).amax() > 1e-9 * outer.amax().max(1.0) {
                    return Err(D::Error::custom("A does not equal rank_one_a rank_one_a^T"));
                }
                Ok(GaussianPsdModel::assemble(a, one.centers, one.eta, Some(vec)))
            }
        }
    }
}
