//! Built-in target densities for experiments and demos.
//!
//! Every density is exposed through a square-root oracle `g` with `p ∝ g^2`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};
use crate::estimator::EvaluationOracle;
use crate::integration::HyperRectangle;
use crate::linalg::{Points, PrecisionVector};
use crate::model::{GaussianPsdModel, RankOneModel};

fn default_p2_dim() -> usize {
    5
}

fn default_barrier() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DensitySpec {
    /// `0.08 k_0.7(x,-1) - 0.4 k_0.6(x,1) + 0.4 k_0.7(x,1)` on the line, clamped at 0.
    P1,
    /// `(k_0.2(x, 1) - k_0.2(x, -1))^2`.
    P2 {
        #[serde(default = "default_p2_dim")]
        dim: usize,
    },
    /// `exp(-(x-mean)^T diag(precision) (x-mean) / 2)`.
    Gaussian { mean: Vec<f64>, precision: Vec<f64> },
    /// `exp(-V)` with `V(x) = barrier (x_0^2 - 1)^2 + |x_1..|^2 / 2`.
    DoubleWell {
        dim: usize,
        #[serde(default = "default_barrier")]
        barrier: f64,
    },
    /// Identically zero.
    Zero { dim: usize },
}

fn sq_dist_weighted(x: &[f64], c: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(c).zip(w).map(|((a, b), w)| w * (a - b) * (a - b)).sum()
}

fn p1(x: f64) -> f64 {
    let k = |eta: f64, c: f64| (-eta * (x - c) * (x - c)).exp();
    0.08 * k(0.7, -1.0) - 0.4 * k(0.6, 1.0) + 0.4 * k(0.7, 1.0)
}

fn p2(x: &[f64]) -> f64 {
    let plus: f64 = x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum();
    let minus: f64 = x.iter().map(|v| (v + 1.0) * (v + 1.0)).sum();
    (-0.2 * plus).exp() - (-0.2 * minus).exp()
}

impl DensitySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DensitySpec::P1 => Ok(()),
            DensitySpec::P2 { dim } | DensitySpec::Zero { dim } if *dim == 0 => Err(PsdError::invalid("dim must be >= 1")),
            DensitySpec::P2 { .. } | DensitySpec::Zero { .. } => Ok(()),
            DensitySpec::Gaussian { mean, precision } => {
                check_dim(mean.len(), precision.len())?;
                if mean.is_empty() || mean.iter().any(|v| !v.is_finite()) {
                    return Err(PsdError::invalid("gaussian mean must be a nonempty finite vector"));
                }
                PrecisionVector::new(precision.clone()).map(|_| ())
            }
            DensitySpec::DoubleWell { dim, barrier } => {
                if *dim == 0 {
                    return Err(PsdError::invalid("dim must be >= 1"));
                }
                if !(barrier.is_finite() && *barrier >= 0.0) {
                    return Err(PsdError::invalid("barrier must be finite and >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DensitySpec::P1 => 1,
            DensitySpec::P2 { dim } | DensitySpec::DoubleWell { dim, .. } | DensitySpec::Zero { dim } => *dim,
            DensitySpec::Gaussian { mean, .. } => mean.len(),
        }
    }

    /// Box used when a config does not name one.
    pub fn default_domain(&self) -> HyperRectangle {
        let d = self.dim();
        let cube = |h: f64| HyperRectangle::cube(-h, h, d).expect("valid cube");
        match self {
            DensitySpec::P1 => cube(3.0),
            DensitySpec::P2 { .. } | DensitySpec::Zero { .. } => cube(1.0),
            DensitySpec::DoubleWell { .. } => cube(2.5),
            DensitySpec::Gaussian { mean, precision } => {
                let lo = mean.iter().zip(precision).map(|(m, p)| m - 5.0 / p.sqrt()).collect();
                let hi = mean.iter().zip(precision).map(|(m, p)| m + 5.0 / p.sqrt()).collect();
                HyperRectangle::new(lo, hi).expect("valid box")
            }
        }
    }

    /// `g(x)`, a square root of the unnormalized density.
    pub fn sqrt_density(&self, x: &[f64]) -> f64 {
        match self {
            DensitySpec::P1 => p1(x[0]).max(0.0).sqrt(),
            DensitySpec::P2 { .. } => p2(x),
            DensitySpec::Gaussian { mean, precision } => (-0.25 * sq_dist_weighted(x, mean, precision)).exp(),
            DensitySpec::DoubleWell { barrier, .. } => {
                let w = x[0] * x[0] - 1.0;
                let rest: f64 = x[1..].iter().map(|v| v * v).sum();
                (-0.5 * (barrier * w * w + 0.5 * rest)).exp()
            }
            DensitySpec::Zero { .. } => 0.0,
        }
    }

    /// The unnormalized density, `g(x)^2`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let g = self.sqrt_density(x);
        g * g
    }

    /// Upper bound on [`Self::density`] over the whole space.
    pub fn density_sup(&self) -> f64 {
        match self {
            // 0.08 + 0.4 max_t (e^{-0.7 t^2} - e^{-0.6 t^2}) <= 0.08 + 0.4
            DensitySpec::P1 => 0.48,
            DensitySpec::P2 { .. } | DensitySpec::Gaussian { .. } | DensitySpec::DoubleWell { .. } => 1.0,
            DensitySpec::Zero { .. } => 0.0,
        }
    }

    pub fn oracle(&self, domain: HyperRectangle) -> Result<EvaluationOracle<'static>> {
        self.validate()?;
        check_dim(self.dim(), domain.dim())?;
        let spec = self.clone();
        Ok(EvaluationOracle::square_root(domain, move |x| spec.sqrt_density(x)))
    }

    /// The density as an exact PSD model, when it is one.
    pub fn exact_model(&self) -> Option<GaussianPsdModel> {
        match self {
            DensitySpec::P2 { dim } => {
                let centers = Points::from_rows(&[vec![1.0; *dim], vec![-1.0; *dim]]).ok()?;
                let eta = PrecisionVector::isotropic(0.2, *dim).ok()?;
                RankOneModel::new(DVector::from_vec(vec![1.0, -1.0]), centers, eta).ok().map(|r| r.to_psd())
            }
            DensitySpec::Gaussian { mean, precision } => {
                let centers = Points::from_rows(std::slice::from_ref(mean)).ok()?;
                let eta = PrecisionVector::new(precision.iter().map(|p| p / 4.0).collect()).ok()?;
                RankOneModel::new(DVector::from_vec(vec![1.0]), centers, eta).ok().map(|r| r.to_psd())
            }
            _ => None,
        }
    }
}

/// Upper limit on proposals in [`sample_truth`].
pub const MAX_REJECTION_PROPOSALS: u64 = 1 << 32;

/// Exact i.i.d. draws from the density restricted to `q`, by rejection from the
/// uniform distribution with envelope [`DensitySpec::density_sup`].
pub fn sample_truth(spec: &DensitySpec, q: &HyperRectangle, n: usize, seed: u64) -> Result<Points> {
    spec.validate()?;
    check_dim(spec.dim(), q.dim())?;
    if !q.is_bounded() {
        return Err(PsdError::UnboundedDomain("rejection sampling needs a bounded box".into()));
    }
    let sup = spec.density_sup();
    if sup <= 0.0 {
        return Err(PsdError::EmptyMass);
    }
    let d = q.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    let mut proposals = 0u64;
    while data.len() < n * d {
        if proposals == MAX_REJECTION_PROPOSALS {
            return Err(PsdError::ResourceLimit(format!(
                "rejection sampler accepted {} of {proposals} proposals",
                data.len() / d
            )));
        }
        proposals += 1;
        for (k, xk) in x.iter_mut().enumerate() {
            let (a, b) = (q.lower()[k], q.upper()[k]);
            *xk = a + (b - a) * rng.random::<f64>();
            if *xk >= b {
                *xk = a;
            }
        }
        if rng.random::<f64>() * sup < spec.density(&x) {
            data.extend_from_slice(&x);
        }
    }
    Points::new(n, d, data)
}
