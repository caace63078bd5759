//! Distances between a model and its dyadic approximation, and between sample sets.

mod dyadic;
mod exact;
mod mmd;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::integration::{integrate, HyperRectangle, IntegralAccounting};
use crate::model::{GaussianPsdModel, LipschitzBounds};

pub use dyadic::{dyadic_density, dyadic_density_with_cap, DyadicDensity, DEFAULT_LEAF_CAP};
pub use exact::{exact_distances, variation_bounds, ExactDistances, VariationBounds};
pub use mmd::empirical_mmd;

/// A nonnegative function that can be evaluated and integrated over boxes.
pub trait IntegrableDensity {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn mass(&self, q: &HyperRectangle) -> Result<f64>;
    /// Sup-norm Lipschitz bounds, when known.
    fn lipschitz(&self) -> Option<LipschitzBounds> {
        None
    }
}

impl IntegrableDensity for GaussianPsdModel {
    fn dim(&self) -> usize {
        GaussianPsdModel::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate_unchecked(x)
    }

    fn mass(&self, q: &HyperRectangle) -> Result<f64> {
        integrate(self, q, &IntegralAccounting::new())
    }

    fn lipschitz(&self) -> Option<LipschitzBounds> {
        self.lipschitz_bounds().ok()
    }
}

/// A measured distance next to its theoretical upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub metric: String,
    pub value: f64,
    pub bound: Option<f64>,
    /// `bound - value`; negative means the bound was violated.
    pub slack: Option<f64>,
}

impl DistanceReport {
    pub fn new(metric: &str, value: f64, bound: Option<f64>) -> Self {
        DistanceReport { metric: metric.to_string(), value, bound, slack: bound.map(|b| b - value) }
    }

    pub fn within_bound(&self) -> bool {
        self.slack.is_none_or(|s| s >= 0.0)
    }
}
