//! Order-of-magnitude hyperparameter schedules as functions of the target accuracy.
//!
//! The unknown constants of the underlying rate results are set to 1, so these are
//! guidance for scaling, not guarantees.

use serde::{Deserialize, Serialize};

use crate::error::{PsdError, Result};
use crate::sampler::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSchedule {
    pub metric: Metric,
    pub epsilon: f64,
    pub d: usize,
    pub beta: u32,
    pub tau: f64,
    pub lambda: f64,
    /// Non-adaptive leaf size for the sampler.
    pub rho: f64,
}

/// `tau = eps^(-2/beta)` and `lambda = eps^(2 + 2d/beta)` for total variation
/// (general PSD fit), `lambda = eps^(2 + d/beta)` for Hellinger (rank-one fit).
pub fn theoretical_parameters(epsilon: f64, d: usize, beta: u32, metric: Metric) -> Result<ParameterSchedule> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(PsdError::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if beta == 0 || d == 0 {
        return Err(PsdError::invalid("beta and d must be >= 1"));
    }
    let (df, bf) = (d as f64, beta as f64);
    let tau = epsilon.powf(-2.0 / bf);
    let (lambda, rho) = match metric {
        Metric::Tv => (epsilon.powf(2.0 + 2.0 * df / bf), epsilon.powf(1.0 + (df + 1.0) / bf)),
        Metric::Hellinger => (epsilon.powf(2.0 + df / bf), epsilon.powf(1.0 + (df + 2.0) / (2.0 * bf))),
    };
    Ok(ParameterSchedule { metric, epsilon, d, beta, tau, lambda, rho })
}

fn ceil_at_least_one(v: f64) -> usize {
    if v.is_finite() {
        v.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

impl ParameterSchedule {
    /// `eps^(-d/beta) log^d(1/eps) log(1/(eps delta))`.
    pub fn min_centers(&self, delta: f64) -> usize {
        let (e, d, b) = (self.epsilon, self.d as f64, self.beta as f64);
        ceil_at_least_one(e.powf(-d / b) * (1.0 / e).ln().powf(d) * (1.0 / (e * delta)).ln())
    }

    /// Total variation: `eps^(-2 - d/beta) log^d(1/eps) log(2/delta)`.
    /// Hellinger: `eps^(-2 nu) log(8/delta)` with `nu = min(1, d/(2 beta))`.
    pub fn min_evaluations(&self, delta: f64) -> usize {
        let (e, d, b) = (self.epsilon, self.d as f64, self.beta as f64);
        match self.metric {
            Metric::Tv => ceil_at_least_one(e.powf(-2.0 - d / b) * (1.0 / e).ln().powf(d) * (2.0 / delta).ln()),
            Metric::Hellinger => {
                let nu = (d / (2.0 * b)).min(1.0);
                ceil_at_least_one(e.powf(-2.0 * nu) * (8.0 / delta).ln())
            }
        }
    }
}
