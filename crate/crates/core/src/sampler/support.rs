//! Choosing `rho` from a target accuracy, and locating a box that carries almost all the mass.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};
use crate::integration::{integrate, total_mass, HyperRectangle, IntegralAccounting};
use crate::model::GaussianPsdModel;

/// Distance in which the accuracy target of [`adaptive_rho`] is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Tv,
    Hellinger,
}

impl std::str::FromStr for Metric {
    type Err = PsdError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tv" => Ok(Metric::Tv),
            "hellinger" => Ok(Metric::Hellinger),
            other => Err(PsdError::invalid(format!("unknown metric {other:?} (expected tv or hellinger)"))),
        }
    }
}

/// Leaf size that keeps the dyadic approximation within `epsilon` of the model on `q`:
/// `I(Q) eps / (|Q| Lip(f))` for total variation and
/// `sqrt(I(Q)) eps / (sqrt|Q| Lip(sqrt f))` for Hellinger (rank-one models only).
pub fn adaptive_rho(model: &GaussianPsdModel, q: &HyperRectangle, epsilon: f64, metric: Metric) -> Result<f64> {
    check_dim(model.dim(), q.dim())?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(PsdError::invalid("epsilon must be finite and > 0"));
    }
    if !q.is_bounded() {
        return Err(PsdError::UnboundedDomain("adaptive rho needs a bounded box".into()));
    }
    if metric == Metric::Hellinger && model.rank_one_coefficients().is_none() {
        return Err(PsdError::Unsupported("Hellinger accuracy needs a rank-one model".into()));
    }
    let bounds = model.lipschitz_bounds()?;
    let lip = match metric {
        Metric::Tv => bounds.lip_f,
        Metric::Hellinger => bounds.lip_sqrt_f.expect("rank-one models carry a sqrt bound"),
    };
    if lip <= 0.0 {
        return Err(PsdError::DegenerateModel("Lipschitz bound is zero".into()));
    }
    let mass = integrate(model, q, &IntegralAccounting::new())?;
    let vol = q.volume();
    Ok(match metric {
        Metric::Tv => mass * epsilon / (vol * lip),
        Metric::Hellinger => mass.sqrt() * epsilon / (vol.sqrt() * lip),
    })
}

/// Result of [`find_support`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSearch {
    pub rect: HyperRectangle,
    pub doublings: u32,
    /// `I(rect) / I(R^d)`.
    pub mass_ratio: f64,
    /// Doublings after which the tail bound alone guarantees the target ratio.
    pub doubling_bound: u32,
}

const MAX_DOUBLINGS: u32 = 200;

/// Starts from the bounding box of the centers and doubles it about its center
/// until it holds at least `1 - eps_mass` of the total mass.
///
/// Sides of zero width (all centers share a coordinate) start at `1 / sqrt(2 eta_k)`.
pub fn find_support(model: &GaussianPsdModel, eps_mass: f64) -> Result<SupportSearch> {
    if !(eps_mass > 0.0 && eps_mass < 1.0) {
        return Err(PsdError::invalid(format!("eps_mass must lie in (0, 1), got {eps_mass}")));
    }
    let total = total_mass(model);
    if total <= 0.0 {
        return Err(PsdError::EmptyMass);
    }
    let eta = model.eta().as_slice();
    let d = model.dim();
    let (mut lo, mut hi) = model.centers().bounding_box().expect("models have at least one center");
    for k in 0..d {
        if hi[k] - lo[k] == 0.0 {
            let h = 0.5 / (2.0 * eta[k]).sqrt();
            lo[k] -= h;
            hi[k] += h;
        }
    }
    let mut rect = HyperRectangle::new(lo, hi)?;

    // margins at which the tail bound drops below eps_mass * I(R^d)
    let bounding = model.centers().bounding_box().expect("nonempty");
    let log_term = (2.0 * d as f64 / eps_mass).ln().max(0.0);
    let doubling_bound = (0..d)
        .map(|k| {
            let delta = (log_term / (2.0 * eta[k])).sqrt();
            let needed = (bounding.1[k] - bounding.0[k]) + 2.0 * delta;
            let mut side = rect.side(k);
            let mut t = 0;
            while side < needed && t < MAX_DOUBLINGS {
                side *= 2.0;
                t += 1;
            }
            t
        })
        .max()
        .unwrap_or(0);

    let acct = IntegralAccounting::new();
    let mut doublings = 0;
    loop {
        let ratio = integrate(model, &rect, &acct)? / total;
        if ratio >= 1.0 - eps_mass {
            return Ok(SupportSearch { rect, doublings, mass_ratio: ratio, doubling_bound });
        }
        if doublings == MAX_DOUBLINGS {
            return Err(PsdError::Internal(format!(
                "support search did not reach mass ratio {} after {MAX_DOUBLINGS} doublings",
                1.0 - eps_mass
            )));
        }
        rect = rect.doubled();
        doublings += 1;
    }
}
