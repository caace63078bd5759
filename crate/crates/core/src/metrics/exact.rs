use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};
use crate::integration::HyperRectangle;
use crate::metrics::{dyadic_density, DistanceReport, IntegrableDensity};
use crate::quadrature::{adaptive_gk, adaptive_gk_2d};

/// Per-leaf absolute tolerance of the quadrature in [`exact_distances`].
const LEAF_TOL: f64 = 1e-9;

/// Upper bounds on the distance between `p_Q` and `p_{Q,rho}`:
/// `TV <= |Q| / I(Q) Lip(f) rho`, `H <= sqrt(|Q| / I(Q)) Lip(sqrt f) rho` and
/// `W1 <= sqrt(d) rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationBounds {
    pub tv: Option<f64>,
    /// Uses `Lip(sqrt f)` for rank-one models, otherwise falls back to `H^2 <= TV`.
    pub hellinger: Option<f64>,
    pub w1: f64,
}

pub fn variation_bounds<D: IntegrableDensity + ?Sized>(f: &D, q: &HyperRectangle, rho: f64) -> Result<VariationBounds> {
    check_dim(f.dim(), q.dim())?;
    let mass = f.mass(q)?;
    if mass <= 0.0 {
        return Err(PsdError::EmptyMass);
    }
    let ratio = q.volume() / mass;
    let lip = f.lipschitz();
    let tv = lip.map(|l| ratio * l.lip_f * rho);
    let hellinger = match lip.and_then(|l| l.lip_sqrt_f) {
        Some(ls) => Some(ratio.sqrt() * ls * rho),
        None => tv.map(f64::sqrt),
    };
    Ok(VariationBounds { tv, hellinger, w1: (q.dim() as f64).sqrt() * rho })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistances {
    pub tv: DistanceReport,
    pub hellinger: DistanceReport,
    /// One-dimensional boxes only.
    pub w1: Option<DistanceReport>,
}

fn integrate_leaf(g: &dyn Fn(&[f64]) -> f64, leaf: &HyperRectangle) -> f64 {
    if leaf.dim() == 1 {
        adaptive_gk(&|x: f64| g(&[x]), leaf.lower()[0], leaf.upper()[0], LEAF_TOL)
    } else {
        adaptive_gk_2d(g, leaf, LEAF_TOL)
    }
}

/// Total variation (`L1`), Hellinger (`L2` of square roots) and, in one dimension,
/// Wasserstein-1 distances between `p_Q = f 1_Q / I(Q)` and its dyadic approximation,
/// each by adaptive quadrature on every leaf. Dimensions 1 and 2 only.
pub fn exact_distances<D: IntegrableDensity + ?Sized>(f: &D, q: &HyperRectangle, rho: f64) -> Result<ExactDistances> {
    check_dim(f.dim(), q.dim())?;
    if q.dim() > 2 {
        return Err(PsdError::Unsupported("exact distances are computed for d <= 2 only".into()));
    }
    let dd = dyadic_density(f, q, rho)?;
    let total = dd.total_mass();
    let (mut tv, mut h2, mut w1) = (0.0, 0.0, 0.0);
    for i in 0..dd.leaf_count() {
        let leaf = dd.leaf(i);
        let c = dd.masses()[i] / leaf.volume();
        let sc = c.sqrt();
        tv += integrate_leaf(&|x: &[f64]| (f.value(x) / total - c).abs(), &leaf);
        h2 += integrate_leaf(&|x: &[f64]| ((f.value(x) / total).sqrt() - sc).powi(2), &leaf);
        if q.dim() == 1 {
            let a = leaf.lower()[0];
            let gap = |x: f64| -> f64 {
                let partial = if x > a {
                    let part = HyperRectangle::new(vec![a], vec![x]).expect("a < x");
                    f.mass(&part).unwrap_or(f64::NAN) / total
                } else {
                    0.0
                };
                (partial - c * (x - a)).abs()
            };
            w1 += adaptive_gk(&gap, a, leaf.upper()[0], LEAF_TOL);
        }
    }
    if !(tv.is_finite() && h2.is_finite() && w1.is_finite()) {
        return Err(PsdError::Internal("quadrature produced a non-finite value".into()));
    }
    let bounds = variation_bounds(f, q, rho)?;
    Ok(ExactDistances {
        tv: DistanceReport::new("tv", tv, bounds.tv),
        hellinger: DistanceReport::new("hellinger", h2.sqrt(), bounds.hellinger),
        w1: (q.dim() == 1).then(|| DistanceReport::new("w1", w1, Some(bounds.w1))),
    })
}
