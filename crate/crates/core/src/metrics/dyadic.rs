use crate::error::{check_dim, PsdError, Result};
use crate::integration::HyperRectangle;
use crate::metrics::IntegrableDensity;

/// Default ceiling on the number of leaves [`dyadic_density`] enumerates.
pub const DEFAULT_LEAF_CAP: u64 = 1 << 24;

/// The piecewise-constant density `p_{Q,rho}`: each leaf of the dyadic partition of `Q`
/// carries its exact share of the mass, spread uniformly.
///
/// Splitting the longest side until every side is at most `rho` halves axis `k` exactly
/// `depth_k` times, so the leaves form a regular grid whose lines are the successive
/// midpoints the sampler uses.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicDensity {
    q: HyperRectangle,
    rho: f64,
    /// Sorted cell boundaries per axis.
    boundaries: Vec<Vec<f64>>,
    /// Normalized leaf masses, axis 0 varying fastest.
    masses: Vec<f64>,
    total: f64,
}

fn subdivide(a: f64, b: f64, depth: u32, out: &mut Vec<f64>) {
    if depth == 0 {
        return;
    }
    let mid = a + 0.5 * (b - a);
    subdivide(a, mid, depth - 1, out);
    out.push(mid);
    subdivide(mid, b, depth - 1, out);
}

/// [`dyadic_density_with_cap`] with [`DEFAULT_LEAF_CAP`].
pub fn dyadic_density<D: IntegrableDensity + ?Sized>(f: &D, q: &HyperRectangle, rho: f64) -> Result<DyadicDensity> {
    dyadic_density_with_cap(f, q, rho, DEFAULT_LEAF_CAP)
}

pub fn dyadic_density_with_cap<D: IntegrableDensity + ?Sized>(
    f: &D,
    q: &HyperRectangle,
    rho: f64,
    cap: u64,
) -> Result<DyadicDensity> {
    check_dim(f.dim(), q.dim())?;
    if !q.is_bounded() {
        return Err(PsdError::UnboundedDomain("the dyadic partition needs a bounded box".into()));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(PsdError::invalid("rho must be finite and > 0"));
    }
    let depths = q.dyadic_depths(rho);
    let total_depth: u32 = depths.iter().sum();
    if total_depth >= 63 || (1u64 << total_depth) > cap {
        return Err(PsdError::ResourceLimit(format!("dyadic partition has 2^{total_depth} leaves (cap {cap})")));
    }
    let boundaries: Vec<Vec<f64>> = (0..q.dim())
        .map(|k| {
            let (a, b) = (q.lower()[k], q.upper()[k]);
            let mut v = vec![a];
            subdivide(a, b, depths[k], &mut v);
            v.push(b);
            v
        })
        .collect();
    let mut dd = DyadicDensity { q: q.clone(), rho, boundaries, masses: Vec::new(), total: 0.0 };
    let count = dd.leaf_count();
    let mut masses = Vec::with_capacity(count);
    for i in 0..count {
        masses.push(f.mass(&dd.leaf(i))?);
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(PsdError::EmptyMass);
    }
    for m in &mut masses {
        *m /= total;
    }
    dd.masses = masses;
    dd.total = total;
    Ok(dd)
}

impl DyadicDensity {
    pub fn rect(&self) -> &HyperRectangle {
        &self.q
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn leaf_count(&self) -> usize {
        self.boundaries.iter().map(|b| b.len() - 1).product()
    }

    /// Leaf masses divided by their sum; leaves ordered with axis 0 varying fastest.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Sum of the raw leaf integrals, i.e. the mass of `Q`.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    fn cell(&self, mut i: usize) -> Vec<usize> {
        self.boundaries
            .iter()
            .map(|b| {
                let n = b.len() - 1;
                let c = i % n;
                i /= n;
                c
            })
            .collect()
    }

    pub fn leaf(&self, i: usize) -> HyperRectangle {
        let cell = self.cell(i);
        let lower = cell.iter().zip(&self.boundaries).map(|(&c, b)| b[c]).collect();
        let upper = cell.iter().zip(&self.boundaries).map(|(&c, b)| b[c + 1]).collect();
        HyperRectangle::new(lower, upper).expect("cells are valid boxes")
    }

    /// Index of the half-open leaf containing `x`, if `x` lies in `Q`.
    pub fn leaf_index(&self, x: &[f64]) -> Option<usize> {
        if !self.q.contains(x) {
            return None;
        }
        let mut index = 0;
        let mut stride = 1;
        for (k, b) in self.boundaries.iter().enumerate() {
            let c = b.partition_point(|v| *v <= x[k]) - 1;
            index += c * stride;
            stride *= b.len() - 1;
        }
        Some(index)
    }

    /// Density of `p_{Q,rho}` at `x` (0 outside `Q`).
    pub fn value(&self, x: &[f64]) -> f64 {
        match self.leaf_index(x) {
            Some(i) => self.masses[i] / self.leaf(i).volume(),
            None => 0.0,
        }
    }
}
