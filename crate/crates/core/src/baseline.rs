//! Gridding baseline: evaluate the density at the centers of a regular grid and
//! sample a tile categorically, then uniformly inside it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, PsdError, Result};
use crate::estimator::EvaluationOracle;
use crate::integration::HyperRectangle;
use crate::linalg::Points;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSampler {
    q: HyperRectangle,
    side_count: usize,
    centers: Points,
    probabilities: Vec<f64>,
    /// Running sums of the unnormalized weights.
    cdf: Vec<f64>,
}

/// Largest `s` with `s^d <= n`.
fn side_count(n: usize, d: usize) -> usize {
    let pow = |s: usize| -> Option<usize> { (0..d).try_fold(1usize, |acc, _| acc.checked_mul(s)) };
    let mut s = (n as f64).powf(1.0 / d as f64).round() as usize + 1;
    while s > 0 && pow(s).is_none_or(|v| v > n) {
        s -= 1;
    }
    s
}

/// Evaluates the oracle at the `s^d` tile centers, `s = floor(n_evals^(1/d))`.
/// Square-root oracles are squared.
pub fn build_grid(oracle: &EvaluationOracle, q: &HyperRectangle, n_evals: usize) -> Result<GridSampler> {
    check_dim(oracle.dim(), q.dim())?;
    if !q.is_bounded() {
        return Err(PsdError::UnboundedDomain("the grid needs a bounded box".into()));
    }
    if n_evals == 0 {
        return Err(PsdError::invalid("n_evals must be >= 1"));
    }
    let d = q.dim();
    let s = side_count(n_evals, d);
    let tiles = s.pow(d as u32);
    let mut data = Vec::with_capacity(tiles * d);
    let mut idx = vec![0usize; d];
    for _ in 0..tiles {
        for (k, &i) in idx.iter().enumerate() {
            let (a, b) = (q.lower()[k], q.upper()[k]);
            data.push(a + (b - a) * (i as f64 + 0.5) / s as f64);
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i < s {
                break;
            }
            *i = 0;
        }
    }
    let centers = Points::new(tiles, d, data)?;
    let weights: Vec<f64> = centers.iter_rows().map(|x| oracle.density_value(x)).collect::<Result<_>>()?;
    let mut cdf = Vec::with_capacity(tiles);
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cdf.push(acc);
    }
    if !(acc > 0.0) || !acc.is_finite() {
        return Err(PsdError::EmptyMass);
    }
    let probabilities = weights.iter().map(|w| w / acc).collect();
    Ok(GridSampler { q: q.clone(), side_count: s, centers, probabilities, cdf })
}

impl GridSampler {
    pub fn domain(&self) -> &HyperRectangle {
        &self.q
    }

    /// Tiles per axis.
    pub fn side_count(&self) -> usize {
        self.side_count
    }

    /// Oracle calls actually made, `s^d`.
    pub fn evaluations_used(&self) -> usize {
        self.centers.rows()
    }

    pub fn centers(&self) -> &Points {
        &self.centers
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Tile `i`, axis 0 varying fastest.
    pub fn tile(&self, i: usize) -> HyperRectangle {
        let d = self.q.dim();
        let s = self.side_count;
        let mut rest = i;
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for k in 0..d {
            let j = rest % s;
            rest /= s;
            let (a, b) = (self.q.lower()[k], self.q.upper()[k]);
            lo.push(a + (b - a) * j as f64 / s as f64);
            hi.push(if j + 1 == s { b } else { a + (b - a) * (j + 1) as f64 / s as f64 });
        }
        HyperRectangle::new(lo, hi).expect("tile of a valid box")
    }
}

/// Draws `n` points: a tile by inversion of the CDF, then a uniform point in it.
pub fn grid_sample(gs: &GridSampler, n: usize, seed: u64) -> Points {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = gs.q.dim();
    let total = *gs.cdf.last().expect("nonempty grid");
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        let t = gs.cdf.partition_point(|&c| c <= u).min(gs.cdf.len() - 1);
        let tile = gs.tile(t);
        for k in 0..d {
            let (a, b) = (tile.lower()[k], tile.upper()[k]);
            let mut x = a + (b - a) * rng.random::<f64>();
            if x >= b {
                x = a;
            }
            data.push(x);
        }
    }
    Points::new(n, d, data).expect("consistent sample buffer")
}
