use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, PsdError, Result};

/// Axis-aligned half-open box `prod_k [lower_k, upper_k)`. Corners may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperRectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl HyperRectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(PsdError::invalid("rectangle dimension must be >= 1"));
        }
        check_dim(lower.len(), upper.len())?;
        for k in 0..lower.len() {
            let (a, b) = (lower[k], upper[k]);
            if a.is_nan() || b.is_nan() {
                return Err(PsdError::invalid("rectangle corners must not be NaN"));
            }
            if a > b || a == f64::INFINITY || b == f64::NEG_INFINITY {
                return Err(PsdError::invalid(format!("invalid side {k}: [{a}, {b})")));
            }
        }
        Ok(HyperRectangle { lower, upper })
    }

    /// `[lo, hi)^dim`.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// All of `R^dim`.
    pub fn whole_space(dim: usize) -> Self {
        HyperRectangle { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Lebesgue measure; `inf` for unbounded boxes with no degenerate side.
    pub fn volume(&self) -> f64 {
        let sides: Vec<f64> = (0..self.dim()).map(|k| self.side(k)).collect();
        if sides.contains(&0.0) {
            return 0.0;
        }
        sides.iter().product()
    }

    pub fn max_side(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).fold(0.0, f64::max)
    }

    /// Smallest index among the longest sides.
    pub fn split_axis(&self) -> usize {
        let mut best = 0;
        for k in 1..self.dim() {
            if self.side(k) > self.side(best) {
                best = k;
            }
        }
        best
    }

    /// Halves the box along [`Self::split_axis`]; returns `(axis, midpoint, lower half, upper half)`.
    pub fn split(&self) -> (usize, f64, HyperRectangle, HyperRectangle) {
        let k = self.split_axis();
        let mid = self.midpoint(k);
        let mut first = self.clone();
        let mut second = self.clone();
        first.upper[k] = mid;
        second.lower[k] = mid;
        (k, mid, first, second)
    }

    pub(crate) fn midpoint(&self, k: usize) -> f64 {
        self.lower[k] + 0.5 * (self.upper[k] - self.lower[k])
    }

    /// Half-open membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|k| self.lower[k] <= x[k] && x[k] < self.upper[k])
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.midpoint(k)).collect()
    }

    /// Doubles every side about the center.
    pub fn doubled(&self) -> HyperRectangle {
        let mut out = self.clone();
        for k in 0..self.dim() {
            let c = self.midpoint(k);
            let h = self.side(k);
            out.lower[k] = c - h;
            out.upper[k] = c + h;
        }
        out
    }

    /// Number of halvings along each axis until every side is `<= rho`,
    /// following the longest-side split rule.
    pub fn dyadic_depths(&self, rho: f64) -> Vec<u32> {
        (0..self.dim())
            .map(|k| {
                let mut side = self.side(k);
                let mut depth = 0;
                while side > rho {
                    side *= 0.5;
                    depth += 1;
                }
                depth
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct RectRepr {
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

/// JSON form: `{"lower": [...], "upper": [...]}` with `null` for an infinite corner.
impl Serialize for HyperRectangle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let conv = |v: &[f64]| v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        RectRepr { lower: conv(&self.lower), upper: conv(&self.upper) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HyperRectangle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RectRepr::deserialize(d)?;
        let lower = r.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        let upper = r.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        HyperRectangle::new(lower, upper).map_err(serde::de::Error::custom)
    }
}
