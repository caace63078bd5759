//! `int_Q f(x)^2 dx` for a Gaussian PSD model.
//!
//! Applying the kernel product rule twice turns each of the `m^4` products
//! `k(x, x_i) k(x, x_j) k(x, x_k) k(x, x_l)` into a constant times a single
//! Gaussian of precision `4 eta` centred at the mean of the four centers.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::erf::{erf_interval, erf_point, ErfPoint};
use crate::error::{check_dim, PsdError, Result};
use crate::integration::HyperRectangle;
use crate::linalg::{kernel_unchecked, Points, PrecisionVector};
use crate::model::GaussianPsdModel;

/// Default ceiling on `m^4` for the closed-form squared integral.
pub const DEFAULT_SQUARED_TERM_CAP: u64 = 100_000_000;

fn check_cap(m: usize, cap: u64) -> Result<()> {
    let terms = (m as u64).saturating_pow(4);
    if terms > cap {
        return Err(PsdError::ResourceLimit(format!(
            "closed-form squared integral needs m^4 = {terms} terms (cap {cap}); use integrate_squared_monte_carlo"
        )));
    }
    Ok(())
}

fn erf_at(coord: f64, scale: f64, center: f64) -> ErfPoint {
    if coord == f64::NEG_INFINITY {
        ErfPoint::NEG_INF
    } else if coord == f64::INFINITY {
        ErfPoint::POS_INF
    } else {
        erf_point(scale * (coord - center))
    }
}

/// Shared pieces for products of two pair-Gaussians `k_{2eta}(x, u) k_{2eta}(x, v)`.
struct PairProduct<'a> {
    eta: &'a [f64],
    /// `sqrt(4 eta_k)`
    scale: Vec<f64>,
    /// `prod_k sqrt(pi) / (2 sqrt(4 eta_k))`
    norm: f64,
    q: &'a HyperRectangle,
}

impl<'a> PairProduct<'a> {
    fn new(eta: &'a PrecisionVector, q: &'a HyperRectangle) -> Self {
        let scale: Vec<f64> = eta.as_slice().iter().map(|e| (4.0 * e).sqrt()).collect();
        let norm = scale.iter().map(|s| std::f64::consts::PI.sqrt() / (2.0 * s)).product();
        PairProduct { eta: eta.as_slice(), scale, norm, q }
    }

    /// `int_Q k_{2eta}(x, u) k_{2eta}(x, v) dx = k_eta(u, v) int_Q k_{4eta}(x, (u + v) / 2) dx`.
    fn term(&self, u: &[f64], v: &[f64]) -> f64 {
        let c = kernel_unchecked(self.eta, u, v);
        if c == 0.0 {
            return 0.0;
        }
        let mut prod = c * self.norm;
        for k in 0..u.len() {
            let mid = 0.5 * (u[k] + v[k]);
            let lo = erf_at(self.q.lower()[k], self.scale[k], mid);
            let hi = erf_at(self.q.upper()[k], self.scale[k], mid);
            prod *= erf_interval(lo, hi);
        }
        prod
    }
}

fn half_kernel(centers: &Points, eta: &PrecisionVector, i: usize, j: usize) -> f64 {
    let half: Vec<f64> = eta.as_slice().iter().map(|v| 0.5 * v).collect();
    kernel_unchecked(&half, centers.row(i), centers.row(j))
}

fn midpoint(centers: &Points, i: usize, j: usize) -> Vec<f64> {
    centers.row(i).iter().zip(centers.row(j)).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// [`integrate_squared`] with an explicit cap on `m^4`.
pub fn integrate_squared_with_cap(model: &GaussianPsdModel, q: &HyperRectangle, cap: u64) -> Result<f64> {
    check_dim(model.dim(), q.dim())?;
    let m = model.num_centers();
    check_cap(m, cap)?;
    let a = model.coefficients();
    let centers = model.centers();
    // unordered pairs i <= j; the off-diagonal ones stand for both (i, j) and (j, i)
    let mut weights = Vec::with_capacity(m * (m + 1) / 2);
    let mut mids = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            let mult = if i == j { 1.0 } else { 2.0 };
            weights.push(mult * a[(i, j)] * half_kernel(centers, model.eta(), i, j));
            mids.push(midpoint(centers, i, j));
        }
    }
    let pp = PairProduct::new(model.eta(), q);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for p in 0..weights.len() {
        if weights[p] == 0.0 {
            continue;
        }
        for r in p..weights.len() {
            let mult = if p == r { 1.0 } else { 2.0 };
            let y = mult * weights[p] * weights[r] * pp.term(&mids[p], &mids[r]) - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
    }
    Ok(sum.max(0.0))
}

/// `int_Q f(x)^2 dx` in closed form. Costs `O(m^4 d)`; refuses models with
/// `m^4 > DEFAULT_SQUARED_TERM_CAP`.
pub fn integrate_squared(model: &GaussianPsdModel, q: &HyperRectangle) -> Result<f64> {
    integrate_squared_with_cap(model, q, DEFAULT_SQUARED_TERM_CAP)
}

/// Plain Monte Carlo estimate of `int_Q f(x)^2 dx` over a bounded box with
/// `n` uniform points. Returns `(estimate, standard error)`.
pub fn integrate_squared_monte_carlo(
    model: &GaussianPsdModel,
    q: &HyperRectangle,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_dim(model.dim(), q.dim())?;
    if !q.is_bounded() {
        return Err(PsdError::UnboundedDomain("Monte Carlo integration needs a bounded box".into()));
    }
    if n < 2 {
        return Err(PsdError::invalid("Monte Carlo integration needs at least 2 points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = q.dim();
    let mut x = vec![0.0; d];
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        for k in 0..d {
            x[k] = q.lower()[k] + q.side(k) * rng.random::<f64>();
        }
        let v = model.evaluate_unchecked(&x).powi(2);
        // Welford update
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let vol = q.volume();
    let var = m2 / (n - 1) as f64;
    Ok((vol * mean, vol * (var / n as f64).sqrt()))
}

/// The `m^2 x m^2` matrix `G` with `int_Q f(x; A)^2 dx = vec(A)^T G vec(A)`,
/// indexed by row-major pairs `(i, j) -> i * m + j`.
pub fn squared_gram(centers: &Points, eta: &PrecisionVector, q: &HyperRectangle) -> Result<DMatrix<f64>> {
    check_dim(eta.dim(), centers.dim())?;
    check_dim(eta.dim(), q.dim())?;
    let m = centers.rows();
    check_cap(m, DEFAULT_SQUARED_TERM_CAP)?;
    let pp = PairProduct::new(eta, q);
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let coef: Vec<f64> = pairs.iter().map(|&(i, j)| half_kernel(centers, eta, i, j)).collect();
    let mids: Vec<Vec<f64>> = pairs.iter().map(|&(i, j)| midpoint(centers, i, j)).collect();
    let mut g = DMatrix::zeros(m * m, m * m);
    for p in 0..pairs.len() {
        for r in p..pairs.len() {
            let v = coef[p] * coef[r] * pp.term(&mids[p], &mids[r]);
            let (i, j) = pairs[p];
            let (k, l) = pairs[r];
            for &(a, b) in &[(i, j), (j, i)] {
                for &(c, e) in &[(k, l), (l, k)] {
                    g[(a * m + b, c * m + e)] = v;
                    g[(c * m + e, a * m + b)] = v;
                }
            }
        }
    }
    Ok(g)
}
