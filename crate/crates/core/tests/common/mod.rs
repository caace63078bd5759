#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use psd_core::{GaussianPsdModel, HyperRectangle, Points, PrecisionVector, RankOneModel};
use rand::Rng;

pub fn random_points<R: Rng>(rng: &mut R, m: usize, d: usize, lo: f64, hi: f64) -> Points {
    Points::new(m, d, (0..m * d).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// `A = B B^T` with Gaussian-ish entries, centers in `[-1.5, 1.5]^d`, `eta` in `[0.5, 2.5]`.
pub fn random_model<R: Rng>(rng: &mut R, m: usize, d: usize) -> GaussianPsdModel {
    let b = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let eta = PrecisionVector::new((0..d).map(|_| rng.random_range(0.5..2.5)).collect()).unwrap();
    GaussianPsdModel::new(&b * b.transpose(), random_points(rng, m, d, -1.5, 1.5), eta).unwrap()
}

pub fn random_isotropic_model<R: Rng>(rng: &mut R, m: usize, d: usize, tau: f64) -> GaussianPsdModel {
    let b = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let eta = PrecisionVector::isotropic(tau, d).unwrap();
    GaussianPsdModel::new(&b * b.transpose(), random_points(rng, m, d, -1.5, 1.5), eta).unwrap()
}

pub fn random_rank_one<R: Rng>(rng: &mut R, m: usize, d: usize, tau: f64) -> RankOneModel {
    let a = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let eta = PrecisionVector::isotropic(tau, d).unwrap();
    RankOneModel::new(a, random_points(rng, m, d, -1.5, 1.5), eta).unwrap()
}

pub fn random_box<R: Rng>(rng: &mut R, d: usize) -> HyperRectangle {
    let lo: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..0.5)).collect();
    let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.3..3.0)).collect();
    HyperRectangle::new(lo, hi).unwrap()
}

/// `k_eta(x, 0)^2` on the line.
pub fn squared_gaussian(eta: f64) -> GaussianPsdModel {
    GaussianPsdModel::new(
        DMatrix::from_element(1, 1, 1.0),
        Points::from_rows(&[vec![0.0]]).unwrap(),
        PrecisionVector::new(vec![eta]).unwrap(),
    )
    .unwrap()
}

/// Kolmogorov-Smirnov statistic of `xs` against a continuous CDF.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut dmax: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        dmax = dmax.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    dmax
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Pearson statistic and its upper-tail p-value.
pub fn chi_square_pvalue(counts: &[usize], probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n: usize = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        if p > 0.0 {
            let e = p * n as f64;
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(c, 0, "draw in a zero-probability cell");
        }
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// `exp(-tau |x - c|^2)`, written out independently of the library kernel.
pub fn gauss(tau: f64, x: &[f64], c: &[f64]) -> f64 {
    (-tau * x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).exp()
}

/// `sum_i a_i gauss(tau, x, c_i)`.
pub fn kernel_sum(tau: f64, a: &[f64], centers: &Points, x: &[f64]) -> f64 {
    a.iter().zip(centers.iter_rows()).map(|(ai, c)| ai * gauss(tau, x, c)).sum()
}

/// `sum_ij A_ij gauss(x, c_i) gauss(x, c_j)`.
pub fn psd_value(tau: f64, a: &DMatrix<f64>, centers: &Points, x: &[f64]) -> f64 {
    let k: Vec<f64> = centers.iter_rows().map(|c| gauss(tau, x, c)).collect();
    let mut s = 0.0;
    for i in 0..k.len() {
        for j in 0..k.len() {
            s += a[(i, j)] * k[i] * k[j];
        }
    }
    s
}

/// Row-major `s x s` grid of cell midpoints over a 2D box.
pub fn grid_2d(q: &HyperRectangle, s: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(s * s);
    for i in 0..s {
        for j in 0..s {
            out.push([
                q.lower()[0] + q.side(0) * (i as f64 + 0.5) / s as f64,
                q.lower()[1] + q.side(1) * (j as f64 + 0.5) / s as f64,
            ]);
        }
    }
    out
}
