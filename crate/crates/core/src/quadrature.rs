//! Numerical quadrature: adaptive Gauss–Kronrod (21-point) and tensor Gauss–Legendre.
//!
//! These evaluate integrands pointwise and never touch the closed-form `erf`
//! route, so they double as independent checks of [`crate::integration`].

#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;

use crate::integration::HyperRectangle;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208323457274,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// 10-point Gauss weights at XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

const MAX_SUBDIVISIONS: usize = 4000;

fn gk21<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive 21-point Gauss–Kronrod on `[a, b]`; bisects the worst segment until the
/// summed error estimate drops below `abs_tol`. Returns `(value, error estimate)`.
pub fn adaptive_gk_with_error<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (v, e) = gk21(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut err = e;
    let mut n = 1;
    while err > abs_tol && n < MAX_SUBDIVISIONS {
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk21(f, seg.a, mid);
        let (v2, e2) = gk21(f, mid, seg.b);
        err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        n += 1;
    }
    // re-sum to shed the drift of the running updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    (value, error)
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn adaptive_gk<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    adaptive_gk_with_error(f, a, b, abs_tol).0
}

/// `int_a^inf f` via the substitution `x = a + t / (1 - t)`.
pub fn adaptive_gk_upper_tail<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, abs_tol: f64) -> f64 {
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = a + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive_gk(&g, 0.0, 1.0, abs_tol)
}

/// `int_-inf^b f`.
pub fn adaptive_gk_lower_tail<F: Fn(f64) -> f64 + ?Sized>(f: &F, b: f64, abs_tol: f64) -> f64 {
    adaptive_gk_upper_tail(&|x: f64| f(-x), -b, abs_tol)
}

/// Nested adaptive Gauss–Kronrod over a bounded 2-D box.
pub fn adaptive_gk_2d<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, q: &HyperRectangle, abs_tol: f64) -> f64 {
    assert_eq!(q.dim(), 2, "adaptive_gk_2d needs a 2-D box");
    let (ya, yb) = (q.lower()[1], q.upper()[1]);
    let width = q.side(0).max(f64::MIN_POSITIVE);
    let inner_tol = abs_tol / (4.0 * width);
    let outer = |x: f64| adaptive_gk(&|y: f64| f(&[x, y]), ya, yb, inner_tol);
    adaptive_gk(&outer, q.lower()[0], q.upper()[0], abs_tol * 0.5)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite tensor-product Gauss–Legendre over a bounded box: each axis split into
/// `panels` equal panels with `nodes` points each.
pub fn tensor_gauss_legendre<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    q: &HyperRectangle,
    panels: usize,
    nodes: usize,
) -> f64 {
    let d = q.dim();
    let (gx, gw) = gauss_legendre(nodes);
    let per_axis = panels * nodes;
    let axis_points: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|k| {
            let h = q.side(k) / panels as f64;
            let mut pts = Vec::with_capacity(per_axis);
            for p in 0..panels {
                let c = q.lower()[k] + (p as f64 + 0.5) * h;
                for (x, w) in gx.iter().zip(&gw) {
                    pts.push((c + 0.5 * h * x, 0.5 * h * w));
                }
            }
            pts
        })
        .collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (xk, wk) = axis_points[k][idx[k]];
            x[k] = xk;
            w *= wk;
        }
        total += w * f(&x);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return total;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_high_degree_polynomials() {
        assert!((WGK.iter().sum::<f64>() * 2.0 - WGK[10] - 2.0).abs() < 1e-14);
        assert!((WG.iter().sum::<f64>() * 2.0 - 2.0).abs() < 1e-14);
        for deg in 0..=31 {
            let (v, _) = gk21(&|x: f64| x.powi(deg), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {deg}: {v} vs {exact}");
        }
        // the embedded Gauss rule integrates degree 19 exactly, so the error estimate vanishes
        let (_, e) = gk21(&|x: f64| x.powi(19), 0.0, 1.0);
        assert!(e < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks_and_tails() {
        let v = adaptive_gk(&|x: f64| (x - 0.3).abs(), -1.0, 1.0, 1e-12);
        assert!((v - (1.3f64.powi(2) + 0.7f64.powi(2)) / 2.0).abs() < 1e-11);
        let tail = adaptive_gk_upper_tail(&|x: f64| (-x * x).exp(), 0.0, 1e-13);
        assert!((tail - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
        let lower = adaptive_gk_lower_tail(&|x: f64| (-x * x).exp(), 0.0, 1e-13);
        assert!((lower - tail).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_nodes() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((v - exact).abs() < 1e-12, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn tensor_rule_and_nested_rule_agree() {
        let q = HyperRectangle::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let f = |x: &[f64]| (-(x[0] * x[0]) - 0.5 * (x[1] - 1.0).powi(2)).exp();
        let a = tensor_gauss_legendre(&f, &q, 2, 20);
        let b = adaptive_gk_2d(&f, &q, 1e-12);
        assert!((a - b).abs() < 1e-11);
    }
}
