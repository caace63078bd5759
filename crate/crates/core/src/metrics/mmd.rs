use std::cmp::Ordering;

use crate::error::{check_dim, PsdError, Result};
use crate::linalg::{kernel_unchecked, Points, PrecisionVector};

/// `(1 / (n_x n_y)) sum_ij k(x_i, y_j)`. Identical inputs take the symmetric path, so
/// the same data always produces the same bits.
fn mean_kernel(eta: &[f64], x: &Points, y: &Points) -> f64 {
    let mut total = 0.0;
    if x == y {
        for i in 0..x.rows() {
            let xi = x.row(i);
            let mut row = 0.0;
            for j in (i + 1)..x.rows() {
                row += kernel_unchecked(eta, xi, x.row(j));
            }
            total += 2.0 * row + 1.0;
        }
    } else {
        for xi in x.iter_rows() {
            let mut row = 0.0;
            for yj in y.iter_rows() {
                row += kernel_unchecked(eta, xi, yj);
            }
            total += row;
        }
    }
    total / (x.rows() as f64 * y.rows() as f64)
}

fn canonical_order(p: &Points, q: &Points) -> Ordering {
    p.rows().cmp(&q.rows()).then_with(|| {
        p.as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Biased (V-statistic) maximum mean discrepancy with a Gaussian kernel:
/// `sqrt(mean K_pp + mean K_qq - 2 mean K_pq)`, clamped at 0.
/// Exactly symmetric in its arguments and exactly 0 for identical inputs.
pub fn empirical_mmd(samples_p: &Points, samples_q: &Points, eta: &PrecisionVector) -> Result<f64> {
    check_dim(eta.dim(), samples_p.dim())?;
    check_dim(eta.dim(), samples_q.dim())?;
    if samples_p.is_empty() || samples_q.is_empty() {
        return Err(PsdError::invalid("both sample sets need at least one point"));
    }
    let (a, b) = match canonical_order(samples_p, samples_q) {
        Ordering::Greater => (samples_q, samples_p),
        _ => (samples_p, samples_q),
    };
    let e = eta.as_slice();
    let v = mean_kernel(e, a, a) + mean_kernel(e, b, b) - 2.0 * mean_kernel(e, a, b);
    Ok(v.max(0.0).sqrt())
}
