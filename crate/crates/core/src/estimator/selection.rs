//! Hyperparameter selection on a held-out half of the evaluations.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};
use crate::estimator::{design_points, fit_rank_one_from_values, EvaluationOracle, FitConfig, OracleKind, RankOneFit};
use crate::linalg::Points;

/// Splits `(points, values)` into a first half for training and a second half for validation.
pub fn train_validation_split(points: &Points, values: &[f64]) -> Result<((Points, Vec<f64>), (Points, Vec<f64>))> {
    check_dim(points.rows(), values.len())?;
    let n = points.rows();
    let half = n / 2;
    if half == 0 || half == n {
        return Err(PsdError::invalid("need at least 2 evaluations to split"));
    }
    Ok((
        (points.select_rows(0..half), values[..half].to_vec()),
        (points.select_rows(half..n), values[half..].to_vec()),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub tau: f64,
    pub lambda: f64,
    /// Mean squared validation error of `g`; `None` when the fit failed.
    pub validation_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub tau: f64,
    pub lambda: f64,
    pub validation_mse: f64,
    pub grid: Vec<GridPoint>,
}

/// Grid search over `taus x lambdas` for the rank-one fit: train on the first half of
/// the evaluations, score on the second, then refit on all of them with the winner.
/// `cfg.tau` and `cfg.lambda` are ignored.
pub fn select_rank_one(
    oracle: &EvaluationOracle,
    cfg: &FitConfig,
    taus: &[f64],
    lambdas: &[f64],
) -> Result<(RankOneFit, SelectionReport)> {
    if oracle.kind() != OracleKind::SquareRoot {
        return Err(PsdError::invalid("the rank-one fit needs a square-root oracle"));
    }
    if taus.is_empty() || lambdas.is_empty() {
        return Err(PsdError::invalid("the search grid is empty"));
    }
    if cfg.m == 0 || cfg.n / 2 < cfg.m {
        return Err(PsdError::invalid(format!("n / 2 = {} must be >= m = {}", cfg.n / 2, cfg.m)));
    }
    let (points, centers) = design_points(oracle.domain(), cfg)?;
    let values = oracle.evaluate_all(&points)?;
    let ((train_x, train_y), (val_x, val_y)) = train_validation_split(&points, &values)?;

    let mut grid = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    let mut last_err = None;
    for &tau in taus {
        for &lambda in lambdas {
            let scored = fit_rank_one_from_values(&train_x, &train_y, centers.clone(), tau, lambda).and_then(|fit| {
                let mut sse = 0.0;
                for (x, y) in val_x.iter_rows().zip(&val_y) {
                    sse += (fit.model.linear_evaluate(x)? - y).powi(2);
                }
                Ok(sse / val_y.len() as f64)
            });
            let mse = match scored {
                Ok(v) => Some(v),
                Err(e) => {
                    last_err = Some(e);
                    None
                }
            };
            if let Some(v) = mse {
                if best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((tau, lambda, v));
                }
            }
            grid.push(GridPoint { tau, lambda, validation_mse: mse });
        }
    }
    let (tau, lambda, validation_mse) = match best {
        Some(b) => b,
        None => return Err(last_err.expect("grid is nonempty")),
    };
    let fit = fit_rank_one_from_values(&points, &values, centers, tau, lambda)?;
    Ok((fit, SelectionReport { tau, lambda, validation_mse, grid }))
}
