//! Fitting PSD models from pointwise evaluations of an unnormalized density.

mod psd;
mod rank_one;
mod schedule;
mod selection;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PsdError, Result};
use crate::integration::HyperRectangle;
use crate::linalg::Points;

pub use psd::{fit_psd, fit_psd_from_values, PsdFit, PsdFitOptions, PsdFitReport, PsdLoss};
pub use rank_one::{fit_rank_one, fit_rank_one_from_values, RankOneFit, RankOneReport};
pub use schedule::{theoretical_parameters, ParameterSchedule};
pub use selection::{select_rank_one, train_validation_split, GridPoint, SelectionReport};

/// Hyperparameters shared by both fitting procedures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of density evaluations.
    pub n: usize,
    /// Number of kernel centers.
    pub m: usize,
    /// Isotropic kernel precision, `eta = tau 1_d`.
    pub tau: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(PsdError::invalid("m must be >= 1"));
        }
        if self.n < self.m {
            return Err(PsdError::invalid(format!("n = {} must be >= m = {}", self.n, self.m)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(PsdError::invalid("tau must be finite and > 0"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(PsdError::invalid("lambda must be finite and > 0"));
        }
        Ok(())
    }
}

/// What the oracle returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// `g(x)` with `g^2` proportional to the density; any sign.
    SquareRoot,
    /// `f(x) >= 0` proportional to the density.
    Density,
}

/// Pointwise access to an unnormalized density on a bounded domain.
pub struct EvaluationOracle<'a> {
    f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>,
    domain: HyperRectangle,
    kind: OracleKind,
}

impl std::fmt::Debug for EvaluationOracle<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvaluationOracle").field("domain", &self.domain).field("kind", &self.kind).finish()
    }
}

impl<'a> EvaluationOracle<'a> {
    pub fn new(domain: HyperRectangle, kind: OracleKind, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        EvaluationOracle { f: Box::new(f), domain, kind }
    }

    pub fn square_root(domain: HyperRectangle, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        Self::new(domain, OracleKind::SquareRoot, g)
    }

    pub fn density(domain: HyperRectangle, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        Self::new(domain, OracleKind::Density, f)
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// The raw oracle value; density oracles must return finite values `>= 0`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(PsdError::ContractViolation(format!("oracle returned {v} at {x:?}")));
        }
        if self.kind == OracleKind::Density && v < 0.0 {
            return Err(PsdError::ContractViolation(format!("density oracle returned {v} < 0 at {x:?}")));
        }
        Ok(v)
    }

    /// The density value: `g(x)^2` or `f(x)`.
    pub fn density_value(&self, x: &[f64]) -> Result<f64> {
        let v = self.evaluate(x)?;
        Ok(match self.kind {
            OracleKind::SquareRoot => v * v,
            OracleKind::Density => v,
        })
    }

    /// Evaluates every row with [`Self::evaluate`].
    pub fn evaluate_all(&self, points: &Points) -> Result<Vec<f64>> {
        points.iter_rows().map(|x| self.evaluate(x)).collect()
    }
}

/// `n` uniform points in a bounded box.
pub fn uniform_points<R: Rng + ?Sized>(rng: &mut R, domain: &HyperRectangle, n: usize) -> Result<Points> {
    if !domain.is_bounded() {
        return Err(PsdError::UnboundedDomain("uniform design points need a bounded domain".into()));
    }
    let d = domain.dim();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for k in 0..d {
            data.push(domain.lower()[k] + domain.side(k) * rng.random::<f64>());
        }
    }
    Points::new(n, d, data)
}

/// The evaluation points `X_n` and centers `X_m` a fit with `cfg` uses: independent
/// uniform draws in `domain`, from streams 0 and 1 of the seeded generator.
pub fn design_points(domain: &HyperRectangle, cfg: &FitConfig) -> Result<(Points, Points)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let evals = uniform_points(&mut rng, domain, cfg.n)?;
    rng.set_stream(1);
    rng.set_word_pos(0);
    let centers = uniform_points(&mut rng, domain, cfg.m)?;
    Ok((evals, centers))
}
