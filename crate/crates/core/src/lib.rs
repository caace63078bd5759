//! Gaussian PSD models: densities of the form
//! `f(x) = sum_ij A_ij k(x, x_i) k(x, x_j)` with `A` positive semi-definite and
//! `k` a Gaussian kernel.
//!
//! The crate integrates such models over boxes in closed form, draws exact
//! i.i.d. samples from their dyadic piecewise-constant approximation, and fits
//! them from pointwise evaluations of an unnormalized density.

pub mod baseline;
pub mod cli;
pub mod densities;
pub mod erf;
pub mod estimator;
pub mod error;
pub mod integration;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod quadrature;
pub mod sampler;

pub use error::{PsdError, Result};
pub use integration::{integrate, HyperRectangle, IntegralAccounting};
pub use linalg::{CenterMatrix, Points, PrecisionVector};
pub use model::{GaussianPsdModel, LipschitzBounds, RankOneModel};
