//! Exact i.i.d. sampling from the dyadic piecewise-constant approximation of a PSD model.
//!
//! The box is halved along its longest side (smallest index on ties) until every
//! side is at most `rho`. Samples are routed to the two halves with a binomial
//! draw weighted by their masses, and each leaf receives uniform points. A final
//! random permutation makes the output exchangeable.

mod binomial;
mod io;
mod support;

use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::erf::ErfPoint;
use crate::error::{check_dim, PsdError, Result};
use crate::integration::{integrate, AccountingSnapshot, HyperRectangle, IntegralAccounting};
use crate::linalg::Points;
use crate::model::GaussianPsdModel;

pub use binomial::binomial;
pub use io::{read_samples_binary, read_samples_csv, write_samples_binary, write_samples_csv, SampleFormat};
pub use support::{adaptive_rho, find_support, Metric, SupportSearch};

/// How box integrals are computed during the descent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralStrategy {
    /// Every child integral is a fresh [`integrate`] call (`2 d m^2` `erf` evaluations).
    Direct,
    /// Children reuse the parent's face values; only the new split face is evaluated.
    /// Produces bit-identical integrals to `Direct`.
    #[default]
    Cached,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerParams {
    pub rho: f64,
    pub n: usize,
    pub seed: u64,
    pub strategy: IntegralStrategy,
}

impl SamplerParams {
    pub fn new(rho: f64, n: usize, seed: u64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(PsdError::invalid(format!("rho must be finite and > 0, got {rho}")));
        }
        Ok(SamplerParams { rho, n, seed, strategy: IntegralStrategy::default() })
    }

    pub fn with_strategy(mut self, strategy: IntegralStrategy) -> Self {
        self.strategy = strategy;
        self
    }
}

/// Output of [`sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub samples: Points,
    pub accounting: AccountingSnapshot,
    pub rho_used: f64,
    /// Leaves (or underflowed boxes) that received at least one sample.
    pub leaf_count: usize,
}

/// Upper bound on the number of box integrals for `n` samples:
/// `n max(0, log2 |Q|) + n d log2(2 / rho) + 1`.
pub fn integral_eval_bound(n: usize, q: &HyperRectangle, rho: f64) -> f64 {
    let n = n as f64;
    n * q.volume().log2().max(0.0) + n * q.dim() as f64 * (2.0 / rho).log2() + 1.0
}

type Face = Rc<Vec<ErfPoint>>;

struct Faces {
    lower: Vec<Face>,
    upper: Vec<Face>,
}

/// Recycles face buffers; freeing and reallocating them on every split is slow.
#[derive(Default)]
struct FacePool(Vec<Vec<ErfPoint>>);

impl FacePool {
    fn take(&mut self) -> Vec<ErfPoint> {
        self.0.pop().unwrap_or_default()
    }

    fn give(&mut self, faces: Faces) {
        for f in faces.lower.into_iter().chain(faces.upper) {
            if let Ok(buf) = Rc::try_unwrap(f) {
                self.0.push(buf);
            }
        }
    }
}

struct Node {
    rect: HyperRectangle,
    n: u64,
    mass: f64,
    faces: Option<Faces>,
}

fn is_leaf(rect: &HyperRectangle, rho: f64) -> bool {
    (0..rect.dim()).all(|k| rect.side(k) <= rho)
}

fn fill_uniform<R: Rng>(rng: &mut R, rect: &HyperRectangle, n: u64, out: &mut Vec<f64>) {
    let d = rect.dim();
    for _ in 0..n {
        for k in 0..d {
            let (a, b) = (rect.lower()[k], rect.upper()[k]);
            let mut x = a + (b - a) * rng.random::<f64>();
            // rounding can land on the excluded upper face
            if x >= b {
                x = a;
            }
            out.push(x);
        }
    }
}

/// Draws `params.n` i.i.d. points from the dyadic approximation `p_{Q,rho}` of the model
/// restricted to the bounded box `q`. Deterministic for a fixed seed.
pub fn sample(model: &GaussianPsdModel, q: &HyperRectangle, params: &SamplerParams) -> Result<SampleRun> {
    check_dim(model.dim(), q.dim())?;
    if !q.is_bounded() {
        return Err(PsdError::UnboundedDomain(
            "sampling needs a bounded box; use find_support to locate one".into(),
        ));
    }
    if q.volume() == 0.0 {
        return Err(PsdError::invalid("sampling box has zero volume"));
    }
    if !(params.rho.is_finite() && params.rho > 0.0) {
        return Err(PsdError::invalid("rho must be finite and > 0"));
    }
    let acct = IntegralAccounting::new();
    let plan = model.plan();
    let d = q.dim();
    let root_faces = match params.strategy {
        IntegralStrategy::Direct => None,
        IntegralStrategy::Cached => Some(Faces {
            lower: (0..d).map(|k| Rc::new(plan.face_values(k, q.lower()[k], &acct))).collect(),
            upper: (0..d).map(|k| Rc::new(plan.face_values(k, q.upper()[k], &acct))).collect(),
        }),
    };
    let mass = match &root_faces {
        Some(f) => {
            acct.add_integral();
            plan.mass_from_faces(&f.lower, &f.upper)
        }
        None => integrate(model, q, &acct)?,
    };
    if mass <= 0.0 {
        return Err(PsdError::EmptyMass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pool = FacePool::default();
    let mut data = Vec::with_capacity(params.n * d);
    let mut leaf_count = 0;
    let mut stack = vec![Node { rect: q.clone(), n: params.n as u64, mass, faces: root_faces }];
    while let Some(node) = stack.pop() {
        if node.n == 0 || is_leaf(&node.rect, params.rho) || node.mass <= 0.0 {
            if node.n > 0 {
                // a zero mass here means the integral underflowed: spread uniformly
                fill_uniform(&mut rng, &node.rect, node.n, &mut data);
                leaf_count += 1;
            }
            if let Some(f) = node.faces {
                pool.give(f);
            }
            continue;
        }
        let (axis, mid, first, second) = node.rect.split();
        let (first_mass, faces) = match node.faces {
            Some(f) => {
                let mut buf = pool.take();
                plan.face_values_into(axis, mid, &acct, &mut buf);
                let face = Rc::new(buf);
                let mut upper = f.upper.clone();
                upper[axis] = face.clone();
                acct.add_integral();
                let m1 = plan.mass_from_faces(&f.lower, &upper);
                let mut lower = f.lower.clone();
                lower[axis] = face;
                (m1, Some((Faces { lower: f.lower, upper }, Faces { lower, upper: f.upper })))
            }
            None => (integrate(model, &first, &acct)?, None),
        };
        let first_mass = first_mass.min(node.mass);
        let p = (first_mass / node.mass).clamp(0.0, 1.0);
        let k = binomial(&mut rng, node.n, p);
        let second_mass = (node.mass - first_mass).max(0.0);
        let (f1, f2) = match faces {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        stack.push(Node { rect: second, n: node.n - k, mass: second_mass, faces: f2 });
        stack.push(Node { rect: first, n: k, mass: first_mass, faces: f1 });
    }

    let rows = data.len() / d;
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut rng);
    let mut permuted = Vec::with_capacity(data.len());
    for i in order {
        permuted.extend_from_slice(&data[i * d..(i + 1) * d]);
    }
    Ok(SampleRun {
        samples: Points::from_raw(rows, d, permuted),
        accounting: acct.snapshot(),
        rho_used: params.rho,
        leaf_count,
    })
}
