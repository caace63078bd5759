//! C ABI over `psd-core`.
//!
//! Models live behind an opaque `PsdModel` handle. Every call returns a
//! [`PsdStatus`]; on failure `psd_last_error_message` describes the error for the
//! calling thread. Arrays are row-major `double` buffers owned by the caller.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use nalgebra::{DMatrix, DVector};
use psd_core::integration::total_mass;
use psd_core::sampler::{adaptive_rho, find_support, sample, Metric, SamplerParams};
use psd_core::{integrate, GaussianPsdModel, HyperRectangle, IntegralAccounting, Points, PrecisionVector, PsdError, RankOneModel};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Unsupported = 4,
    EmptyMass = 5,
    UnboundedDomain = 6,
    ResourceLimit = 7,
    IllConditioned = 8,
    DegenerateModel = 9,
    ContractViolation = 10,
    InvalidUtf8 = 11,
    Internal = 12,
    /// A Rust panic was caught at the boundary.
    Panic = 13,
}

/// Distance targeted by `psd_adaptive_rho`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdMetric {
    TotalVariation = 0,
    Hellinger = 1,
}

/// Opaque model handle.
pub struct PsdModel {
    inner: GaussianPsdModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &PsdError) -> PsdStatus {
    match e {
        PsdError::DimensionMismatch { .. } => PsdStatus::DimensionMismatch,
        PsdError::InvalidArgument(_) => PsdStatus::InvalidArgument,
        PsdError::Unsupported(_) => PsdStatus::Unsupported,
        PsdError::EmptyMass => PsdStatus::EmptyMass,
        PsdError::UnboundedDomain(_) => PsdStatus::UnboundedDomain,
        PsdError::ResourceLimit(_) => PsdStatus::ResourceLimit,
        PsdError::IllConditioned(_) => PsdStatus::IllConditioned,
        PsdError::DegenerateModel(_) => PsdStatus::DegenerateModel,
        PsdError::ContractViolation(_) => PsdStatus::ContractViolation,
        PsdError::Internal(_) => PsdStatus::Internal,
    }
}

struct Fail(PsdStatus, String);

impl From<PsdError> for Fail {
    fn from(e: PsdError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PsdStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records its error message and turns panics into `PsdStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PsdStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            PsdStatus::Panic
        }
    }
}

unsafe fn slice_in<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn model_ref<'a>(model: *const PsdModel) -> Result<&'a GaussianPsdModel, Fail> {
    model.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn rect_in(lower: *const f64, upper: *const f64, dim: usize) -> Result<HyperRectangle, Fail> {
    let lo = slice_in(lower, dim, "lower")?.to_vec();
    let hi = slice_in(upper, dim, "upper")?.to_vec();
    Ok(HyperRectangle::new(lo, hi)?)
}

unsafe fn centers_in(centers: *const f64, m: usize, dim: usize) -> Result<Points, Fail> {
    let total = m.checked_mul(dim).ok_or_else(|| Fail(PsdStatus::InvalidArgument, "m * dim overflows".into()))?;
    let x = slice_in(centers, total, "centers")?.to_vec();
    Ok(Points::new(m, dim, x)?)
}

unsafe fn box_model(model: GaussianPsdModel, out: *mut *mut PsdModel) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(PsdModel { inner: model }));
    Ok(())
}

/// Builds a model from `a` (`m x m`, row-major, PSD), `centers` (`m x dim`) and `eta` (`dim`).
/// The new handle is written to `*out` and must be released with `psd_model_free`.
#[no_mangle]
pub unsafe extern "C" fn psd_model_new(
    a: *const f64,
    centers: *const f64,
    eta: *const f64,
    m: usize,
    dim: usize,
    out: *mut *mut PsdModel,
) -> PsdStatus {
    guard(|| {
        let x = centers_in(centers, m, dim)?;
        let mm = m.checked_mul(m).ok_or_else(|| Fail(PsdStatus::InvalidArgument, "m * m overflows".into()))?;
        let coeffs = slice_in(a, mm, "a")?;
        let a = DMatrix::from_row_slice(m, m, coeffs);
        let eta = PrecisionVector::new(slice_in(eta, dim, "eta")?.to_vec())?;
        box_model(GaussianPsdModel::new(a, x, eta)?, out)
    })
}

/// Builds the rank-one model `(sum_i a_i k(x, x_i))^2` from `a` (`m`), `centers` and `eta`.
#[no_mangle]
pub unsafe extern "C" fn psd_model_new_rank_one(
    a: *const f64,
    centers: *const f64,
    eta: *const f64,
    m: usize,
    dim: usize,
    out: *mut *mut PsdModel,
) -> PsdStatus {
    guard(|| {
        let x = centers_in(centers, m, dim)?;
        let a = DVector::from_column_slice(slice_in(a, m, "a")?);
        let eta = PrecisionVector::new(slice_in(eta, dim, "eta")?.to_vec())?;
        box_model(RankOneModel::new(a, x, eta)?.to_psd(), out)
    })
}

/// Parses a model from its JSON form (NUL-terminated UTF-8).
#[no_mangle]
pub unsafe extern "C" fn psd_model_from_json(json: *const c_char, out: *mut *mut PsdModel) -> PsdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let s = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(PsdStatus::InvalidUtf8, format!("json is not UTF-8: {e}")))?;
        box_model(GaussianPsdModel::from_json(s)?, out)
    })
}

/// Writes a newly allocated JSON string to `*out`; free it with `psd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn psd_model_to_json(model: *const PsdModel, out: *mut *mut c_char) -> PsdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let c = CString::new(m.to_json()).map_err(|e| Fail(PsdStatus::Internal, e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn psd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a model handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn psd_model_free(model: *mut PsdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn psd_model_dim(model: *const PsdModel, out: *mut usize) -> PsdStatus {
    guard(|| write_out(out, model_ref(model)?.dim(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn psd_model_num_centers(model: *const PsdModel, out: *mut usize) -> PsdStatus {
    guard(|| write_out(out, model_ref(model)?.num_centers(), "out"))
}

/// `f(x)` at the point `x` of length `dim`.
#[no_mangle]
pub unsafe extern "C" fn psd_model_evaluate(model: *const PsdModel, x: *const f64, dim: usize, out: *mut f64) -> PsdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let v = m.evaluate(slice_in(x, dim, "x")?)?;
        write_out(out, v, "out")
    })
}

/// Integral of the model over the box `[lower, upper]`. Infinite bounds are allowed.
#[no_mangle]
pub unsafe extern "C" fn psd_model_integrate(
    model: *const PsdModel,
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    out: *mut f64,
) -> PsdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let q = rect_in(lower, upper, dim)?;
        let v = integrate(m, &q, &IntegralAccounting::new())?;
        write_out(out, v, "out")
    })
}

/// Integral of the model over the whole space.
#[no_mangle]
pub unsafe extern "C" fn psd_model_total_mass(model: *const PsdModel, out: *mut f64) -> PsdStatus {
    guard(|| write_out(out, total_mass(model_ref(model)?), "out"))
}

/// Draws `n` samples on the bounded box `[lower, upper]` at resolution `rho` into
/// `samples` (`n x dim`, row-major). `integral_evals` may be null.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn psd_model_sample(
    model: *const PsdModel,
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    rho: f64,
    n: usize,
    seed: u64,
    samples: *mut f64,
    integral_evals: *mut u64,
) -> PsdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let q = rect_in(lower, upper, dim)?;
        let len = n.checked_mul(dim).ok_or_else(|| Fail(PsdStatus::InvalidArgument, "n * dim overflows".into()))?;
        let buf = slice_out(samples, len, "samples")?;
        let run = sample(m, &q, &SamplerParams::new(rho, n, seed)?)?;
        buf.copy_from_slice(run.samples.as_slice());
        if !integral_evals.is_null() {
            integral_evals.write(run.accounting.integral_evals);
        }
        Ok(())
    })
}

/// Resolution guaranteeing distance `eps` between the model on the box and its
/// dyadic approximation.
#[no_mangle]
pub unsafe extern "C" fn psd_adaptive_rho(
    model: *const PsdModel,
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    eps: f64,
    metric: PsdMetric,
    out: *mut f64,
) -> PsdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let q = rect_in(lower, upper, dim)?;
        let metric = match metric {
            PsdMetric::TotalVariation => Metric::Tv,
            PsdMetric::Hellinger => Metric::Hellinger,
        };
        write_out(out, adaptive_rho(m, &q, eps, metric)?, "out")
    })
}

/// A bounded box holding all but a fraction `eps` of the model's mass, written to
/// `lower` and `upper` (length `dim` of the model each).
#[no_mangle]
pub unsafe extern "C" fn psd_find_support(
    model: *const PsdModel,
    eps: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> PsdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let d = m.dim();
        let lo = slice_out(lower, d, "lower")?;
        let hi = slice_out(upper, d, "upper")?;
        let found = find_support(m, eps)?;
        lo.copy_from_slice(found.rect.lower());
        hi.copy_from_slice(found.rect.upper());
        Ok(())
    })
}

/// Message of the last failed call on this thread, or an empty string. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn psd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
