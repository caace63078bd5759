use std::ffi::{CStr, CString};
use std::ptr;

use psd_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(psd_last_error_message()) }.to_string_lossy().into_owned()
}

/// `(k(x, 0) - 0.5 k(x, 1))^2` in one dimension with precision 1.
fn rank_one() -> *mut PsdModel {
    let (a, x, eta) = ([1.0, -0.5], [0.0, 1.0], [1.0]);
    let mut m = ptr::null_mut();
    let st = unsafe { psd_model_new_rank_one(a.as_ptr(), x.as_ptr(), eta.as_ptr(), 2, 1, &mut m) };
    assert_eq!(st, PsdStatus::Ok);
    m
}

#[test]
fn build_query_and_free() {
    let m = rank_one();
    let (mut d, mut c) = (0usize, 0usize);
    unsafe {
        assert_eq!(psd_model_dim(m, &mut d), PsdStatus::Ok);
        assert_eq!(psd_model_num_centers(m, &mut c), PsdStatus::Ok);
    }
    assert_eq!((d, c), (1, 2));
    let mut v = 0.0;
    let x = [0.3];
    assert_eq!(unsafe { psd_model_evaluate(m, x.as_ptr(), 1, &mut v) }, PsdStatus::Ok);
    let g = (-0.09f64).exp() - 0.5 * (-0.49f64).exp();
    assert!((v - g * g).abs() < 1e-15);
    unsafe { psd_model_free(m) };
}

#[test]
fn general_matrix_matches_rank_one() {
    // a a^T for a = (1, -0.5), row-major
    let (a, x, eta) = ([1.0, -0.5, -0.5, 0.25], [0.0, 1.0], [1.0]);
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { psd_model_new(a.as_ptr(), x.as_ptr(), eta.as_ptr(), 2, 1, &mut m) }, PsdStatus::Ok);
    let r = rank_one();
    let (lo, hi) = ([-1.0], [2.0]);
    let (mut i1, mut i2) = (0.0, 0.0);
    unsafe {
        assert_eq!(psd_model_integrate(m, lo.as_ptr(), hi.as_ptr(), 1, &mut i1), PsdStatus::Ok);
        assert_eq!(psd_model_integrate(r, lo.as_ptr(), hi.as_ptr(), 1, &mut i2), PsdStatus::Ok);
        psd_model_free(m);
        psd_model_free(r);
    }
    assert!((i1 - i2).abs() < 1e-14 * i2);
}

#[test]
fn whole_line_integral_is_closed_form() {
    // single Gaussian exp(-2 x^2): integral sqrt(pi / 2)
    let (a, x, eta) = ([1.0], [0.0], [1.0]);
    let mut m = ptr::null_mut();
    unsafe { psd_model_new(a.as_ptr(), x.as_ptr(), eta.as_ptr(), 1, 1, &mut m) };
    let (lo, hi) = ([f64::NEG_INFINITY], [f64::INFINITY]);
    let (mut v, mut t) = (0.0, 0.0);
    unsafe {
        assert_eq!(psd_model_integrate(m, lo.as_ptr(), hi.as_ptr(), 1, &mut v), PsdStatus::Ok);
        assert_eq!(psd_model_total_mass(m, &mut t), PsdStatus::Ok);
        psd_model_free(m);
    }
    let want = (std::f64::consts::PI / 2.0).sqrt();
    assert!((v - want).abs() < 1e-15);
    assert!((t - want).abs() < 1e-15);
}

#[test]
fn json_round_trip() {
    let m = rank_one();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { psd_model_to_json(m, &mut s) }, PsdStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"format_version\":1"));
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { psd_model_from_json(s, &mut back) }, PsdStatus::Ok);
    let mut s2 = ptr::null_mut();
    unsafe { psd_model_to_json(back, &mut s2) };
    assert_eq!(unsafe { CStr::from_ptr(s2) }.to_str().unwrap(), text);
    unsafe {
        psd_string_free(s);
        psd_string_free(s2);
        psd_model_free(m);
        psd_model_free(back);
    }
}

#[test]
fn sampling_is_seeded_and_inside_the_box() {
    let m = rank_one();
    let (lo, hi) = ([-2.0], [3.0]);
    let n = 500;
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    let mut evals = 0u64;
    unsafe {
        assert_eq!(psd_model_sample(m, lo.as_ptr(), hi.as_ptr(), 1, 0.01, n, 7, a.as_mut_ptr(), &mut evals), PsdStatus::Ok);
        assert_eq!(psd_model_sample(m, lo.as_ptr(), hi.as_ptr(), 1, 0.01, n, 7, b.as_mut_ptr(), ptr::null_mut()), PsdStatus::Ok);
        psd_model_free(m);
    }
    assert_eq!(a, b);
    assert!(a.iter().all(|x| (-2.0..3.0).contains(x)));
    assert!(evals >= 1);
}

#[test]
fn adaptive_rho_and_support() {
    let m = rank_one();
    let (lo, hi) = ([-2.0], [3.0]);
    let (mut tv, mut h) = (0.0, 0.0);
    let (mut slo, mut shi) = ([0.0], [0.0]);
    unsafe {
        assert_eq!(psd_adaptive_rho(m, lo.as_ptr(), hi.as_ptr(), 1, 0.05, PsdMetric::TotalVariation, &mut tv), PsdStatus::Ok);
        assert_eq!(psd_adaptive_rho(m, lo.as_ptr(), hi.as_ptr(), 1, 0.05, PsdMetric::Hellinger, &mut h), PsdStatus::Ok);
        assert_eq!(psd_find_support(m, 1e-6, slo.as_mut_ptr(), shi.as_mut_ptr()), PsdStatus::Ok);
        psd_model_free(m);
    }
    assert!(tv > 0.0 && h > 0.0);
    assert!(slo[0] <= 0.0 && shi[0] >= 1.0);
}

#[test]
fn errors_set_status_and_message() {
    let mut m = ptr::null_mut();
    let (a, x, eta) = ([-1.0], [0.0], [1.0]);
    let st = unsafe { psd_model_new(a.as_ptr(), x.as_ptr(), eta.as_ptr(), 1, 1, &mut m) };
    assert_ne!(st, PsdStatus::Ok);
    assert!(m.is_null());
    assert!(!last_error().is_empty());

    let mut d = 0usize;
    assert_eq!(unsafe { psd_model_dim(ptr::null(), &mut d) }, PsdStatus::NullPointer);
    assert!(last_error().contains("model"));

    let r = rank_one();
    assert!(last_error().is_empty());
    let (lo, hi) = ([f64::NEG_INFINITY], [0.0]);
    let mut out = [0.0; 4];
    let st = unsafe { psd_model_sample(r, lo.as_ptr(), hi.as_ptr(), 1, 0.1, 4, 1, out.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, PsdStatus::UnboundedDomain);
    let (lo2, hi2) = ([0.0, 0.0], [1.0, 1.0]);
    let mut v = 0.0;
    let st = unsafe { psd_model_integrate(r, lo2.as_ptr(), hi2.as_ptr(), 2, &mut v) };
    assert_eq!(st, PsdStatus::DimensionMismatch);

    let bad = CString::new("{\"format_version\":9}").unwrap();
    let mut back = ptr::null_mut();
    assert_ne!(unsafe { psd_model_from_json(bad.as_ptr(), &mut back) }, PsdStatus::Ok);
    unsafe {
        psd_model_free(r);
        psd_model_free(ptr::null_mut());
        psd_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/psd.h")).unwrap();
    for name in [
        "psd_model_new",
        "psd_model_new_rank_one",
        "psd_model_from_json",
        "psd_model_to_json",
        "psd_string_free",
        "psd_model_free",
        "psd_model_dim",
        "psd_model_num_centers",
        "psd_model_evaluate",
        "psd_model_integrate",
        "psd_model_total_mass",
        "psd_model_sample",
        "psd_adaptive_rho",
        "psd_find_support",
        "psd_last_error_message",
        "typedef struct PsdModel PsdModel",
        "PSD_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "{name} missing from psd.h");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "psd.h"
int check(void) {
    PsdModel *m = NULL;
    double a = 1.0, x = 0.0, eta = 1.0, v = 0.0;
    if (psd_model_new(&a, &x, &eta, 1, 1, &m) != PSD_STATUS_OK) return 1;
    psd_model_evaluate(m, &x, 1, &v);
    psd_model_free(m);
    return psd_last_error_message()[0] != '\0';
}
"#,
    )
    .unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
