use std::ffi::{CStr, CString};
use std::ptr;

use branched_renorm_ffi::*;

fn parse(text: &str) -> *mut BrnForest {
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { brn_forest_parse(c.as_ptr(), false, &mut out) };
    assert_eq!(status, BrnStatus::Ok);
    assert!(!out.is_null());
    out
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { brn_string_free(p) };
    s
}

fn last_error() -> String {
    let p = brn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn ladder_value() {
    let f = parse("(1 (1))");
    let mut exact = ptr::null_mut();
    let mut value = 0.0;
    assert_eq!(unsafe { brn_renormalize(f, 0, &mut exact, &mut value) }, BrnStatus::Ok);
    assert_eq!(take_string(exact), "pi^2/4");
    assert!((value - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-12);
    assert_eq!(unsafe { brn_forest_degree(f) }, 2);
    unsafe { brn_forest_free(f) };
}

#[test]
fn explicit_truncation_and_null_outputs() {
    let f = parse("(1 (2))");
    assert_eq!(unsafe { brn_renormalize(f, 6, ptr::null_mut(), ptr::null_mut()) }, BrnStatus::Ok);
    assert_eq!(unsafe { brn_renormalize(f, 1, ptr::null_mut(), ptr::null_mut()) }, BrnStatus::InvalidArgument);
    assert!(last_error().contains("truncation"));
    unsafe { brn_forest_free(f) };
}

#[test]
fn parse_errors_set_message() {
    let c = CString::new("(1 (2)").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { brn_forest_parse(c.as_ptr(), false, &mut out) }, BrnStatus::Parse);
    assert!(out.is_null());
    assert!(last_error().starts_with("parse error"));

    let c = CString::new("(0)").unwrap();
    assert_eq!(unsafe { brn_forest_parse(c.as_ptr(), false, &mut out) }, BrnStatus::Parse);
    assert!(last_error().contains("non-positive"));
}

#[test]
fn null_handles() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { brn_forest_parse(ptr::null(), false, &mut out) }, BrnStatus::NullPointer);
    assert_eq!(unsafe { brn_regularize(ptr::null(), &mut ptr::null_mut()) }, BrnStatus::NullPointer);
    assert_eq!(unsafe { brn_forest_degree(ptr::null()) }, 0);
    unsafe { brn_forest_free(ptr::null_mut()) };
    unsafe { brn_string_free(ptr::null_mut()) };
}

#[test]
fn improper_explicit_input() {
    let c = CString::new("Q=1,0;0,1\n([1,0] ([1,1]))").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { brn_forest_parse(c.as_ptr(), true, &mut out) }, BrnStatus::Locality);
}

#[test]
fn concat_is_multiplicative() {
    let a = parse("(1 (1))");
    let b = parse("(2 (3) (1))");
    let mut ab = ptr::null_mut();
    assert_eq!(unsafe { brn_forest_concat(a, b, &mut ab) }, BrnStatus::Ok);
    assert_eq!(unsafe { brn_forest_degree(ab) }, 5);
    let value = |f| {
        let mut v = 0.0;
        assert_eq!(unsafe { brn_renormalize(f, 0, ptr::null_mut(), &mut v) }, BrnStatus::Ok);
        v
    };
    let (va, vb, vab) = (value(a), value(b), value(ab));
    assert!((vab - va * vb).abs() <= 1e-12 * vab.abs().max(1.0));
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { brn_forest_serialize(ab, &mut text) }, BrnStatus::Ok);
    assert!(!take_string(text).is_empty());
    unsafe {
        brn_forest_free(a);
        brn_forest_free(b);
        brn_forest_free(ab);
    }
}

#[test]
fn similarity_and_regularize() {
    let a = parse("(1 (2))");
    let b = parse("(3 (6))");
    let c = parse("(2 (1))");
    let mut same = false;
    assert_eq!(unsafe { brn_is_similar(a, b, &mut same) }, BrnStatus::Ok);
    assert!(same);
    assert_eq!(unsafe { brn_is_similar(a, c, &mut same) }, BrnStatus::Ok);
    assert!(!same);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { brn_regularize(a, &mut text) }, BrnStatus::Ok);
    assert_eq!(take_string(text), "x^(-(e1 + e2)) * pi/sin(pi*(e1 + e2)) * pi/sin(pi*(e2))");
    unsafe {
        brn_forest_free(a);
        brn_forest_free(b);
        brn_forest_free(c);
    }
}

#[test]
fn quadrature_check() {
    let f = parse("(1 (1))");
    let mut err = 1.0;
    assert_eq!(unsafe { brn_quad_check(f, 3, 7, &mut err) }, BrnStatus::Ok);
    assert!(err < 1e-6, "{err}");
    unsafe { brn_forest_free(f) };
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(brn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/branched_renorm.h")).unwrap();
    for name in [
        "brn_forest_parse",
        "brn_forest_free",
        "brn_forest_concat",
        "brn_renormalize",
        "brn_regularize",
        "brn_is_similar",
        "brn_quad_check",
        "brn_string_free",
        "brn_last_error",
        "typedef struct BrnForest BrnForest",
        "BRN_STATUS_LOCALITY = 4",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
