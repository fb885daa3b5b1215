use std::ffi::{c_char, CStr, CString};
use std::ptr;

use stonespec_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = stonespec_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    stonespec_string_free(s);
    out
}

const DIAG: &str = r#"{"shape":{"m":1,"n":2},"blocks":[[[[1,0],[0,0]],[[0,0],[2,0]]]]}"#;

#[test]
fn observable_value_at_eigenvector() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(stonespec_operator_from_json(c(DIAG).as_ptr(), &mut op), StonespecStatus::Ok);
        let mut q = ptr::null_mut();
        let qp = c(r#"{"block":0,"ray":[[0,0],[1,0]]}"#);
        assert_eq!(stonespec_quasipoint_from_json(qp.as_ptr(), 1, 2, &mut q), StonespecStatus::Ok);
        assert_eq!(stonespec_quasipoint_block(q), 0);
        let mut value = f64::NAN;
        assert_eq!(stonespec_observable_value(op, q, 0.0, &mut value), StonespecStatus::Ok);
        assert!((value - 2.0).abs() < 1e-12);
        assert!(stonespec_last_error().is_null());
        stonespec_quasipoint_free(q);
        stonespec_operator_free(op);
    }
}

#[test]
fn containment_of_projections() {
    unsafe {
        let mut q = ptr::null_mut();
        let qp = c(r#"{"block":0,"ray":[[1,0],[0,0]]}"#);
        assert_eq!(stonespec_quasipoint_from_json(qp.as_ptr(), 2, 2, &mut q), StonespecStatus::Ok);
        let first = c(r#"{"shape":{"m":2,"n":2},"blocks":[[[[1,0],[0,0]],[[0,0],[0,0]]],[[[0,0],[0,0]],[[0,0],[0,0]]]]}"#);
        let second = c(r#"{"shape":{"m":2,"n":2},"blocks":[[[[0,0],[0,0]],[[0,0],[1,0]]],[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#);
        let mut inside = false;
        assert_eq!(stonespec_quasipoint_contains(q, first.as_ptr(), 1e-9, &mut inside), StonespecStatus::Ok);
        assert!(inside);
        assert_eq!(stonespec_quasipoint_contains(q, second.as_ptr(), 1e-9, &mut inside), StonespecStatus::Ok);
        assert!(!inside);
        stonespec_quasipoint_free(q);
    }
}

#[test]
fn lattice_ideals_and_cap() {
    let boolean = c(r#"{"elements":["0","a","b","1"],"leq":[[true,true,true,true],[false,true,false,true],[false,false,true,true],[false,false,false,true]]}"#);
    unsafe {
        let mut l = ptr::null_mut();
        assert_eq!(stonespec_lattice_from_json(boolean.as_ptr(), &mut l), StonespecStatus::Ok);
        assert_eq!(stonespec_lattice_len(l), 4);
        let mut out = ptr::null_mut();
        assert_eq!(stonespec_lattice_ideals_json(l, 256, &mut out), StonespecStatus::Ok);
        assert_eq!(take(out), r#"[["a","1"],["b","1"]]"#);
        assert_eq!(stonespec_lattice_ideals_json(l, 3, &mut out), StonespecStatus::ResourceCap);
        stonespec_lattice_free(l);
    }
}

#[test]
fn witness_and_verify() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(stonespec_witness_json(2, 3, 11, 0.0, &mut out), StonespecStatus::Ok);
        let w: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(w["join_in"], true);
        assert_eq!(w["members_in"], serde_json::json!([false, false]));

        assert_eq!(stonespec_witness_json(2, 1, 11, 0.0, &mut out), StonespecStatus::InvalidInput);
        assert!(last_error().contains("n >= 2"));

        let suite = c("ks");
        assert_eq!(stonespec_verify_json(suite.as_ptr(), 2, 2, 5, 20, 0.0, &mut out), StonespecStatus::Ok);
        let report: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(report["suite"], "ks");
        assert_eq!(report["passed"], true);

        let unknown = c("nope");
        assert_eq!(stonespec_verify_json(unknown.as_ptr(), 2, 2, 5, 20, 0.0, &mut out), StonespecStatus::InvalidInput);
        assert_eq!(stonespec_verify_json(suite.as_ptr(), 9, 8, 5, 20, 0.0, &mut out), StonespecStatus::ResourceCap);
    }
}

#[test]
fn bad_input_is_reported_not_fatal() {
    unsafe {
        let mut op = ptr::null_mut();
        for text in ["", "{", "null", r#"{"shape":{"m":1,"n":2},"blocks":[]}"#] {
            assert_eq!(stonespec_operator_from_json(c(text).as_ptr(), &mut op), StonespecStatus::InvalidInput);
            assert!(!last_error().is_empty());
        }
        assert!(op.is_null());
        assert_eq!(stonespec_operator_from_json(ptr::null(), &mut op), StonespecStatus::NullPointer);
        assert_eq!(stonespec_operator_from_json(c(DIAG).as_ptr(), ptr::null_mut()), StonespecStatus::NullPointer);
        let invalid_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            stonespec_operator_from_json(invalid_utf8.as_ptr() as *const c_char, &mut op),
            StonespecStatus::InvalidInput
        );

        let mut value = 0.0;
        assert_eq!(stonespec_observable_value(ptr::null(), ptr::null(), 0.0, &mut value), StonespecStatus::NullPointer);
        assert_eq!(stonespec_quasipoint_block(ptr::null()), usize::MAX);
        assert_eq!(stonespec_lattice_len(ptr::null()), 0);

        let non_hermitian = c(r#"{"shape":{"m":1,"n":2},"blocks":[[[[0,0],[1,0]],[[0,0],[0,0]]]]}"#);
        assert_eq!(stonespec_operator_from_json(non_hermitian.as_ptr(), &mut op), StonespecStatus::Ok);
        let mut q = ptr::null_mut();
        let qp = c(r#"{"block":0,"ray":[[1,0],[0,0]]}"#);
        assert_eq!(stonespec_quasipoint_from_json(qp.as_ptr(), 1, 2, &mut q), StonespecStatus::Ok);
        assert_eq!(stonespec_observable_value(op, q, 0.0, &mut value), StonespecStatus::InvalidInput);
        assert!(last_error().contains("Hermitian"));

        let other = c(r#"{"block":0,"ray":[[1,0],[0,0],[0,0]]}"#);
        let mut q3 = ptr::null_mut();
        assert_eq!(stonespec_quasipoint_from_json(other.as_ptr(), 1, 3, &mut q3), StonespecStatus::Ok);
        assert_eq!(stonespec_observable_value(op, q3, 0.0, &mut value), StonespecStatus::InvalidInput);

        stonespec_quasipoint_free(q3);
        stonespec_quasipoint_free(q);
        stonespec_operator_free(op);
        stonespec_operator_free(ptr::null_mut());
        stonespec_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(stonespec_operator_from_json(c("{").as_ptr(), &mut op), StonespecStatus::InvalidInput);
    }
    std::thread::spawn(|| assert!(stonespec_last_error().is_null())).join().unwrap();
    assert!(!stonespec_last_error().is_null());
    assert_eq!(stonespec_abi_version(), 1);
}
