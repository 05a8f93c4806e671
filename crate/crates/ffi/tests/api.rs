use std::ffi::{CStr, CString};
use std::ptr;

use bsymp_ffi::*;

fn scenario_path(name: &str) -> CString {
    CString::new(format!("{}/../core/scenarios/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn last_error() -> String {
    let p = bsymp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn load_run_and_query() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(bsymp_scenario_load(scenario_path("torus_id.scn").as_ptr(), &mut s), BsympStatus::Ok);
        assert!(bsymp_last_error().is_null());
        let mut n = 0;
        assert_eq!(bsymp_scenario_task_count(s, &mut n), BsympStatus::Ok);
        assert_eq!(n, 3);

        let mut r = ptr::null_mut();
        assert_eq!(bsymp_run(s, ptr::null(), &mut r), BsympStatus::Ok);
        let mut passed = false;
        assert_eq!(bsymp_report_passed(r, &mut passed), BsympStatus::Ok);
        assert!(passed);
        let mut v = f64::NAN;
        let (task, name) = (CString::new("twist").unwrap(), CString::new("seam").unwrap());
        assert_eq!(bsymp_report_residual(r, task.as_ptr(), name.as_ptr(), &mut v), BsympStatus::Ok);
        assert_eq!(v, 0.0);
        let missing = CString::new("nope").unwrap();
        assert_eq!(bsymp_report_residual(r, missing.as_ptr(), name.as_ptr(), &mut v), BsympStatus::DomainError);
        assert!(last_error().contains("nope"));

        let mut json = ptr::null_mut();
        assert_eq!(bsymp_report_to_json(r, &mut json), BsympStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        bsymp_string_free(json);
        let parsed: bsymp::runner::RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.tasks.len(), 3);

        bsymp_report_free(r);
        bsymp_scenario_free(s);
    }
}

#[test]
fn options_override_the_scenario() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(bsymp_scenario_load(scenario_path("dehn_t2s2.scn").as_ptr(), &mut s), BsympStatus::Ok);
        let opts = BsympRunOptions { tol: 1e-30, has_seed: true, seed: 11, ..Default::default() };
        let mut r = ptr::null_mut();
        assert_eq!(bsymp_run(s, &opts, &mut r), BsympStatus::Ok);
        let mut passed = true;
        bsymp_report_passed(r, &mut passed);
        assert!(!passed, "a 1e-30 round-trip tolerance cannot be met");
        bsymp_report_free(r);
        bsymp_scenario_free(s);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(bsymp_scenario_load(scenario_path("missing.scn").as_ptr(), &mut s), BsympStatus::Io);
        assert!(s.is_null());
        assert_eq!(bsymp_scenario_load(scenario_path("malformed.scn").as_ptr(), &mut s), BsympStatus::ParseError);
        assert_eq!(bsymp_scenario_load(ptr::null(), &mut s), BsympStatus::NullPointer);
        assert_eq!(bsymp_scenario_parse(c"name = \"x\"".as_ptr(), ptr::null_mut()), BsympStatus::NullPointer);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(bsymp_scenario_parse(bad.as_ptr().cast(), &mut s), BsympStatus::InvalidUtf8);
        assert!(last_error().contains("UTF-8"));
        let mut n = 0;
        assert_eq!(bsymp_scenario_task_count(ptr::null(), &mut n), BsympStatus::NullPointer);

        let x = [0.0; 4];
        let mut y = [0.0; 4];
        assert_eq!(bsymp_dehn_twist_apply(2, -1.0, false, x.as_ptr(), y.as_mut_ptr()), BsympStatus::DomainError);
        assert_eq!(bsymp_dehn_twist_apply(0, 1.0, false, x.as_ptr(), y.as_mut_ptr()), BsympStatus::DomainError);

        bsymp_scenario_free(ptr::null_mut());
        bsymp_report_free(ptr::null_mut());
        bsymp_expr_free(ptr::null_mut());
        bsymp_string_free(ptr::null_mut());
    }
}

#[test]
fn expressions() {
    unsafe {
        let mut e = ptr::null_mut();
        assert_eq!(bsymp_expr_parse(c"(+ (* x x y) (sin y))".as_ptr(), c"x, y".as_ptr(), &mut e), BsympStatus::Ok);
        let mut v = 0.0;
        assert_eq!(bsymp_expr_eval(e, [2.0, 0.5].as_ptr(), 2, &mut v), BsympStatus::Ok);
        assert!((v - (2.0 + 0.5f64.sin())).abs() < 1e-15);
        let mut d = ptr::null_mut();
        assert_eq!(bsymp_expr_diff(e, 0, &mut d), BsympStatus::Ok);
        assert_eq!(bsymp_expr_eval(d, [2.0, 0.5].as_ptr(), 2, &mut v), BsympStatus::Ok);
        assert!((v - 2.0).abs() < 1e-15);
        assert_ne!(bsymp_expr_eval(d, [2.0].as_ptr(), 1, &mut v), BsympStatus::Ok);
        assert_eq!(bsymp_expr_parse(c"(+ x".as_ptr(), c"x".as_ptr(), &mut e), BsympStatus::ParseError);
        assert!(e.is_null());
        bsymp_expr_free(d);
    }
}

#[test]
fn twist_and_inverse() {
    let x = [0.3, -0.2, 0.9, 0.4, 0.5, -0.1];
    let (mut y, mut z) = ([0.0; 6], [0.0; 6]);
    unsafe {
        assert_eq!(bsymp_dehn_twist_apply(3, 1.5, false, x.as_ptr(), y.as_mut_ptr()), BsympStatus::Ok);
        assert_eq!(bsymp_dehn_twist_apply(3, 1.5, true, y.as_ptr(), z.as_mut_ptr()), BsympStatus::Ok);
    }
    assert!(x.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(x.iter().zip(&y).any(|(a, b)| (a - b).abs() > 1e-3));
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(bsymp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bsymp.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from the header");
    }
}
