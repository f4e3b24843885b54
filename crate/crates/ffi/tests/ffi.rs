use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use fairalloc_ffi::*;

const PROBLEM: &str = r#"{
  "resources": [{"id": "e1", "capacity": 0.5}, {"id": "e2", "capacity": 1.0}],
  "paths": [{"id": "p1", "resources": ["e1"]}, {"id": "p2", "resources": ["e2"]},
            {"id": "p3", "resources": ["e2"]}],
  "demands": [{"id": "d1", "paths": ["p1", "p2"]}, {"id": "d2", "paths": ["p3"]}]
}"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = fa_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn problem() -> *mut FaProblem {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fa_problem_from_json(c(PROBLEM).as_ptr(), &mut p) }, FaStatus::Ok);
    p
}

#[test]
fn solve_and_query() {
    let p = problem();
    assert_eq!(unsafe { fa_problem_num_demands(p) }, 2);
    let mut r = ptr::null_mut();
    let status = unsafe { fa_solve(p, c(r#"{"allocator":"exact"}"#).as_ptr(), &mut r) };
    assert_eq!(status, FaStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { fa_report_total(r, c("d1").as_ptr(), &mut v) }, FaStatus::Ok);
    assert!((v - 0.75).abs() < 1e-9);
    assert_eq!(unsafe { fa_report_rate(r, c("d1").as_ptr(), c("p1").as_ptr(), &mut v) }, FaStatus::Ok);
    assert!((v - 0.5).abs() < 1e-9);
    assert_eq!(unsafe { fa_report_lp_solves(r) }, 3);
    assert_eq!(
        unsafe { fa_report_total(r, c("d9").as_ptr(), &mut v) },
        FaStatus::NotFound
    );
    assert!(last_error().contains("d9"));

    let json = unsafe { fa_report_to_json(r) };
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { fa_string_free(json) };
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["allocator"], "exact");

    unsafe {
        fa_report_free(r);
        fa_problem_free(p);
    }
}

#[test]
fn error_codes() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fa_problem_from_json(ptr::null(), &mut p) }, FaStatus::NullPointer);
    assert_eq!(unsafe { fa_problem_from_json(c("{").as_ptr(), &mut p) }, FaStatus::InvalidProblem);
    let bad = PROBLEM.replace("\"capacity\": 0.5", "\"capacity\": -1");
    assert_eq!(unsafe { fa_problem_from_json(c(&bad).as_ptr(), &mut p) }, FaStatus::InvalidProblem);
    assert!(last_error().contains("e1"));
    assert_eq!(
        unsafe { fa_problem_load(c("/nonexistent/x.json").as_ptr(), &mut p) },
        FaStatus::Io
    );

    let p = problem();
    let mut r = ptr::null_mut();
    let cfg = c(r#"{"allocator":"gb","beta":1}"#);
    assert_eq!(unsafe { fa_solve(p, cfg.as_ptr(), &mut r) }, FaStatus::InvalidConfig);
    assert!(r.is_null());
    unsafe {
        fa_problem_free(p);
        fa_problem_free(ptr::null_mut());
        fa_report_free(ptr::null_mut());
        fa_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(fa_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_current() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fairalloc.h")).unwrap();
    for name in ["fa_problem_from_json", "fa_solve", "fa_report_total", "fa_last_error", "FA_STATUS_OK"] {
        assert!(header.contains(name), "{name}");
    }
}

/// Compiles the C smoke test against the header and static library when a C
/// compiler is available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("libfairalloc_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library at {} or no cc", lib.display());
        return;
    }
    let out = std::env::temp_dir().join(format!("fairalloc-smoke-{}", std::process::id()));
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("0.750000"));
}
