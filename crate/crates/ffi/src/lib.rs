//! C ABI over the fairalloc allocators.
//!
//! Problems and reports are opaque handles created and destroyed through
//! this interface. Every fallible call returns an [`FaStatus`]; on failure a
//! message is available from [`fa_last_error`] on the same thread. Strings
//! returned to the caller are freed with [`fa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairalloc::alloc::AllocatorConfig;
use fairalloc::harness::load_problem;
use fairalloc::lp::SolveSession;
use fairalloc::{AllocatorReport, Error, Problem};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidProblem = 3,
    InvalidConfig = 4,
    SolverFailure = 5,
    NotFound = 6,
    Io = 7,
    Panic = 8,
}

/// A validated problem.
pub struct FaProblem(Problem);

/// The outcome of one allocator run.
pub struct FaReport(AllocatorReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> FaStatus {
    match err {
        Error::InvalidProblem(_) | Error::UnknownKey { .. } | Error::Json { .. } => FaStatus::InvalidProblem,
        Error::Config(_) => FaStatus::InvalidConfig,
        Error::Io { .. } => FaStatus::Io,
        _ => FaStatus::SolverFailure,
    }
}

fn fail(status: FaStatus, msg: impl Into<String>) -> FaStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into [`FaStatus::Panic`].
fn guard(f: impl FnOnce() -> FaStatus) -> FaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FaStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, FaStatus> {
    if s.is_null() {
        return Err(fail(FaStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(FaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Parses and validates a problem from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_from_json(json: *const c_char, out: *mut *mut FaProblem) -> FaStatus {
    guard(|| {
        if out.is_null() {
            return fail(FaStatus::NullPointer, "out is null");
        }
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let problem: Problem = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(FaStatus::InvalidProblem, e.to_string()),
        };
        if let Err(e) = problem.index() {
            return fail(status_of(&e), e.to_string());
        }
        *out = Box::into_raw(Box::new(FaProblem(problem)));
        FaStatus::Ok
    })
}

/// Loads and validates a problem file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_load(path: *const c_char, out: *mut *mut FaProblem) -> FaStatus {
    guard(|| {
        if out.is_null() {
            return fail(FaStatus::NullPointer, "out is null");
        }
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_problem(path) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(FaProblem(p)));
                FaStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `problem` must come from this library and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_free(problem: *mut FaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of demands, 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_num_demands(problem: *const FaProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.demands.len())
}

/// Runs the allocator described by `config_json`, e.g.
/// `{"allocator":"gb","alpha":2}`.
///
/// # Safety
/// `problem` must be a live handle, `config_json` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_solve(
    problem: *const FaProblem,
    config_json: *const c_char,
    out: *mut *mut FaReport,
) -> FaStatus {
    guard(|| {
        let (Some(problem), false) = (problem.as_ref(), out.is_null()) else {
            return fail(FaStatus::NullPointer, "problem or out is null");
        };
        let text = match read_str(config_json, "config") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = match AllocatorConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return fail(FaStatus::InvalidConfig, e.to_string()),
        };
        match cfg.run(&problem.0, &SolveSession::default()) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(FaReport(r)));
                FaStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from this library and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn fa_report_free(report: *mut FaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Total allocation `f_k` of a demand.
///
/// # Safety
/// `report` must be a live handle, `demand` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_report_total(report: *const FaReport, demand: *const c_char, out: *mut f64) -> FaStatus {
    guard(|| {
        let (Some(report), false) = (report.as_ref(), out.is_null()) else {
            return fail(FaStatus::NullPointer, "report or out is null");
        };
        let demand = match read_str(demand, "demand") {
            Ok(d) => d,
            Err(s) => return s,
        };
        match report.0.totals.get(demand) {
            Some(&v) => {
                *out = v;
                FaStatus::Ok
            }
            None => fail(FaStatus::NotFound, format!("no demand `{demand}`")),
        }
    })
}

/// Rate of one demand on one path.
///
/// # Safety
/// `report` must be a live handle, `demand` and `path` NUL-terminated
/// strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_report_rate(
    report: *const FaReport,
    demand: *const c_char,
    path: *const c_char,
    out: *mut f64,
) -> FaStatus {
    guard(|| {
        let (Some(report), false) = (report.as_ref(), out.is_null()) else {
            return fail(FaStatus::NullPointer, "report or out is null");
        };
        let (demand, path) = match (read_str(demand, "demand"), read_str(path, "path")) {
            (Ok(d), Ok(p)) => (d, p),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match report.0.allocation.rates.get(&(demand.to_string(), path.to_string())) {
            Some(&v) => {
                *out = v;
                FaStatus::Ok
            }
            None => fail(FaStatus::NotFound, format!("no rate for ({demand}, {path})")),
        }
    })
}

/// LP solves the run used, 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_lp_solves(report: *const FaReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.lp_solves)
}

/// Iterations the run used, 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_iterations(report: *const FaReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.iterations)
}

/// The full report as JSON, or null on failure. Free with
/// [`fa_string_free`].
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_to_json(report: *const FaReport) -> *mut c_char {
    clear_error();
    let Some(report) = report.as_ref() else {
        set_error("report is null");
        return ptr::null_mut();
    };
    match serde_json::to_string(&report.0).map(CString::new) {
        Ok(Ok(s)) => s.into_raw(),
        _ => {
            set_error("report does not serialize");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn fa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
