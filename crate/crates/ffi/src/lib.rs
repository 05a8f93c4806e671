//! C ABI over `bsymp`.
//!
//! Every entry point returns a [`BsympStatus`]; on anything but `Ok` the
//! message is available from [`bsymp_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned as `char *` are owned by the caller and released with
//! [`bsymp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bsymp::dehn::{model_dehn_twist, TwistProfile};
use bsymp::runner::{self, RunOptions, RunReport};
use bsymp::scenario::Scenario;
use bsymp::{ChartMap, Error, Expr};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsympStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    Io = 4,
    /// Degenerate form, non-transverse locus, failed volume or symplectic check.
    Degenerate = 5,
    /// Bad dimensions, points outside a chart, violated preconditions.
    DomainError = 6,
    /// A construction could not be completed (seam mismatch, inflation, profile).
    TaskFailed = 7,
    Panic = 8,
}

impl From<&Error> for BsympStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) | Error::Scenario(_) => BsympStatus::ParseError,
            Error::Io(_) => BsympStatus::Io,
            Error::Degenerate { .. }
            | Error::TransversalityFail { .. }
            | Error::NotCosymplectic { .. }
            | Error::NotSymplectic { .. }
            | Error::ZeroSection => BsympStatus::Degenerate,
            Error::BoundaryMismatch { .. } | Error::NonMonotoneProfile | Error::InflationFail { .. } => {
                BsympStatus::TaskFailed
            }
            _ => BsympStatus::DomainError,
        }
    }
}

/// A parsed scenario.
pub struct BsympScenario(Scenario);

/// The result of running or verifying a scenario.
pub struct BsympReport(RunReport);

/// A scalar expression in named variables.
pub struct BsympExpr(Expr);

/// Overrides for a run. Zero (or non-positive) fields keep the scenario value.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BsympRunOptions {
    pub grid: usize,
    pub tol: f64,
    pub has_seed: bool,
    pub seed: u64,
    pub profile_c: f64,
    pub period: f64,
}

impl From<&BsympRunOptions> for RunOptions {
    fn from(o: &BsympRunOptions) -> Self {
        let pos = |x: f64| (x > 0.0).then_some(x);
        RunOptions {
            grid: (o.grid > 0).then_some(o.grid),
            tol: pos(o.tol),
            seed: o.has_seed.then_some(o.seed),
            profile_c: pos(o.profile_c),
            period: pos(o.period),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (BsympStatus, String)>) -> BsympStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BsympStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            BsympStatus::Panic
        }
    }
}

fn lib(e: Error) -> (BsympStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(what: &str) -> (BsympStatus, String) {
    (BsympStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BsympStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (BsympStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (BsympStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (BsympStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn bsymp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn bsymp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library (or be NULL).
#[no_mangle]
pub unsafe extern "C" fn bsymp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bsymp_scenario_load(path: *const c_char, out: *mut *mut BsympScenario) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        *out = boxed(BsympScenario(Scenario::load(Path::new(path)).map_err(lib)?));
        Ok(())
    })
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bsymp_scenario_parse(text: *const c_char, out: *mut *mut BsympScenario) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        *out = boxed(BsympScenario(Scenario::parse(text).map_err(lib)?));
        Ok(())
    })
}

/// # Safety
/// `s` must come from `bsymp_scenario_*` (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bsymp_scenario_free(s: *mut BsympScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// Pointers must be valid or NULL where noted.
#[no_mangle]
pub unsafe extern "C" fn bsymp_scenario_task_count(s: *const BsympScenario, out: *mut usize) -> BsympStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(s, "scenario")?.0.tasks.len();
        Ok(())
    })
}

unsafe fn run_with(
    s: *const BsympScenario,
    opts: *const BsympRunOptions,
    out: *mut *mut BsympReport,
    f: fn(&Scenario, &RunOptions) -> RunReport,
) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = ref_arg(s, "scenario")?;
        let opts = opts.as_ref().map(RunOptions::from).unwrap_or_default();
        *out = boxed(BsympReport(f(&s.0, &opts)));
        Ok(())
    })
}

/// Runs every task. A report whose tasks fail is still `Ok`; query it with
/// [`bsymp_report_passed`]. `opts` may be NULL.
///
/// # Safety
/// `s` must be a live scenario; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bsymp_run(
    s: *const BsympScenario,
    opts: *const BsympRunOptions,
    out: *mut *mut BsympReport,
) -> BsympStatus {
    run_with(s, opts, out, runner::run)
}

/// Default checks on every declared field.
///
/// # Safety
/// As for [`bsymp_run`].
#[no_mangle]
pub unsafe extern "C" fn bsymp_verify_fields(
    s: *const BsympScenario,
    opts: *const BsympRunOptions,
    out: *mut *mut BsympReport,
) -> BsympStatus {
    run_with(s, opts, out, runner::verify_fields)
}

/// # Safety
/// `r` must come from this library (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bsymp_report_free(r: *mut BsympReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsymp_report_passed(r: *const BsympReport, out: *mut bool) -> BsympStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(r, "report")?.0.passed;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsymp_report_task_count(r: *const BsympReport, out: *mut usize) -> BsympStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(r, "report")?.0.tasks.len();
        Ok(())
    })
}

/// Value of residual `name` of task `task`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bsymp_report_residual(
    r: *const BsympReport,
    task: *const c_char,
    name: *const c_char,
    out: *mut f64,
) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let r = ref_arg(r, "report")?;
        let (task, name) = (str_arg(task, "task")?, str_arg(name, "name")?);
        let t = r.0.task(task).ok_or((BsympStatus::DomainError, format!("no task `{task}`")))?;
        let res = t.residual(name).ok_or((BsympStatus::DomainError, format!("no residual `{name}` in `{task}`")))?;
        *out = res.value;
        Ok(())
    })
}

/// The report as pretty JSON; free with [`bsymp_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bsymp_report_to_json(r: *const BsympReport, out: *mut *mut c_char) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = c_string(ref_arg(r, "report")?.0.to_json());
        Ok(())
    })
}

/// Parses the prefix expression `text` (e.g. `"(+ (* x x) (sin y))"`) in the comma-separated variables `vars` (e.g. `"x,y"`).
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bsymp_expr_parse(
    text: *const c_char,
    vars: *const c_char,
    out: *mut *mut BsympExpr,
) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let names: Vec<String> =
            str_arg(vars, "vars")?.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        *out = boxed(BsympExpr(Expr::parse(text, &names).map_err(lib)?));
        Ok(())
    })
}

/// # Safety
/// `x` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bsymp_expr_eval(e: *const BsympExpr, x: *const f64, n: usize, out: *mut f64) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let e = ref_arg(e, "expr")?;
        let x = if n == 0 { &[][..] } else { std::slice::from_raw_parts(ref_arg(x, "x")?, n) };
        *out = e.0.try_eval(x).map_err(lib)?;
        Ok(())
    })
}

/// Partial derivative in variable `var`, as a new handle.
///
/// # Safety
/// `e` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bsymp_expr_diff(e: *const BsympExpr, var: usize, out: *mut *mut BsympExpr) -> BsympStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        *out = boxed(BsympExpr(ref_arg(e, "expr")?.0.diff(var)));
        Ok(())
    })
}

/// # Safety
/// `e` must come from this library (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bsymp_expr_free(e: *mut BsympExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Applies the model Dehn twist on `T*S^(n-1) ⊂ ℝⁿ × ℝⁿ` with support radius
/// `profile_c` (or its inverse) to `x = (u, v)`, writing `2n` doubles to `y`.
///
/// # Safety
/// `x` and `y` must each hold `2n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bsymp_dehn_twist_apply(
    n: usize,
    profile_c: f64,
    inverse: bool,
    x: *const f64,
    y: *mut f64,
) -> BsympStatus {
    guard(|| {
        if n == 0 {
            return Err((BsympStatus::DomainError, "n must be positive".into()));
        }
        let x = std::slice::from_raw_parts(ref_arg(x, "x")?, 2 * n);
        let y = std::slice::from_raw_parts_mut(out_arg(y, "y")?, 2 * n);
        let profile = TwistProfile::standard(profile_c).map_err(lib)?;
        let mut psi = model_dehn_twist(&profile, n);
        if inverse {
            psi = psi.inverse();
        }
        y.copy_from_slice(&psi.apply(x));
        Ok(())
    })
}
