//! C ABI over the experiment driver: parse a TOML config, run it (or a
//! built-in sweep), and read the error report back. Handles are opaque
//! boxes; every entry point guards against null, catches panics, and
//! reports failures through a per-thread error message plus a status code.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cemwave::experiment::{run_experiment, run_table, RunArtifacts, TableId};
use cemwave::{parse_config, Error, ExperimentConfig};

/// Outcome of a fallible call. Anything but `Ok` leaves a message readable
/// via `cw_last_error`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments were readable but invalid (bad config, unknown sweep, row
    /// out of range, non-UTF-8 text).
    InvalidArgument = 2,
    /// The solver failed while running.
    RuntimeError = 3,
    /// A panic was caught at the boundary; the handle states are still
    /// valid but the call did nothing.
    Panic = 4,
}

/// Parsed experiment configuration.
pub struct CwConfig {
    inner: ExperimentConfig,
}

/// A completed run: one row per experiment (built-in sweeps hold several).
pub struct CwRun {
    rows: Vec<RunArtifacts>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap());
}

fn status_of(err: &Error) -> CwStatus {
    match err {
        Error::Config(_) | Error::Problem(_) | Error::InvalidGrid(_) | Error::Mismatch(_) => {
            CwStatus::InvalidArgument
        }
        _ => CwStatus::RuntimeError,
    }
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("internal panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("internal panic: {s}")
    } else {
        "internal panic".into()
    }
}

fn guarded<F: FnOnce() -> CwStatus>(f: F) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            set_error(&panic_text(p));
            CwStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, CwStatus> {
    if p.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(Some(s)),
        Err(_) => {
            set_error("string argument is not valid UTF-8");
            Err(CwStatus::InvalidArgument)
        }
    }
}

unsafe fn req_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, CwStatus> {
    match opt_str(p)? {
        Some(s) => Ok(s),
        None => {
            set_error(&format!("{what} must not be null"));
            Err(CwStatus::NullArgument)
        }
    }
}

fn copy_out(text: &str, buf: *mut c_char, cap: usize) -> usize {
    let bytes = text.as_bytes();
    if !buf.is_null() && cap > 0 {
        let n = bytes.len().min(cap - 1);
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
    }
    bytes.len()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the current thread's last error message into `buf` (truncating to
/// `cap - 1` bytes plus a NUL) and return the full message length. Call
/// with a null `buf` to query the length alone.
///
/// # Safety
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cw_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(e.borrow().to_str().unwrap_or(""), buf, cap))
}

/// Parse a TOML experiment config. On success `*out` owns the config;
/// release it with `cw_config_free`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_config_parse(text: *const c_char, out: *mut *mut CwConfig) -> CwStatus {
    if out.is_null() {
        set_error("out must not be null");
        return CwStatus::NullArgument;
    }
    *out = std::ptr::null_mut();
    guarded(|| {
        let text = match req_str(text, "text") {
            Ok(s) => s,
            Err(st) => return st,
        };
        match parse_config(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(CwConfig { inner: cfg }));
                CwStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a config handle. Null is a no-op.
///
/// # Safety
/// `cfg` must be null or a pointer returned by `cw_config_parse` that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn cw_config_free(cfg: *mut CwConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

fn runs_to_handle(rows: Vec<RunArtifacts>, out: *mut *mut CwRun) -> CwStatus {
    unsafe { *out = Box::into_raw(Box::new(CwRun { rows })) };
    CwStatus::Ok
}

/// Run one experiment. `id` names the run in output files; `out_dir` is
/// optional (null = no files written). On success `*out` owns the result;
/// release it with `cw_run_free`.
///
/// # Safety
/// `cfg` must be a live config handle; `id` a NUL-terminated string;
/// `out_dir` null or NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_run_experiment(
    cfg: *const CwConfig,
    id: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut CwRun,
) -> CwStatus {
    if out.is_null() {
        set_error("out must not be null");
        return CwStatus::NullArgument;
    }
    *out = std::ptr::null_mut();
    guarded(|| {
        if cfg.is_null() {
            set_error("cfg must not be null");
            return CwStatus::NullArgument;
        }
        let id = match req_str(id, "id") {
            Ok(s) => s,
            Err(st) => return st,
        };
        let dir = match opt_str(out_dir) {
            Ok(d) => d.map(Path::new),
            Err(st) => return st,
        };
        match run_experiment(&(*cfg).inner, id, dir) {
            Ok(art) => runs_to_handle(vec![art], out),
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Run a built-in sweep (`table1` | `table2` | `table4` | `table5` |
/// `table6` | `table7`). A negative `seed` keeps the sweep's default
/// layout seed. On success `*out` owns one row per sweep cell.
///
/// # Safety
/// `table` must be a NUL-terminated string; `out_dir` null or
/// NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cw_run_table(
    table: *const c_char,
    out_dir: *const c_char,
    seed: i64,
    out: *mut *mut CwRun,
) -> CwStatus {
    if out.is_null() {
        set_error("out must not be null");
        return CwStatus::NullArgument;
    }
    *out = std::ptr::null_mut();
    guarded(|| {
        let name = match req_str(table, "table") {
            Ok(s) => s,
            Err(st) => return st,
        };
        let id = match name.parse::<TableId>() {
            Ok(t) => t,
            Err(e) => {
                set_error(&e.to_string());
                return CwStatus::InvalidArgument;
            }
        };
        let dir = match opt_str(out_dir) {
            Ok(d) => d.map(Path::new),
            Err(st) => return st,
        };
        let seed = (seed >= 0).then_some(seed as u64);
        match run_table(id, dir, seed) {
            Ok(rows) => runs_to_handle(rows, out),
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a run handle. Null is a no-op.
///
/// # Safety
/// `run` must be null or a pointer returned by a run call that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn cw_run_free(run: *mut CwRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of result rows in a run handle (0 for null).
///
/// # Safety
/// `run` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn cw_run_rows(run: *const CwRun) -> usize {
    if run.is_null() {
        0
    } else {
        (*run).rows.len()
    }
}

unsafe fn row_of<'a>(run: *const CwRun, row: usize) -> Result<&'a RunArtifacts, CwStatus> {
    if run.is_null() {
        set_error("run must not be null");
        return Err(CwStatus::NullArgument);
    }
    let rows = &(*run).rows;
    rows.get(row).ok_or_else(|| {
        set_error(&format!(
            "row {row} out of range (run holds {} rows)",
            rows.len()
        ));
        CwStatus::InvalidArgument
    })
}

unsafe fn put(out: *mut f64, v: f64) {
    if !out.is_null() {
        *out = v;
    }
}

/// Relative errors of one row. Output pointers may be null to skip fields.
///
/// # Safety
/// `run` must be a live run handle; each non-null output must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_run_errors(
    run: *const CwRun,
    row: usize,
    err_l2: *mut f64,
    err_h1: *mut f64,
    err_a: *mut f64,
) -> CwStatus {
    match row_of(run, row) {
        Ok(r) => {
            put(err_l2, r.report.err_l2);
            put(err_h1, r.report.err_h1);
            put(err_a, r.report.err_a);
            CwStatus::Ok
        }
        Err(st) => st,
    }
}

/// Convergence orders of one row against the previous sweep row; NaN where
/// undefined (first row, or error did not decrease).
///
/// # Safety
/// `run` must be a live run handle; each non-null output must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_run_orders(
    run: *const CwRun,
    row: usize,
    order_l2: *mut f64,
    order_h1: *mut f64,
) -> CwStatus {
    match row_of(run, row) {
        Ok(r) => {
            put(order_l2, r.order_l2.unwrap_or(f64::NAN));
            put(order_h1, r.order_h1.unwrap_or(f64::NAN));
            CwStatus::Ok
        }
        Err(st) => st,
    }
}

/// Resolved discretization parameters of one row.
///
/// # Safety
/// `run` must be a live run handle; each non-null output must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_run_params(
    run: *const CwRun,
    row: usize,
    eps: *mut f64,
    h_coarse: *mut f64,
    h_fine: *mut f64,
    dt: *mut f64,
) -> CwStatus {
    match row_of(run, row) {
        Ok(r) => {
            put(eps, r.report.eps);
            put(h_coarse, r.report.h_coarse);
            put(h_fine, r.report.h_fine);
            put(dt, r.report.dt);
            CwStatus::Ok
        }
        Err(st) => st,
    }
}

/// Wall-clock seconds spent on one row.
///
/// # Safety
/// `run` must be a live run handle; `seconds` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cw_run_wall_seconds(
    run: *const CwRun,
    row: usize,
    seconds: *mut f64,
) -> CwStatus {
    match row_of(run, row) {
        Ok(r) => {
            put(seconds, r.wall_seconds);
            CwStatus::Ok
        }
        Err(st) => st,
    }
}

/// Copy one row's experiment id into `buf` (truncating to `cap - 1` bytes
/// plus a NUL) and return the full id length; 0 when the row is invalid.
///
/// # Safety
/// `run` must be a live run handle; `buf` null or `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cw_run_id(
    run: *const CwRun,
    row: usize,
    buf: *mut c_char,
    cap: usize,
) -> usize {
    match row_of(run, row) {
        Ok(r) => copy_out(&r.plan.id, buf, cap),
        Err(_) => 0,
    }
}
