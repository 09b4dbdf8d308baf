//! C ABI for the cellsim simulator.
//!
//! Handles are opaque; every function returns a [`SimStatus`] (or a plain
//! value for infallible accessors). On failure a thread-local message is
//! available through [`sim_last_error_message`] until the next failing call
//! on the same thread. Strings returned through row accessors are owned by
//! the result handle and stay valid until it is freed.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};

use cellsim::simrunner::config::{apply_overrides, parse_config_str};
use cellsim::simrunner::{
    build_pool, emit_results, run_experiment, ExperimentConfig, ExperimentKind, ResultTable,
};
use cellsim::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimStatus {
    Ok = 0,
    NullArgument = 1,
    ConfigError = 2,
    IoError = 3,
    InvalidArgument = 4,
    RuntimeError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> SimStatus {
    match err {
        Error::Config(_) => SimStatus::ConfigError,
        Error::Io { .. } => SimStatus::IoError,
        Error::InvalidParameter(_) => SimStatus::InvalidArgument,
        _ => SimStatus::RuntimeError,
    }
}

fn fail(err: &Error) -> SimStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Last error message of the current thread (empty string when none).
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn sim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque experiment configuration handle.
pub struct SimConfig {
    inner: ExperimentConfig,
    overrides: Vec<(String, String)>,
}

impl SimConfig {
    fn resolved(&self) -> Result<ExperimentConfig, Error> {
        apply_overrides(&self.inner, &self.overrides)
    }
}

/// Opaque result handle: the aggregated table plus C-string storage for row
/// accessors.
pub struct SimResult {
    kind: ExperimentKind,
    table: ResultTable,
    strings: Vec<(CString, CString)>,
    csv: CString,
}

/// One row of a result table, exposed over the C ABI. String pointers are
/// owned by the result handle.
#[repr(C)]
pub struct SimResultRow {
    pub sweep_var: *const c_char,
    pub sweep_value: f64,
    pub metric: *const c_char,
    pub mean: f64,
    /// Standard error of the mean (named to avoid the C `stderr` macro).
    pub std_error: f64,
    pub n: u64,
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, SimStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} must not be null"));
        return Err(SimStatus::NullArgument);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(&format!("{what} is not valid UTF-8"));
            Err(SimStatus::InvalidArgument)
        }
    }
}

/// Creates a config with the built-in defaults of the named experiment
/// (`mu-gain`, `das`, `femto`, `cfo`, `pilot-power`).
///
/// # Safety
/// `experiment` must be a valid NUL-terminated string and `out` a valid
/// pointer; on success `*out` owns the handle and must be released with
/// [`sim_config_free`].
#[no_mangle]
pub unsafe extern "C" fn sim_config_default(
    experiment: *const c_char,
    out: *mut *mut SimConfig,
) -> SimStatus {
    if out.is_null() {
        set_error("out must not be null");
        return SimStatus::NullArgument;
    }
    let name = match unsafe { cstr_arg(experiment, "experiment") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    match ExperimentKind::parse(name) {
        Ok(kind) => {
            let cfg = ExperimentConfig::default_for(kind);
            unsafe {
                *out = Box::into_raw(Box::new(SimConfig {
                    inner: cfg,
                    overrides: Vec::new(),
                }));
            }
            SimStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// Parses a full TOML config (strict: unknown keys are rejected).
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer;
/// on success `*out` must be released with [`sim_config_free`].
#[no_mangle]
pub unsafe extern "C" fn sim_config_parse(
    text: *const c_char,
    out: *mut *mut SimConfig,
) -> SimStatus {
    if out.is_null() {
        set_error("out must not be null");
        return SimStatus::NullArgument;
    }
    let text = match unsafe { cstr_arg(text, "config text") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    match parse_config_str(text, &[]) {
        Ok(cfg) => {
            unsafe {
                *out = Box::into_raw(Box::new(SimConfig {
                    inner: cfg,
                    overrides: Vec::new(),
                }));
            }
            SimStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// Records a dotted-path override, e.g. key `propagation.noise_dbm`,
/// value `-100`. Overrides are validated when the simulation runs.
///
/// # Safety
/// All pointers must be valid; `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sim_config_override(
    config: *mut SimConfig,
    key: *const c_char,
    value: *const c_char,
) -> SimStatus {
    if config.is_null() {
        set_error("config must not be null");
        return SimStatus::NullArgument;
    }
    let key = match unsafe { cstr_arg(key, "key") } {
        Ok(s) => s.to_string(),
        Err(status) => return status,
    };
    let value = match unsafe { cstr_arg(value, "value") } {
        Ok(s) => s.to_string(),
        Err(status) => return status,
    };
    unsafe { &mut *config }.overrides.push((key, value));
    SimStatus::Ok
}

/// Overrides the Monte-Carlo seed.
///
/// # Safety
/// `config` must be a valid handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sim_config_set_seed(config: *mut SimConfig, seed: u64) -> SimStatus {
    if config.is_null() {
        set_error("config must not be null");
        return SimStatus::NullArgument;
    }
    unsafe { &mut *config }.inner.seed = seed;
    SimStatus::Ok
}

/// Overrides the number of Monte-Carlo drops.
///
/// # Safety
/// `config` must be a valid handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sim_config_set_drops(config: *mut SimConfig, drops: size_t) -> SimStatus {
    if config.is_null() {
        set_error("config must not be null");
        return SimStatus::NullArgument;
    }
    unsafe { &mut *config }.inner.n_drops = drops;
    SimStatus::Ok
}

/// Runs the configured experiment. `n_threads` caps the worker count
/// (0 uses the default); results do not depend on it.
///
/// # Safety
/// `config` must be a valid handle and `out` a valid pointer; on success
/// `*out` must be released with [`sim_result_free`].
#[no_mangle]
pub unsafe extern "C" fn sim_run(
    config: *const SimConfig,
    n_threads: size_t,
    out: *mut *mut SimResult,
) -> SimStatus {
    if config.is_null() || out.is_null() {
        set_error("config and out must not be null");
        return SimStatus::NullArgument;
    }
    let handle = unsafe { &*config };
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<SimResult, Error> {
        let cfg = handle.resolved()?;
        let pool = build_pool(if n_threads == 0 { None } else { Some(n_threads) });
        let table = run_experiment(&cfg, &pool)?;
        let strings = table
            .rows
            .iter()
            .map(|r| {
                (
                    CString::new(r.sweep_var.as_str()).unwrap_or_default(),
                    CString::new(r.metric.as_str()).unwrap_or_default(),
                )
            })
            .collect();
        let csv = CString::new(table.to_csv_string()).unwrap_or_default();
        Ok(SimResult {
            kind: cfg.experiment,
            table,
            strings,
            csv,
        })
    }));
    match result {
        Ok(Ok(res)) => {
            unsafe {
                *out = Box::into_raw(Box::new(res));
            }
            SimStatus::Ok
        }
        Ok(Err(err)) => fail(&err),
        Err(_) => {
            set_error("internal panic during simulation");
            SimStatus::RuntimeError
        }
    }
}

/// Number of rows in the result table.
///
/// # Safety
/// `result` must be a valid handle (null returns 0).
#[no_mangle]
pub unsafe extern "C" fn sim_result_row_count(result: *const SimResult) -> size_t {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.table.rows.len()
}

/// Copies row `index` into `out`. String pointers stay owned by the handle.
///
/// # Safety
/// `result` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sim_result_row(
    result: *const SimResult,
    index: size_t,
    out: *mut SimResultRow,
) -> SimStatus {
    if result.is_null() || out.is_null() {
        set_error("result and out must not be null");
        return SimStatus::NullArgument;
    }
    let res = unsafe { &*result };
    if index >= res.table.rows.len() {
        set_error(&format!(
            "row index {index} out of range ({} rows)",
            res.table.rows.len()
        ));
        return SimStatus::InvalidArgument;
    }
    let row = &res.table.rows[index];
    let (var, metric) = &res.strings[index];
    unsafe {
        *out = SimResultRow {
            sweep_var: var.as_ptr(),
            sweep_value: row.sweep_value,
            metric: metric.as_ptr(),
            mean: row.mean,
            std_error: row.stderr,
            n: row.n as u64,
        };
    }
    SimStatus::Ok
}

/// Whole table as CSV text, owned by the handle.
///
/// # Safety
/// `result` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn sim_result_csv(result: *const SimResult) -> *const c_char {
    if result.is_null() {
        return ptr::null();
    }
    unsafe { &*result }.csv.as_ptr()
}

/// Writes the CSV and the gnuplot script into `out_dir` (created if needed).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sim_result_write(
    result: *const SimResult,
    out_dir: *const c_char,
) -> SimStatus {
    if result.is_null() {
        set_error("result must not be null");
        return SimStatus::NullArgument;
    }
    let dir = match unsafe { cstr_arg(out_dir, "out_dir") } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let res = unsafe { &*result };
    match emit_results(&res.table, res.kind, std::path::Path::new(dir)) {
        Ok(_) => SimStatus::Ok,
        Err(err) => fail(&err),
    }
}

/// Releases a config handle (null is a no-op).
///
/// # Safety
/// `config` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sim_config_free(config: *mut SimConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Releases a result handle (null is a no-op).
///
/// # Safety
/// `result` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sim_result_free(result: *mut SimResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}
