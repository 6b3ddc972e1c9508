//! C interface to `cpg-core`.
//!
//! Every function returns a [`CpgStatus`]; on failure a description is
//! available from [`cpg_last_error`] on the same thread. Objects handed out
//! through out-pointers are owned by the caller and released with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cpg_core::harness::presets::preset;
use cpg_core::harness::{run_experiment_in, ExperimentConfig};
use cpg_core::optimizer::{run_cpg, RunRecord};
use cpg_core::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidConfig = 4,
    IoError = 5,
    OutOfRange = 6,
    RunFailed = 7,
    Panic = 8,
}

/// A validated experiment configuration.
pub struct CpgConfig {
    inner: ExperimentConfig,
}

/// The record of one training run.
pub struct CpgRunRecord {
    inner: RunRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> CpgStatus {
    match e {
        Error::Parse(_) => CpgStatus::ParseError,
        Error::Io(_) => CpgStatus::IoError,
        Error::InvalidConfig(_) | Error::InvalidSpec(_) | Error::ModeMismatch { .. } => {
            CpgStatus::InvalidConfig
        }
        _ => CpgStatus::RunFailed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), CpgStatus>) -> CpgStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CpgStatus::Panic
        }
    }
}

fn fail(e: Error) -> CpgStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> CpgStatus {
    set_error(format!("null pointer: {what}"));
    CpgStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CpgStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        CpgStatus::InvalidUtf8
    })
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, CpgStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, CpgStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn cpg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_config_from_toml(toml: *const c_char, out: *mut *mut CpgConfig) -> CpgStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let out = out_arg(out, "out")?;
        let inner = ExperimentConfig::from_toml_str(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(CpgConfig { inner }));
        Ok(())
    })
}

/// Loads a shipped preset by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_config_preset(name: *const c_char, out: *mut *mut CpgConfig) -> CpgStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let inner = preset(name).map_err(fail)?;
        *out = Box::into_raw(Box::new(CpgConfig { inner }));
        Ok(())
    })
}

/// Overrides the iteration count and seed count, for quick runs.
///
/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cpg_config_set_budget(config: *mut CpgConfig, iterations: usize, num_seeds: usize) -> CpgStatus {
    guard(|| {
        let cfg = out_arg(config, "config")?;
        let mut next = cfg.inner.clone();
        next.algorithm.iterations = iterations;
        next.run.num_seeds = num_seeds;
        next.validate().map_err(fail)?;
        cfg.inner = next;
        Ok(())
    })
}

/// Number of sweep cells in the configuration.
///
/// # Safety
/// `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_config_num_cells(config: *const CpgConfig, out: *mut usize) -> CpgStatus {
    guard(|| {
        let cfg = ref_arg(config, "config")?;
        let out = out_arg(out, "out")?;
        *out = cfg.inner.cells().map_err(fail)?.len();
        Ok(())
    })
}

/// Releases a configuration. Passing null is a no-op.
///
/// # Safety
/// `config` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cpg_config_free(config: *mut CpgConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Trains sweep cell `cell` with the given run seed. A run that aborts on a
/// non-finite value still yields a record; check `cpg_record_completed`.
///
/// # Safety
/// `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_run(
    config: *const CpgConfig,
    cell: usize,
    seed: u64,
    out: *mut *mut CpgRunRecord,
) -> CpgStatus {
    guard(|| {
        let cfg = &ref_arg(config, "config")?.inner;
        let out = out_arg(out, "out")?;
        let cells = cfg.cells().map_err(fail)?;
        let Some(cell) = cells.get(cell) else {
            set_error(format!("cell {cell} out of range (have {})", cells.len()));
            return Err(CpgStatus::OutOfRange);
        };
        let env = cfg.build_environment(&cell.algorithm).map_err(fail)?;
        let inner = run_cpg(env.as_ref(), &cell.algorithm, seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(CpgRunRecord { inner }));
        Ok(())
    })
}

/// Runs the full experiment, writing records and the summary under
/// `output_dir`. `success` receives whether every run completed and every
/// check passed.
///
/// # Safety
/// `config` must be valid, `output_dir` NUL-terminated, `success` writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_run_experiment(
    config: *const CpgConfig,
    output_dir: *const c_char,
    success: *mut bool,
) -> CpgStatus {
    guard(|| {
        let cfg = &ref_arg(config, "config")?.inner;
        let dir = str_arg(output_dir, "output_dir")?;
        let success = out_arg(success, "success")?;
        let summary = run_experiment_in(cfg, Path::new(dir)).map_err(fail)?;
        *success = summary.success();
        Ok(())
    })
}

/// Releases a run record. Passing null is a no-op.
///
/// # Safety
/// `record` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn cpg_record_free(record: *mut CpgRunRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// Whether the run finished all iterations.
///
/// # Safety
/// `record` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_record_completed(record: *const CpgRunRecord, out: *mut bool) -> CpgStatus {
    guard(|| {
        let rec = ref_arg(record, "record")?;
        *out_arg(out, "out")? = rec.inner.completed();
        Ok(())
    })
}

/// Number of logged iterations and of constraints.
///
/// # Safety
/// `record` must be valid; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_record_shape(
    record: *const CpgRunRecord,
    iterations: *mut usize,
    constraints: *mut usize,
) -> CpgStatus {
    guard(|| {
        let rec = &ref_arg(record, "record")?.inner;
        *out_arg(iterations, "iterations")? = rec.rows.len();
        *out_arg(constraints, "constraints")? = rec.thresholds.len();
        Ok(())
    })
}

/// Estimated return, constraint costs and multipliers at one iteration.
/// `costs` and `lambda` must each hold as many values as there are
/// constraints.
///
/// # Safety
/// `record` must be valid; the out-pointers must be writable for the sizes
/// described above.
#[no_mangle]
pub unsafe extern "C" fn cpg_record_iteration(
    record: *const CpgRunRecord,
    iteration: usize,
    ret: *mut f64,
    costs: *mut f64,
    lambda: *mut f64,
) -> CpgStatus {
    guard(|| {
        let rec = &ref_arg(record, "record")?.inner;
        let Some(row) = rec.rows.get(iteration) else {
            set_error(format!("iteration {iteration} out of range (have {})", rec.rows.len()));
            return Err(CpgStatus::OutOfRange);
        };
        let u = rec.thresholds.len();
        *out_arg(ret, "ret")? = row.ret;
        if u > 0 {
            if costs.is_null() {
                return Err(null("costs"));
            }
            if lambda.is_null() {
                return Err(null("lambda"));
            }
            std::slice::from_raw_parts_mut(costs, u).copy_from_slice(&row.j[1..]);
            std::slice::from_raw_parts_mut(lambda, u).copy_from_slice(&row.lambda);
        }
        Ok(())
    })
}

/// Copies the final parameters into `buffer` (capacity `len`) and stores the
/// parameter count in `needed`. When `len` is too small nothing is copied
/// and `OutOfRange` is returned.
///
/// # Safety
/// `record` must be valid, `buffer` writable for `len` values (or null when
/// `len` is 0), `needed` writable.
#[no_mangle]
pub unsafe extern "C" fn cpg_record_final_params(
    record: *const CpgRunRecord,
    buffer: *mut f64,
    len: usize,
    needed: *mut usize,
) -> CpgStatus {
    guard(|| {
        let params = &ref_arg(record, "record")?.inner.final_params;
        *out_arg(needed, "needed")? = params.len();
        if len < params.len() {
            set_error(format!("buffer holds {len} values, need {}", params.len()));
            return Err(CpgStatus::OutOfRange);
        }
        if !params.is_empty() {
            if buffer.is_null() {
                return Err(null("buffer"));
            }
            std::slice::from_raw_parts_mut(buffer, params.len()).copy_from_slice(params);
        }
        Ok(())
    })
}
