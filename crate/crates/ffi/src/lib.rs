//! C ABI over the netcorrupt experiment pipeline.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free`. Every fallible call returns an `NcStatus`; on error
//! `nc_last_error` holds a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use netcorrupt::experiment::{run_analytic, run_experiment, run_mrf, ExperimentConfig, ExperimentError, ExperimentReport};
use netcorrupt::graphs::{perturbed_graph, NodeSet, UndirectedGraph};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    InvalidArgument = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcMode {
    Run = 0,
    Analytic = 1,
    Mrf = 2,
}

/// Parsed experiment configuration.
pub struct NcConfig(ExperimentConfig);

/// Result of one experiment run.
pub struct NcReport(ExperimentReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: NcStatus, msg: impl Into<String>) -> NcStatus {
    set_error(msg);
    status
}

fn status_of(e: &ExperimentError) -> NcStatus {
    match e {
        ExperimentError::Config(_) | ExperimentError::Graph(_) | ExperimentError::Json(_) => NcStatus::Config,
        ExperimentError::Io(_) => NcStatus::Io,
        _ => NcStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> NcStatus) -> NcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(NcStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, NcStatus> {
    if p.is_null() {
        return Err(fail(NcStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(NcStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nc_version() -> *const c_char {
    static V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_config_load(path: *const c_char, out: *mut *mut NcConfig) -> NcStatus {
    guard(|| {
        if out.is_null() {
            return fail(NcStatus::NullPointer, "null out pointer");
        }
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match ExperimentConfig::load(std::path::Path::new(path)) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(NcConfig(c)));
                NcStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `text` must be a NUL-terminated TOML document; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_config_from_toml(text: *const c_char, out: *mut *mut NcConfig) -> NcStatus {
    guard(|| {
        if out.is_null() {
            return fail(NcStatus::NullPointer, "null out pointer");
        }
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ExperimentConfig::from_toml(text).and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(NcConfig(c)));
                NcStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must come from `nc_config_load`/`nc_config_from_toml` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn nc_config_free(cfg: *mut NcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn nc_config_set_seed(cfg: *mut NcConfig, seed: u64) -> NcStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.0.seed = seed;
            NcStatus::Ok
        }
        None => fail(NcStatus::NullPointer, "null config"),
    }
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn nc_config_set_trials(cfg: *mut NcConfig, trials: usize) -> NcStatus {
    match cfg.as_mut() {
        Some(c) if trials > 0 => {
            c.0.simulation.trials = trials;
            NcStatus::Ok
        }
        Some(_) => fail(NcStatus::InvalidArgument, "trials must be positive"),
        None => fail(NcStatus::NullPointer, "null config"),
    }
}

/// Runs the pipeline selected by `mode`.
///
/// # Safety
/// `cfg` must be a live config handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_run(cfg: *const NcConfig, mode: NcMode, out: *mut *mut NcReport) -> NcStatus {
    guard(|| {
        let Some(c) = cfg.as_ref() else {
            return fail(NcStatus::NullPointer, "null config");
        };
        if out.is_null() {
            return fail(NcStatus::NullPointer, "null out pointer");
        }
        let r = match mode {
            NcMode::Run => run_experiment(&c.0),
            NcMode::Analytic => run_analytic(&c.0),
            NcMode::Mrf => run_mrf(&c.0),
        };
        match r {
            Ok(r) => {
                *out = Box::into_raw(Box::new(NcReport(r)));
                NcStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from `nc_run` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn nc_report_free(report: *mut NcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// 0 if the recovered graph lies inside the prediction, 2 otherwise, -1 on NULL.
///
/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nc_report_exit_code(report: *const NcReport) -> i32 {
    report.as_ref().map_or(-1, |r| r.0.exit_code())
}

/// Node count, or 0 on NULL.
///
/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nc_report_node_count(report: *const NcReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.labels.len())
}

/// Number of edges outside the perturbed graph.
///
/// # Safety
/// `report` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn nc_report_violation_count(report: *const NcReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.prediction.violations.len())
}

unsafe fn write_edges(g: &UndirectedGraph, buf: *mut usize, cap: usize, len: *mut usize) -> NcStatus {
    if len.is_null() {
        return fail(NcStatus::NullPointer, "null length pointer");
    }
    *len = g.edge_count();
    if buf.is_null() || cap < 2 * g.edge_count() {
        return if buf.is_null() && cap == 0 {
            NcStatus::Ok
        } else {
            fail(NcStatus::BufferTooSmall, format!("need room for {} indices", 2 * g.edge_count()))
        };
    }
    for (k, e) in g.edges().enumerate() {
        *buf.add(2 * k) = e.0;
        *buf.add(2 * k + 1) = e.1;
    }
    NcStatus::Ok
}

/// Recovered edges as 0-based index pairs `(i, j)`, `i < j`, flattened into
/// `buf`. `*len` receives the edge count; call with `buf = NULL, cap = 0`
/// to query it.
///
/// # Safety
/// `buf` must hold `cap` elements; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nc_report_edges(report: *const NcReport, buf: *mut usize, cap: usize, len: *mut usize) -> NcStatus {
    match report.as_ref() {
        Some(r) => write_edges(&r.0.recovered, buf, cap, len),
        None => fail(NcStatus::NullPointer, "null report"),
    }
}

/// Full report as JSON; release with `nc_string_free`. NULL on error.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn nc_report_json(report: *const NcReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        set_error("null report");
        return ptr::null_mut();
    };
    match r.0.to_json().map(|s| CString::new(s).expect("JSON has no NUL")) {
        Ok(s) => s.into_raw(),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Writes report.json, scores.csv and the DOT files into `dir`.
///
/// # Safety
/// `report` must be a live report handle; `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn nc_report_write(report: *const NcReport, dir: *const c_char) -> NcStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(NcStatus::NullPointer, "null report");
        };
        let dir = match str_arg(dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match r.0.write_outputs(std::path::Path::new(dir)) {
            Ok(()) => NcStatus::Ok,
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn nc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Perturbed graph of an undirected graph on `n` nodes (edges as flattened
/// index pairs) for corrupted nodes `z`. Output follows `nc_report_edges`.
///
/// # Safety
/// `edges` holds `2 * n_edges` elements, `z` holds `n_z`; `out` holds `cap`.
#[no_mangle]
pub unsafe extern "C" fn nc_perturbed_graph(
    n: usize,
    edges: *const usize,
    n_edges: usize,
    z: *const usize,
    n_z: usize,
    out: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> NcStatus {
    guard(|| {
        if (edges.is_null() && n_edges > 0) || (z.is_null() && n_z > 0) {
            return fail(NcStatus::NullPointer, "null input array");
        }
        let pairs = if n_edges > 0 { std::slice::from_raw_parts(edges, 2 * n_edges) } else { &[] };
        let zs = if n_z > 0 { std::slice::from_raw_parts(z, n_z) } else { &[] };
        let g = match UndirectedGraph::from_edges(n, pairs.chunks(2).map(|p| (p[0], p[1]))) {
            Ok(g) => g,
            Err(e) => return fail(NcStatus::InvalidArgument, e.to_string()),
        };
        let mut set = NodeSet::new();
        for &i in zs {
            set.insert(i);
        }
        match perturbed_graph(&g, &set) {
            Ok(p) => write_edges(&p, out, cap, out_len),
            Err(e) => fail(NcStatus::InvalidArgument, e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_per_thread() {
        assert_eq!(fail(NcStatus::Config, "here"), NcStatus::Config);
        let other = std::thread::spawn(|| nc_last_error().is_null()).join().unwrap();
        assert!(other);
        assert_eq!(unsafe { CStr::from_ptr(nc_last_error()) }.to_str().unwrap(), "here");
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), NcStatus::Panic);
    }

    #[test]
    fn interior_nul_is_sanitized() {
        set_error("a\0b");
        assert_eq!(unsafe { CStr::from_ptr(nc_last_error()) }.to_str().unwrap(), "a b");
    }
}
