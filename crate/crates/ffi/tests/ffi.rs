use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use netcorrupt_ffi::*;

fn cfg_path(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = nc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn analytic_run_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(nc_config_load(cfg_path("chain.cfg").as_ptr(), &mut cfg), NcStatus::Ok);
        let mut rep = ptr::null_mut();
        assert_eq!(nc_run(cfg, NcMode::Analytic, &mut rep), NcStatus::Ok);
        assert_eq!(nc_report_exit_code(rep), 0);
        assert_eq!(nc_report_node_count(rep), 5);
        assert_eq!(nc_report_violation_count(rep), 0);

        let mut len = 0;
        assert_eq!(nc_report_edges(rep, ptr::null_mut(), 0, &mut len), NcStatus::Ok);
        assert_eq!(len, 7);
        let mut small = [0usize; 4];
        assert_eq!(nc_report_edges(rep, small.as_mut_ptr(), 4, &mut len), NcStatus::BufferTooSmall);
        let mut buf = vec![0usize; 2 * len];
        assert_eq!(nc_report_edges(rep, buf.as_mut_ptr(), buf.len(), &mut len), NcStatus::Ok);
        assert!(buf.chunks(2).all(|e| e[0] < e[1] && e[1] < 5));
        assert!(buf.chunks(2).any(|e| e == [0, 3]));

        let js = nc_report_json(rep);
        assert!(!js.is_null());
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(js).to_str().unwrap()).unwrap();
        assert_eq!(v["mode"], "analytic");
        nc_string_free(js);

        let dir = std::env::temp_dir().join(format!("nc-ffi-{}", std::process::id()));
        let d = CString::new(dir.to_str().unwrap()).unwrap();
        assert_eq!(nc_report_write(rep, d.as_ptr()), NcStatus::Ok);
        assert!(dir.join("report.json").is_file());
        std::fs::remove_dir_all(&dir).unwrap();

        nc_report_free(rep);
        nc_config_free(cfg);
    }
}

#[test]
fn config_from_text_and_overrides() {
    let text = CString::new(std::fs::read_to_string(cfg_path("mrf_chain.cfg").to_str().unwrap()).unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(nc_config_from_toml(text.as_ptr(), &mut cfg), NcStatus::Ok);
        assert_eq!(nc_config_set_seed(cfg, 99), NcStatus::Ok);
        assert_eq!(nc_config_set_trials(cfg, 0), NcStatus::InvalidArgument);
        let mut rep = ptr::null_mut();
        assert_eq!(nc_run(cfg, NcMode::Mrf, &mut rep), NcStatus::Ok);
        assert_eq!(nc_report_exit_code(rep), 0);
        nc_report_free(rep);
        nc_config_free(cfg);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let missing = CString::new("/nonexistent/x.cfg").unwrap();
        assert_ne!(nc_config_load(missing.as_ptr(), &mut cfg), NcStatus::Ok);
        assert!(cfg.is_null());
        assert!(!last_error().is_empty());

        let bad = CString::new("seed = 1\nunknown = 3\n").unwrap();
        assert_eq!(nc_config_from_toml(bad.as_ptr(), &mut cfg), NcStatus::Config);
        assert!(last_error().contains("unknown"));

        assert_eq!(nc_config_load(ptr::null(), &mut cfg), NcStatus::NullPointer);
        let mut rep = ptr::null_mut();
        assert_eq!(nc_run(ptr::null(), NcMode::Run, &mut rep), NcStatus::NullPointer);
        assert_eq!(nc_report_exit_code(ptr::null()), -1);
        assert!(nc_report_json(ptr::null()).is_null());
        nc_config_free(ptr::null_mut());
        nc_report_free(ptr::null_mut());
        nc_string_free(ptr::null_mut());
    }
}

#[test]
fn perturbed_graph_of_a_chain() {
    // 0-1-2-3-4 with nodes 1 and 2 corrupted
    let edges = [0usize, 1, 1, 2, 2, 3, 3, 4];
    let z = [1usize, 2];
    let mut out = [0usize; 14];
    let mut len = 0;
    let s = unsafe { nc_perturbed_graph(5, edges.as_ptr(), 4, z.as_ptr(), 2, out.as_mut_ptr(), out.len(), &mut len) };
    assert_eq!(s, NcStatus::Ok);
    assert_eq!(len, 7);
    let got: Vec<[usize; 2]> = out.chunks(2).map(|c| [c[0], c[1]]).collect();
    for e in [[0, 2], [0, 3], [1, 3]] {
        assert!(got.contains(&e));
    }
    let bad = [0usize, 9];
    let s = unsafe { nc_perturbed_graph(5, bad.as_ptr(), 1, ptr::null(), 0, out.as_mut_ptr(), out.len(), &mut len) };
    assert_eq!(s, NcStatus::InvalidArgument);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(nc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/netcorrupt.h")).unwrap();
    for f in ["nc_config_load", "nc_run", "nc_report_edges", "nc_last_error", "nc_perturbed_graph"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c", "-"])
        .arg(format!("-I{}", dir.join("include").display()))
        .stdin(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut c| {
            use std::io::Write;
            c.stdin.take().unwrap().write_all(b"#include \"netcorrupt.h\"\nint main(void) { return NC_STATUS_OK; }\n")?;
            c.wait_with_output()
        })
    else {
        eprintln!("no C compiler; header syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
