use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use faked_states_ffi::*;

fn last_error() -> String {
    let p = fs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(toml: &str) -> *mut FsScenario {
    let text = CString::new(toml).unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { fs_scenario_from_toml(text.as_ptr(), &mut s) };
    assert_eq!(st, FsStatus::Ok, "{}", last_error());
    s
}

#[test]
fn closed_forms() {
    let mut q = 0.0;
    unsafe {
        assert_eq!(fs_bb84_symmetric_qber(1.0 / 15.0, &mut q), FsStatus::Ok);
        assert!((q - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(fs_sarg04_symmetric_qber(1.0 / 30.0, &mut q), FsStatus::Ok);
        assert!((q - 4.0 / 37.0).abs() < 1e-15);
        assert_eq!(fs_bb84_qber(1.0, 0.0, 0.0, 1.0, &mut q), FsStatus::Ok);
        assert_eq!(q, 0.0);
        assert_eq!(fs_sarg04_qber(0.0, 0.0, 0.0, 0.0, &mut q), FsStatus::Undefined);
        assert_eq!(fs_bb84_qber(2.0, 0.0, 0.0, 1.0, &mut q), FsStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(fs_bb84_symmetric_qber(0.1, ptr::null_mut()), FsStatus::NullPointer);
    }
}

#[test]
fn ekert_weights() {
    let mut w = [0.0; 3];
    let st = unsafe { fs_ekert_solve_equal_terms(std::f64::consts::FRAC_1_SQRT_2, w.as_mut_ptr()) };
    assert_eq!(st, FsStatus::Ok);
    let r = [w[0], w[1], w[2]].map(|x| (x * 1000.0).round() / 1000.0);
    assert_eq!(r, [0.116, 0.653, 0.231]);
    let mut s = 0.0;
    unsafe {
        assert_eq!(fs_ekert_s_of_beta(0.0, &mut s), FsStatus::Ok);
        assert_eq!(s, -2.0);
        assert_eq!(fs_ekert_s_of_beta(1.0, &mut s), FsStatus::InvalidArgument);
    }
}

#[test]
fn run_scenario_and_rows() {
    let s = scenario("[scenario]\nprotocol = \"bb84\"\nrounds = 20000\n[sweep]\nparam = \"eta\"\nfrom = 0\nto = 0.1\nsteps = 3\n");
    unsafe {
        assert_eq!(fs_scenario_set_seed(s, 42), FsStatus::Ok);
        assert_eq!(fs_scenario_set_workers(s, 0), FsStatus::InvalidArgument);
        let mut o = ptr::null_mut();
        assert_eq!(fs_scenario_run(s, &mut o), FsStatus::Ok);
        assert_eq!(fs_outcome_len(o), 3);
        let mut row = std::mem::zeroed::<FsRow>();
        assert_eq!(fs_outcome_row(o, 0, &mut row), FsStatus::Ok);
        assert_eq!(row.errors, 0);
        assert_eq!(row.rounds, 20000);
        assert!(row.chsh.is_nan());
        assert_eq!(fs_outcome_row(o, 3, &mut row), FsStatus::InvalidArgument);
        let mut csv = ptr::null_mut();
        assert_eq!(fs_outcome_csv(o, &mut csv), FsStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        fs_string_free(csv);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("protocol,mode,"));
        fs_outcome_free(o);
        fs_scenario_free(s);
        fs_scenario_free(ptr::null_mut());
        assert_eq!(fs_outcome_len(ptr::null()), 0);
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let csv = |workers: usize| unsafe {
        let s = scenario("[scenario]\nprotocol = \"sarg04\"\nrounds = 30000\nseed = 3\n[detectors]\neta = 0.05\n");
        fs_scenario_set_workers(s, workers);
        let mut o = ptr::null_mut();
        assert_eq!(fs_scenario_run(s, &mut o), FsStatus::Ok);
        let mut c = ptr::null_mut();
        fs_outcome_csv(o, &mut c);
        let text = CStr::from_ptr(c).to_str().unwrap().to_owned();
        fs_string_free(c);
        fs_outcome_free(o);
        fs_scenario_free(s);
        text
    };
    assert_eq!(csv(1), csv(5));
}

#[test]
fn config_errors_name_the_key() {
    let text = CString::new("[scenario]\nprotocol = \"bb84\"\n[detectors]\nzero = \"wave:1\"\none = \"constant:1\"\n").unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { fs_scenario_from_toml(text.as_ptr(), &mut s) };
    assert_eq!(st, FsStatus::Config);
    assert!(s.is_null());
    assert!(last_error().contains("detectors.zero"));
    let bad = [0xffu8, 0];
    let st = unsafe { fs_scenario_from_toml(bad.as_ptr().cast(), &mut s) };
    assert_eq!(st, FsStatus::Utf8);
    assert_eq!(unsafe { fs_scenario_from_toml(ptr::null(), &mut s) }, FsStatus::NullPointer);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(fs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Builds a small C program against the generated header and the static
/// library.
#[test]
fn c_program_links_against_header() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include/faked_states.h");
    assert!(header.exists(), "header not generated");
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libfaked_states_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "faked_states.h"
int main(void) {
    double q = 0.0;
    if (fs_bb84_symmetric_qber(1.0 / 15.0, &q) != FS_STATUS_OK) return 1;
    if (fabs(q - 1.0 / 9.0) > 1e-15) return 2;
    FsScenario *s = NULL;
    if (fs_scenario_from_toml("[scenario]\nprotocol = \"bb84\"\nrounds = 5000\n", &s) != FS_STATUS_OK) return 3;
    FsOutcome *o = NULL;
    if (fs_scenario_run(s, &o) != FS_STATUS_OK) return 4;
    FsRow row;
    if (fs_outcome_row(o, 0, &row) != FS_STATUS_OK || row.errors != 0) return 5;
    fs_outcome_free(o);
    fs_scenario_free(s);
    if (fs_scenario_from_toml("nonsense", &s) != FS_STATUS_CONFIG || fs_last_error() == NULL) return 6;
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler not found");
    assert!(status.success(), "compiling the C smoke test failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke program exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
