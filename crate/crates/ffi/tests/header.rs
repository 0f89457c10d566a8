//! Compiles and runs a C program against the generated header and the
//! static library. Needs a C compiler on PATH.

use std::path::PathBuf;
use std::process::Command;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// target/<profile>/ next to the running test binary (which lives in deps/).
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(manifest_dir().join("include/kapitza.h")).unwrap();
    for sym in [
        "KAPITZA_H",
        "typedef struct KwProblem KwProblem",
        "typedef struct KwOrbitInfo",
        "KW_STATUS_OK = 0",
        "kw_problem_new(",
        "kw_orbit_refine(",
        "kw_orbits_scan(",
        "kw_last_error_message(",
        "kw_torres_check(",
    ] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = profile_dir().join("libkapitza_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-I")
        .arg(manifest_dir().join("include"))
        .arg(manifest_dir().join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("cc not available");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
