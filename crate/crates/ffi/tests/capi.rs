use std::f64::consts::PI;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use kapitza_ffi::*;

const AVERAGED: i32 = KwSystem::Averaged as i32;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { kw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn problem(mu: f64, a: f64) -> *mut KwProblem {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { kw_problem_new(mu, a, &mut p) }, KwStatus::Ok);
    assert!(!p.is_null());
    p
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(kw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn upright_equilibrium_round_trip() {
    let p = problem(1.0, 2.0);
    let mut orbit = ptr::null_mut();
    assert_eq!(unsafe { kw_orbit_refine(p, AVERAGED, 3.1, 0.05, &mut orbit) }, KwStatus::Ok);
    let mut info = KwOrbitInfo::default();
    assert_eq!(unsafe { kw_orbit_info(orbit, &mut info) }, KwStatus::Ok);
    assert!((info.phi0 - PI).abs() < 1e-8 && info.p0.abs() < 1e-8);
    assert_eq!(info.stability, KwStability::Stable as i32);
    let det = info.monodromy[0] * info.monodromy[3] - info.monodromy[1] * info.monodromy[2];
    assert!((det - (-2.0 * PI).exp()).abs() < 1e-8);

    let mut r = f64::NAN;
    assert_eq!(unsafe { kw_residual(p, AVERAGED, info.phi0, info.p0, 0.0, &mut r) }, KwStatus::Ok);
    assert!(r < 1e-8);
    unsafe {
        kw_orbit_free(orbit);
        kw_problem_free(p);
    }
}

#[test]
fn errors_are_reported() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { kw_problem_new(-1.0, 2.0, &mut p) }, KwStatus::InvalidArgument);
    assert!(p.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { kw_problem_set_harmonic(ptr::null_mut(), 0.1, 0.0) }, KwStatus::NullPointer);
    assert!(last_error().contains("null"));

    let p = problem(1.0, 2.0);
    let mut r = 0.0;
    assert_eq!(unsafe { kw_residual(p, 7, PI, 0.0, 0.0, &mut r) }, KwStatus::InvalidArgument);
    assert_eq!(unsafe { kw_problem_set_k(p, 0) }, KwStatus::InvalidArgument);
    let bad = CString::new("{\"type\":\"nope\"}").unwrap();
    assert_eq!(unsafe { kw_problem_set_forcing_json(p, bad.as_ptr()) }, KwStatus::InvalidArgument);

    // Success clears the message.
    assert_eq!(unsafe { kw_residual(p, AVERAGED, PI, 0.0, 0.0, &mut r) }, KwStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { kw_problem_free(p) };
}

#[test]
fn truncated_error_buffer() {
    assert_eq!(unsafe { kw_problem_set_k(ptr::null_mut(), 1) }, KwStatus::NullPointer);
    let mut buf = [1 as c_char; 4];
    let n = unsafe { kw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 3);
    assert_eq!(buf[3], 0);
}

#[test]
fn forcing_setters() {
    let p = problem(1.0, 2.0);
    let mut v = 0.0;
    unsafe {
        assert_eq!(kw_problem_set_harmonic(p, 0.5, 0.0), KwStatus::Ok);
        assert_eq!(kw_problem_forcing_value(p, 0.0, &mut v), KwStatus::Ok);
        assert!((v - 0.5).abs() < 1e-15);

        let c = [0.1, 0.0, 0.2];
        assert_eq!(kw_problem_set_fourier(p, c.as_ptr(), c.len(), ptr::null(), 0), KwStatus::Ok);
        assert_eq!(kw_problem_forcing_value(p, PI, &mut v), KwStatus::Ok);
        assert!((v - 0.3).abs() < 1e-12);

        let json = CString::new("{\"type\":\"harmonic\",\"amplitude\":0.25}").unwrap();
        assert_eq!(kw_problem_set_forcing_json(p, json.as_ptr()), KwStatus::Ok);
        assert_eq!(kw_problem_forcing_value(p, 0.0, &mut v), KwStatus::Ok);
        assert!((v - 0.25).abs() < 1e-15);
        kw_problem_free(p);
    }
}

#[test]
fn flow_keeps_equilibrium() {
    let p = problem(1.0, 2.0);
    let (mut phi, mut q) = (0.0, 0.0);
    assert_eq!(unsafe { kw_flow(p, AVERAGED, PI, 0.0, 0.0, 2.0 * PI, 1e-10, &mut phi, &mut q) }, KwStatus::Ok);
    assert!((phi - PI).abs() < 1e-12 && q.abs() < 1e-12);

    unsafe { kw_problem_set_k(p, 50) };
    let original = KwSystem::Original as i32;
    assert_eq!(unsafe { kw_flow(p, original, PI, 0.0, 0.0, 2.0 * PI, 1e-10, &mut phi, &mut q) }, KwStatus::Ok);
    assert!((phi - PI).abs() < 1e-9);
    unsafe { kw_problem_free(p) };
}

#[test]
fn scan_and_index() {
    let p = problem(0.1, 1.424);
    unsafe { kw_problem_set_harmonic(p, 0.1, 0.0) };
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { kw_orbits_scan(p, AVERAGED, 64, &mut set) }, KwStatus::Ok);
    let n = unsafe { kw_orbit_set_len(set) };
    assert_eq!(n, 3);
    let mut stable = 0;
    for i in 0..n {
        let mut info = KwOrbitInfo::default();
        assert_eq!(unsafe { kw_orbit_set_get(set, i, &mut info) }, KwStatus::Ok);
        if info.stability == KwStability::Stable as i32 {
            stable += 1;
        }
    }
    assert_eq!(stable, 1);
    let mut info = KwOrbitInfo::default();
    assert_eq!(unsafe { kw_orbit_set_get(set, n, &mut info) }, KwStatus::OutOfRange);
    assert_eq!(unsafe { kw_orbit_set_len(ptr::null()) }, 0);
    unsafe {
        kw_orbit_set_free(set);
        kw_problem_free(p);
    }
}

#[test]
fn critical_amplitude_unforced() {
    let mut a = 0.0;
    assert_eq!(unsafe { kw_critical_a(1.0, 0.0, 1.3, 1.5, PI, 0.0, &mut a) }, KwStatus::Ok);
    assert!((a - 2f64.sqrt()).abs() < 1e-3);
    assert_eq!(unsafe { kw_critical_a(1.0, 0.0, 1.5, 1.3, PI, 0.0, &mut a) }, KwStatus::BracketOrContinuation);
}

#[test]
fn torres_through_c() {
    let p = problem(1.0, 1.5);
    unsafe { kw_problem_set_harmonic(p, 0.01, 0.0) };
    let (mut applies, mut alpha, mut beta) = (false, 0.0, 0.0);
    assert_eq!(unsafe { kw_torres_check(p, f64::INFINITY, &mut applies, &mut alpha, &mut beta) }, KwStatus::Ok);
    assert!(applies);
    assert!(beta < PI && PI < alpha);
    unsafe { kw_problem_free(p) };

    let p = problem(1.0, 1.0);
    assert_eq!(unsafe { kw_torres_check(p, f64::INFINITY, &mut applies, &mut alpha, &mut beta) }, KwStatus::Ok);
    assert!(!applies && alpha.is_nan());
    unsafe { kw_problem_free(p) };
}
