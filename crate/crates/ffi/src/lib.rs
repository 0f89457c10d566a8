//! C interface to `kapitza-core`.
//!
//! Objects are opaque handles created by `*_new` / producer functions and
//! released with the matching `*_free`. Every fallible function returns a
//! [`KwStatus`]; on failure the message is kept per thread and can be read
//! with [`kw_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kapitza::analysis::{critical_a_bisect, ForcingFamily};
use kapitza::conditions::torres_check;
use kapitza::integrate::flow;
use kapitza::orbits::{newton_refine, residual_phi, seed_grid};
use kapitza::{Error, Field, Forcing, IntegratorConfig, Params, PeriodicOrbit, SearchBox, Stability, State};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    IntegrationFailed = 4,
    SingularJacobian = 5,
    NoConvergence = 6,
    LeftDomain = 7,
    FallingOrbit = 8,
    BracketOrContinuation = 9,
    OutOfRange = 10,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KwSystem {
    Averaged = 0,
    Original = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KwStability {
    Stable = 0,
    Unstable = 1,
    Marginal = 2,
}

/// Plain-data view of a periodic orbit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KwOrbitInfo {
    pub phi0: f64,
    pub p0: f64,
    pub residual: f64,
    /// Row-major 2×2 monodromy matrix.
    pub monodromy: [f64; 4],
    pub multiplier_re: [f64; 2],
    pub multiplier_im: [f64; 2],
    /// A `KwStability` value.
    pub stability: i32,
}

/// Parameters μ, a, ε and a forcing.
pub struct KwProblem {
    params: Params,
    forcing: Forcing,
}

pub struct KwOrbit(PeriodicOrbit);

pub struct KwOrbitSet(Vec<PeriodicOrbit>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(KwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) | Error::ForcingMismatch { .. } => KwStatus::InvalidArgument,
            Error::Domain(_) => KwStatus::Domain,
            Error::StepBudgetExceeded { .. } | Error::StepUnderflow { .. } | Error::NonFiniteState { .. } => {
                KwStatus::IntegrationFailed
            }
            Error::SingularJacobian { .. } => KwStatus::SingularJacobian,
            Error::NoConvergence { .. } => KwStatus::NoConvergence,
            Error::LeftDomain { .. } => KwStatus::LeftDomain,
            Error::FallingOrbit { .. } => KwStatus::FallingOrbit,
            Error::InvalidBracket { .. } | Error::LostOrbit { .. } | Error::ContinuationBreakdown { .. } => {
                KwStatus::BracketOrContinuation
            }
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(KwStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KwStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KwStatus::Panic
        }
    }
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn obj_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// `system` is a `KwSystem` value.
fn field(system: i32) -> Result<Field, Failure> {
    match system {
        x if x == KwSystem::Averaged as i32 => Ok(Field::Averaged),
        x if x == KwSystem::Original as i32 => Ok(Field::Original),
        other => Err(Failure(KwStatus::InvalidArgument, format!("unknown system {other}"))),
    }
}

fn integrator(tol: f64) -> IntegratorConfig {
    if tol > 0.0 {
        IntegratorConfig::refine().with_tol(tol)
    } else {
        IntegratorConfig::refine()
    }
}

fn info(o: &PeriodicOrbit) -> KwOrbitInfo {
    let m = &o.monodromy;
    KwOrbitInfo {
        phi0: o.phi0,
        p0: o.p0,
        residual: o.residual,
        monodromy: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
        multiplier_re: [o.multipliers[0].re, o.multipliers[1].re],
        multiplier_im: [o.multipliers[0].im, o.multipliers[1].im],
        stability: match o.stability {
            Stability::Stable => KwStability::Stable,
            Stability::Unstable => KwStability::Unstable,
            Stability::Marginal => KwStability::Marginal,
        } as i32,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, 0 if
/// there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn kw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// New problem with F ≡ 0 and no fast time scale.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_new(mu: f64, a: f64, out: *mut *mut KwProblem) -> KwStatus {
    guard(|| {
        let params = Params::new(mu, a);
        params.validate()?;
        let p = Box::new(KwProblem { params, forcing: Forcing::Zero });
        write(out, Box::into_raw(p), "out")
    })
}

/// # Safety
/// `problem` must be null or a handle from [`kw_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_free(problem: *mut KwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Sets ε = 1/k for the original system.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_set_k(problem: *mut KwProblem, k: u32) -> KwStatus {
    guard(|| {
        let p = obj_mut(problem, "problem")?;
        if k == 0 {
            return Err(Failure(KwStatus::InvalidArgument, "k must be >= 1".into()));
        }
        p.params = p.params.with_k(k);
        Ok(())
    })
}

/// F(t) = amplitude · cos(t + phase).
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_set_harmonic(problem: *mut KwProblem, amplitude: f64, phase: f64) -> KwStatus {
    guard(|| {
        let p = obj_mut(problem, "problem")?;
        let f = Forcing::harmonic(amplitude, phase);
        f.validate()?;
        p.forcing = f;
        Ok(())
    })
}

/// F(t) = Σ cos_k cos(kt) + sin_k sin(kt), k from 0.
///
/// # Safety
/// `problem` must be a live handle; `cos`/`sin` valid for `n_cos`/`n_sin`
/// values (may be null when the count is 0).
#[no_mangle]
pub unsafe extern "C" fn kw_problem_set_fourier(
    problem: *mut KwProblem,
    cos: *const f64,
    n_cos: usize,
    sin: *const f64,
    n_sin: usize,
) -> KwStatus {
    guard(|| {
        let p = obj_mut(problem, "problem")?;
        let f = Forcing::fourier(slice(cos, n_cos, "cos")?.to_vec(), slice(sin, n_sin, "sin")?.to_vec());
        f.validate()?;
        p.forcing = f;
        Ok(())
    })
}

/// Forcing from its JSON description (as written by the CLI).
///
/// # Safety
/// `problem` must be a live handle and `json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_set_forcing_json(problem: *mut KwProblem, json: *const c_char) -> KwStatus {
    guard(|| {
        let p = obj_mut(problem, "problem")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(KwStatus::InvalidArgument, e.to_string()))?;
        let f: Forcing =
            serde_json::from_str(text).map_err(|e| Failure(KwStatus::InvalidArgument, e.to_string()))?;
        f.validate()?;
        f.check_params(&p.params)?;
        p.forcing = f;
        Ok(())
    })
}

/// F(t) for the problem's forcing.
///
/// # Safety
/// `problem` must be a live handle, `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn kw_problem_forcing_value(problem: *const KwProblem, t: f64, out: *mut f64) -> KwStatus {
    guard(|| {
        let p = obj(problem, "problem")?;
        write(out, p.forcing.value(t), "out")
    })
}

/// Integrates from (φ₀, p₀) at t₀ for `duration`. `tol <= 0` selects the
/// default tolerance.
///
/// # Safety
/// `problem` must be a live handle; the outputs valid for writing.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn kw_flow(
    problem: *const KwProblem,
    system: i32,
    phi0: f64,
    p0: f64,
    t0: f64,
    duration: f64,
    tol: f64,
    out_phi: *mut f64,
    out_p: *mut f64,
) -> KwStatus {
    guard(|| {
        let p = obj(problem, "problem")?;
        let r = flow(&State::new(phi0, p0, t0), duration, field(system)?, &p.params, &p.forcing, &integrator(tol), false, None)?;
        write(out_phi, r.final_state.phi, "out_phi")?;
        write(out_p, r.final_state.p, "out_p")
    })
}

/// Distance between (φ₀, p₀) and its image after one period.
///
/// # Safety
/// `problem` must be a live handle, `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn kw_residual(
    problem: *const KwProblem,
    system: i32,
    phi0: f64,
    p0: f64,
    tol: f64,
    out: *mut f64,
) -> KwStatus {
    guard(|| {
        let p = obj(problem, "problem")?;
        let r = residual_phi(phi0, p0, field(system)?, &p.params, &p.forcing, &integrator(tol))?;
        write(out, r, "out")
    })
}

/// Newton refinement of a periodic orbit from a guess.
///
/// # Safety
/// `problem` must be a live handle, `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn kw_orbit_refine(
    problem: *const KwProblem,
    system: i32,
    phi0: f64,
    p0: f64,
    out: *mut *mut KwOrbit,
) -> KwStatus {
    guard(|| {
        let p = obj(problem, "problem")?;
        let o = newton_refine((phi0, p0), field(system)?, &p.params, &p.forcing, &IntegratorConfig::refine())?;
        write(out, Box::into_raw(Box::new(KwOrbit(o))), "out")
    })
}

/// # Safety
/// `orbit` must be a live handle, `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn kw_orbit_info(orbit: *const KwOrbit, out: *mut KwOrbitInfo) -> KwStatus {
    guard(|| {
        let o = obj(orbit, "orbit")?;
        write(out, info(&o.0), "out")
    })
}

/// # Safety
/// `orbit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kw_orbit_free(orbit: *mut KwOrbit) {
    if !orbit.is_null() {
        drop(Box::from_raw(orbit));
    }
}

/// All non-falling periodic orbits found from an `n × n` seed grid over the
/// momentum-bounded search box (needs μ > 0).
///
/// # Safety
/// `problem` must be a live handle, `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn kw_orbits_scan(
    problem: *const KwProblem,
    system: i32,
    n: usize,
    out: *mut *mut KwOrbitSet,
) -> KwStatus {
    guard(|| {
        let p = obj(problem, "problem")?;
        let bx = SearchBox::for_problem(&p.params, &p.forcing)?;
        let scan = seed_grid(&bx, n, n, field(system)?, &p.params, &p.forcing, &IntegratorConfig::refine())?;
        write(out, Box::into_raw(Box::new(KwOrbitSet(scan.orbits))), "out")
    })
}

/// Number of orbits in a set; 0 for null.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kw_orbit_set_len(set: *const KwOrbitSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `set` must be a live handle, `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn kw_orbit_set_get(set: *const KwOrbitSet, index: usize, out: *mut KwOrbitInfo) -> KwStatus {
    guard(|| {
        let s = obj(set, "set")?;
        let o = s
            .0
            .get(index)
            .ok_or_else(|| Failure(KwStatus::OutOfRange, format!("index {index} out of range (len {})", s.0.len())))?;
        write(out, info(o), "out")
    })
}

/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kw_orbit_set_free(set: *mut KwOrbitSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Critical vibration amplitude for F(t) = A cos t by bisection on
/// [a_lo, a_hi], following the orbit seeded at (φ₀, p₀) from a_hi.
///
/// # Safety
/// `out_a_star` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn kw_critical_a(
    mu: f64,
    amplitude: f64,
    a_lo: f64,
    a_hi: f64,
    phi0: f64,
    p0: f64,
    out_a_star: *mut f64,
) -> KwStatus {
    guard(|| {
        let cp = critical_a_bisect(
            amplitude,
            mu,
            &ForcingFamily::default(),
            (a_lo, a_hi),
            (phi0, p0),
            &IntegratorConfig::refine(),
        )?;
        write(out_a_star, cp.a_star, "out_a_star")
    })
}

/// Sufficient condition for a stable orbit inside (β, α). `k` is the
/// Lebesgue exponent (pass `INFINITY` for the sup norm). α and β are NaN
/// when a² ≤ 2.
///
/// # Safety
/// `problem` must be a live handle; the outputs valid for writing.
#[no_mangle]
pub unsafe extern "C" fn kw_torres_check(
    problem: *const KwProblem,
    k: f64,
    out_applies: *mut bool,
    out_alpha: *mut f64,
    out_beta: *mut f64,
) -> KwStatus {
    guard(|| {
        let p = obj(problem, "problem")?;
        let v = torres_check(&p.params, &p.forcing, k)?;
        write(out_applies, v.applies, "out_applies")?;
        write(out_alpha, v.alpha.unwrap_or(f64::NAN), "out_alpha")?;
        write(out_beta, v.beta.unwrap_or(f64::NAN), "out_beta")
    })
}
