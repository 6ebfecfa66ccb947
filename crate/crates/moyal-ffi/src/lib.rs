//! C ABI over the `moyal` crate.
//!
//! States and estimates cross the boundary as opaque handles that the caller
//! frees with the matching `*_free` function. Every fallible call returns a
//! `MoyalStatus`; on failure `moyal_last_error_message` describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use moyal::optimal;
use moyal::solver::{self, DistanceEstimate, Sheet, SolverOptions};
use moyal::state::{self, MixedState};
use moyal::symplectic;
use moyal::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoyalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPair = 3,
    Truncation = 4,
    OutOfRange = 5,
    Inconsistent = 6,
    PreconditionFailed = 7,
    NotImplemented = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque mixed state.
pub struct MoyalState {
    inner: MixedState,
}

/// Opaque distance estimate.
pub struct MoyalEstimate {
    inner: DistanceEstimate,
}

/// Solver knobs; start from `moyal_solver_options_default`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MoyalSolverOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub pad: usize,
    /// 0 picks the working dimension from the states.
    pub solver_dim: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MoyalBetaThresholds {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub lambert_residual: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MoyalSchurCertificate {
    pub beta: f64,
    pub row_sup: f64,
    pub col_sup: f64,
    pub schur_bound: f64,
    pub exact_norm: f64,
    pub in_ball: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MoyalStatus {
    match e {
        Error::InvalidParameter(_) | Error::InvalidInput(_) | Error::SingularParameter(_) | Error::Json(_) => {
            MoyalStatus::InvalidArgument
        }
        Error::InvalidPair(_) => MoyalStatus::InvalidPair,
        Error::TruncationOverflow(_) | Error::InsufficientTruncation { .. } => MoyalStatus::Truncation,
        Error::OutOfRange { .. } => MoyalStatus::OutOfRange,
        Error::Inconsistent(_) | Error::InvalidWitness(_) => MoyalStatus::Inconsistent,
        Error::PreconditionFailed(_) => MoyalStatus::PreconditionFailed,
        Error::NotImplemented(_) => MoyalStatus::NotImplemented,
        Error::Io(_) | Error::Csv(_) => MoyalStatus::Io,
    }
}

struct Fail(MoyalStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MoyalStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status and the thread's message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MoyalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MoyalStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            MoyalStatus::Panic
        }
    }
}

unsafe fn state_ref<'a>(p: *const MoyalState, what: &str) -> Result<&'a MixedState, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_state(out: *mut *mut MoyalState, s: MixedState) -> Result<(), Fail> {
    put(out, MoyalState { inner: s })
}

unsafe fn put_estimate(out: *mut *mut MoyalEstimate, e: DistanceEstimate) -> Result<(), Fail> {
    put(out, MoyalEstimate { inner: e })
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

fn options(opts: *const MoyalSolverOptions) -> SolverOptions {
    let mut o = SolverOptions::default();
    if let Some(c) = unsafe { opts.as_ref() } {
        o.restarts = c.restarts.max(1);
        o.max_iter = c.max_iter.max(1);
        o.seed = c.seed;
        o.pad = c.pad.max(1);
        o.solver_dim = (c.solver_dim > 0).then_some(c.solver_dim);
    }
    o
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn moyal_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn moyal_solver_options_default() -> MoyalSolverOptions {
    let d = SolverOptions::default();
    MoyalSolverOptions { restarts: d.restarts, max_iter: d.max_iter, seed: d.seed, pad: d.pad, solver_dim: 0 }
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_ground_state(dim: usize, theta: f64, out: *mut *mut MoyalState) -> MoyalStatus {
    guard(|| put_state(out, state::ground_state(dim, theta)?))
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_eigenstate(n: usize, dim: usize, theta: f64, out: *mut *mut MoyalState) -> MoyalStatus {
    guard(|| put_state(out, state::eigenstate(n, dim, theta)?))
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_coherent_state(
    kappa_re: f64,
    kappa_im: f64,
    dim: usize,
    theta: f64,
    out: *mut *mut MoyalState,
) -> MoyalStatus {
    guard(|| put_state(out, state::coherent_state(Complex64::new(kappa_re, kappa_im), dim, theta)?))
}

/// Parses the JSON state format `{theta, components: [{weight, re, im}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_state_from_json(json: *const c_char, out: *mut *mut MoyalState) -> MoyalStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Fail(MoyalStatus::InvalidArgument, "json is not UTF-8".into()))?;
        put_state(out, MixedState::from_json(text)?)
    })
}

/// # Safety
/// `state` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_state_translate(
    state: *const MoyalState,
    kappa_re: f64,
    kappa_im: f64,
    out: *mut *mut MoyalState,
) -> MoyalStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        let k = Complex64::new(kappa_re, kappa_im);
        moyal::element::check_translation(k, s.theta(), s.dim())?;
        put_state(out, state::translate_state(s, k))
    })
}

/// # Safety
/// `state` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_state_rotate(state: *const MoyalState, t: f64, out: *mut *mut MoyalState) -> MoyalStatus {
    guard(|| put_state(out, symplectic::rotate_state(state_ref(state, "state")?, t)))
}

/// Number of stored levels, 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moyal_state_dim(state: *const MoyalState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.dim())
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moyal_state_free(state: *mut MoyalState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// `d(phi, phi o alpha_kappa)` with upper bound `|kappa|`. `opts` may be null.
///
/// # Safety
/// Handles must be live; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_translation_distance(
    state: *const MoyalState,
    kappa_re: f64,
    kappa_im: f64,
    opts: *const MoyalSolverOptions,
    out: *mut *mut MoyalEstimate,
) -> MoyalStatus {
    guard(|| {
        let s = state_ref(state, "state")?;
        put_estimate(out, solver::translation_distance(s, Complex64::new(kappa_re, kappa_im), &options(opts))?)
    })
}

/// Certified lower bound between two states; upper is +inf. `opts` may be null.
///
/// # Safety
/// Handles must be live; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn moyal_maximize_distance(
    a: *const MoyalState,
    b: *const MoyalState,
    opts: *const MoyalSolverOptions,
    out: *mut *mut MoyalEstimate,
) -> MoyalStatus {
    guard(|| {
        let (a, b) = (state_ref(a, "a")?, state_ref(b, "b")?);
        put_estimate(out, solver::maximize_distance(a, b, &options(opts))?)
    })
}

/// Two-sheet distance between `a` on sheet `i` and `b` on sheet `j` (1 or 2).
/// When `has_hint` is set, `b` is taken as the translate of `a` by the hint.
///
/// # Safety
/// Handles must be live; `out` a valid handle slot.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn moyal_double_distance(
    a: *const MoyalState,
    i: u32,
    b: *const MoyalState,
    j: u32,
    lambda: f64,
    has_hint: bool,
    hint_re: f64,
    hint_im: f64,
    opts: *const MoyalSolverOptions,
    out: *mut *mut MoyalEstimate,
) -> MoyalStatus {
    guard(|| {
        let (a, b) = (state_ref(a, "a")?, state_ref(b, "b")?);
        let (si, sj) = (Sheet::from_index(i as usize)?, Sheet::from_index(j as usize)?);
        let hint = has_hint.then(|| Complex64::new(hint_re, hint_im));
        put_estimate(out, solver::double_distance(a, si, b, sj, lambda, hint, &options(opts))?)
    })
}

/// NaN for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moyal_estimate_lower(est: *const MoyalEstimate) -> f64 {
    est.as_ref().map_or(f64::NAN, |e| e.inner.lower)
}

/// +inf when no closed form applies; NaN for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moyal_estimate_upper(est: *const MoyalEstimate) -> f64 {
    est.as_ref().map_or(f64::NAN, |e| e.inner.upper)
}

/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moyal_estimate_iterations(est: *const MoyalEstimate) -> usize {
    est.as_ref().map_or(0, |e| e.inner.diagnostics.iterations)
}

/// JSON record `{lower, upper, gap, beta, dim, iterations, witness_ref}`;
/// release it with `moyal_string_free`.
///
/// # Safety
/// `est` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn moyal_estimate_to_json(est: *const MoyalEstimate, out: *mut *mut c_char) -> MoyalStatus {
    guard(|| {
        let e = est.as_ref().ok_or_else(|| null("estimate"))?;
        let text = CString::new(e.inner.to_json()?).map_err(|_| Fail(MoyalStatus::Inconsistent, "NUL in JSON".into()))?;
        write(out, text.into_raw())
    })
}

/// # Safety
/// `est` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moyal_estimate_free(est: *mut MoyalEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moyal_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn moyal_beta_thresholds(out: *mut MoyalBetaThresholds) -> MoyalStatus {
    guard(|| {
        let t = optimal::beta_thresholds();
        write(
            out,
            MoyalBetaThresholds {
                beta0: t.beta0,
                beta1: t.beta1,
                beta2: t.beta2,
                gamma: t.gamma,
                lambert_residual: t.lambert_residual,
            },
        )
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn moyal_schur_certificate(beta: f64, dim: usize, out: *mut MoyalSchurCertificate) -> MoyalStatus {
    guard(|| {
        let c = optimal::schur_certificate(beta, dim)?;
        write(
            out,
            MoyalSchurCertificate {
                beta: c.beta,
                row_sup: c.row_sup,
                col_sup: c.col_sup,
                schur_bound: c.schur_bound,
                exact_norm: c.exact_norm,
                in_ball: c.in_ball(moyal::lipschitz::BALL_TOL),
            },
        )
    })
}

/// # Safety
/// Handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn moyal_quantum_length_squared(
    a: *const MoyalState,
    b: *const MoyalState,
    out: *mut f64,
) -> MoyalStatus {
    guard(|| {
        let (a, b) = (state_ref(a, "a")?, state_ref(b, "b")?);
        write(out, symplectic::quantum_length_squared(a, b)?)
    })
}

/// # Safety
/// `state` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn moyal_lambda_from_state(state: *const MoyalState, out: *mut f64) -> MoyalStatus {
    guard(|| write(out, symplectic::lambda_from_state(state_ref(state, "state")?)?))
}
