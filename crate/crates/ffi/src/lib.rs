//! C interface to `spinmech`.
//!
//! All objects are opaque handles created by `*_new`/`*_load`/`*_run`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`SpinmechStatus`]; the message of the last failure on the
//! calling thread is available through [`spinmech_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use spinmech::analysis::{self, GridSpec};
use spinmech::config::Config;
use spinmech::protocols;
use spinmech::quantum::{DensityMatrix, Spin};
use spinmech::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinmechStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    InfeasibleCoolingSite = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Readout outcome used for postselection.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinmechOutcome {
    Up = 0,
    Down = 1,
}

/// Parsed configuration.
pub struct SpinmechConfig(Config);

/// Reduced mechanical state produced by a protocol.
pub struct SpinmechState(DensityMatrix);

/// Scalar outputs of a cat preparation.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SpinmechCatSummary {
    pub xi: f64,
    pub fidelity: f64,
    pub probability: f64,
}

/// Scalar outputs of a squeezing run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SpinmechSqueezeSummary {
    pub min_db: f64,
    pub theta: f64,
    pub probability: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpinmechStatus {
    match e {
        Error::Config(_) => SpinmechStatus::Config,
        Error::InfeasibleCoolingSite(_) => SpinmechStatus::InfeasibleCoolingSite,
        Error::InvalidArgument(_)
        | Error::InvalidSpec(_)
        | Error::NegativeRate { .. }
        | Error::OutsideDisc { .. }
        | Error::QubitIndex { .. }
        | Error::TruncationRisk { .. } => SpinmechStatus::InvalidArgument,
        _ => SpinmechStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SpinmechStatus, String)>) -> SpinmechStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpinmechStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            SpinmechStatus::Panic
        }
    }
}

fn lib<T>(r: spinmech::Result<T>) -> Result<T, (SpinmechStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (SpinmechStatus, String) {
    (SpinmechStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, (SpinmechStatus, String)> {
    // SAFETY: the caller passes either NULL or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(null)
}

unsafe fn write_out<T>(p: *mut T, v: T) -> Result<(), (SpinmechStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    // SAFETY: non-null and, by contract, valid for writes.
    unsafe { p.write(v) };
    Ok(())
}

fn spin(o: SpinmechOutcome) -> Spin {
    match o {
        SpinmechOutcome::Up => Spin::Up,
        SpinmechOutcome::Down => Spin::Down,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spinmech_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spinmech_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_config_load(path: *const c_char, out: *mut *mut SpinmechConfig) -> SpinmechStatus {
    guard(|| {
        if path.is_null() {
            return Err(null());
        }
        // SAFETY: checked non-null, NUL-terminated by contract.
        let s = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| (SpinmechStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let cfg = lib(Config::load(Path::new(s)))?;
        unsafe { write_out(out, Box::into_raw(Box::new(SpinmechConfig(cfg)))) }
    })
}

/// The built-in reference configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_config_default(out: *mut *mut SpinmechConfig) -> SpinmechStatus {
    guard(|| unsafe { write_out(out, Box::into_raw(Box::new(SpinmechConfig(Config::reference_defaults())))) })
}

/// # Safety
/// `cfg` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spinmech_config_free(cfg: *mut SpinmechConfig) {
    if !cfg.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Replaces the membrane radius (μm).
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinmech_config_set_radius_um(cfg: *mut SpinmechConfig, radius_um: f64) -> SpinmechStatus {
    guard(|| {
        // SAFETY: live handle by contract.
        let c = unsafe { cfg.as_mut() }.ok_or_else(null)?;
        if !(radius_um > 0.0) {
            return Err((SpinmechStatus::InvalidArgument, format!("radius must be positive, got {radius_um}")));
        }
        c.0 = c.0.with_radius(radius_um * 1e-6);
        Ok(())
    })
}

/// Mechanical occupation N̄ and coupling ξ = g₀/ω_m at the sweet spot.
///
/// # Safety
/// `cfg` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_device_summary(
    cfg: *const SpinmechConfig,
    nbar: *mut f64,
    xi: *mut f64,
) -> SpinmechStatus {
    guard(|| {
        let c = unsafe { deref(cfg) }?;
        let d = lib(c.0.device())?;
        unsafe { write_out(nbar, d.mechanical_occupation()) }?;
        unsafe { write_out(xi, lib(d.xi())?.abs()) }
    })
}

/// Steady-state `⟨b†b⟩` with the cooling qubit driven at (Ω, δ_c) in units
/// of ω_m, at the configured cooling site.
///
/// # Safety
/// `cfg` must be a live handle; `n_eff` writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_cooling_point(
    cfg: *const SpinmechConfig,
    rabi: f64,
    detuning: f64,
    n_eff: *mut f64,
) -> SpinmechStatus {
    guard(|| {
        let c = unsafe { deref(cfg) }?;
        let (p, _) = lib(c.0.cooling_params(c.0.cooling.fock_dim))?;
        let pt = lib(protocols::cooling_point(&p, rabi, detuning))?;
        unsafe { write_out(n_eff, pt.n_eff) }
    })
}

/// Runs the cat protocol at decoherence rate Γ̃/ω_m = `decoherence`. The
/// reduced mechanical state is returned through `state` when non-NULL.
///
/// # Safety
/// `cfg` must be a live handle; `summary` writable; `state` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_cat_run(
    cfg: *const SpinmechConfig,
    decoherence: f64,
    outcome: SpinmechOutcome,
    summary: *mut SpinmechCatSummary,
    state: *mut *mut SpinmechState,
) -> SpinmechStatus {
    guard(|| {
        let c = unsafe { deref(cfg) }?;
        if summary.is_null() {
            return Err(null());
        }
        if !(decoherence >= 0.0) {
            return Err((SpinmechStatus::InvalidArgument, format!("decoherence must be >= 0, got {decoherence}")));
        }
        let mut p = lib(c.0.cat_params())?;
        p.decoherence = decoherence;
        let r = lib(protocols::run_cat(&p, spin(outcome), None))?;
        unsafe { write_out(summary, SpinmechCatSummary { xi: r.xi, fidelity: r.fidelity, probability: r.probability }) }?;
        if !state.is_null() {
            unsafe { write_out(state, Box::into_raw(Box::new(SpinmechState(r.state)))) }?;
        }
        Ok(())
    })
}

/// Squeezing after a quarter period at (ξ, Ω/ω_m) with the configured
/// squeezing environment and rates. `fock_dim` 0 keeps the configured value.
///
/// # Safety
/// `cfg` must be a live handle; `summary` writable; `state` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_squeeze_run(
    cfg: *const SpinmechConfig,
    xi: f64,
    rabi: f64,
    fock_dim: usize,
    summary: *mut SpinmechSqueezeSummary,
    state: *mut *mut SpinmechState,
) -> SpinmechStatus {
    guard(|| {
        let c = unsafe { deref(cfg) }?;
        if summary.is_null() {
            return Err(null());
        }
        let mut p = lib(c.0.squeeze_params())?;
        p.xi = xi;
        p.rabi = rabi;
        if fock_dim > 0 {
            p.fock_dim = fock_dim;
        }
        let r = lib(protocols::run_squeeze(&p, None))?;
        unsafe {
            write_out(summary, SpinmechSqueezeSummary { min_db: r.min_db, theta: r.theta, probability: r.probability })
        }?;
        if !state.is_null() {
            unsafe { write_out(state, Box::into_raw(Box::new(SpinmechState(r.state)))) }?;
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spinmech_state_free(state: *mut SpinmechState) {
    if !state.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Fock dimension of a mechanical state.
///
/// # Safety
/// `state` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_state_fock_dim(state: *const SpinmechState, out: *mut usize) -> SpinmechStatus {
    guard(|| {
        let s = unsafe { deref(state) }?;
        unsafe { write_out(out, s.0.spec().fock_dim()) }
    })
}

/// `⟨b†b⟩` of a mechanical state.
///
/// # Safety
/// `state` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spinmech_state_phonon_number(state: *const SpinmechState, out: *mut f64) -> SpinmechStatus {
    guard(|| {
        let s = unsafe { deref(state) }?;
        unsafe { write_out(out, analysis::phonon_number(&s.0)) }
    })
}

/// Wigner function on a `resolution`² grid over `[lo, hi]²`, written row by
/// row (rows are p, columns x) into `values`, which must hold `len` doubles.
///
/// # Safety
/// `state` must be a live handle; `values` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn spinmech_state_wigner(
    state: *const SpinmechState,
    lo: f64,
    hi: f64,
    resolution: usize,
    values: *mut f64,
    len: usize,
) -> SpinmechStatus {
    guard(|| {
        let s = unsafe { deref(state) }?;
        if values.is_null() {
            return Err(null());
        }
        let need = resolution.checked_mul(resolution).ok_or_else(|| {
            (SpinmechStatus::InvalidArgument, "resolution overflows".to_string())
        })?;
        if len < need {
            return Err((SpinmechStatus::BufferTooSmall, format!("need {need} values, buffer holds {len}")));
        }
        let g = lib(analysis::wigner(&s.0, &GridSpec { x_range: (lo, hi), p_range: (lo, hi), resolution }))?;
        // SAFETY: valid for `len >= need` writes by contract.
        let out = unsafe { std::slice::from_raw_parts_mut(values, need) };
        for (dst, src) in out.iter_mut().zip(g.values.iter()) {
            *dst = *src;
        }
        Ok(())
    })
}
