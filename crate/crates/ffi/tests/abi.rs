use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use spinmech_ffi::*;

fn reference_config() -> *mut SpinmechConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { spinmech_config_load(c.as_ptr(), &mut cfg) }, SpinmechStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

fn last_error() -> String {
    let p = spinmech_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/spinmech.h")).unwrap();
    for name in [
        "SPINMECH_H",
        "spinmech_config_load",
        "spinmech_cat_run",
        "spinmech_squeeze_run",
        "spinmech_state_wigner",
        "SPINMECH_STATUS_BUFFER_TOO_SMALL",
        "typedef struct SpinmechConfig SpinmechConfig",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(spinmech_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn missing_file_is_config_error() {
    let c = CString::new("/nonexistent/spinmech.toml").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { spinmech_config_load(c.as_ptr(), &mut cfg) }, SpinmechStatus::Config);
    assert!(cfg.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { spinmech_config_load(ptr::null(), &mut cfg) }, SpinmechStatus::NullPointer);
    let (mut n, mut xi) = (0.0, 0.0);
    assert_eq!(unsafe { spinmech_device_summary(ptr::null(), &mut n, &mut xi) }, SpinmechStatus::NullPointer);
    unsafe {
        spinmech_config_free(ptr::null_mut());
        spinmech_state_free(ptr::null_mut());
    }
}

#[test]
fn device_summary_and_radius() {
    let cfg = reference_config();
    let (mut n, mut xi) = (0.0, 0.0);
    assert_eq!(unsafe { spinmech_device_summary(cfg, &mut n, &mut xi) }, SpinmechStatus::Ok);
    assert!((xi - 2.0).abs() < 1e-3, "xi = {xi}");
    assert!(n > 300.0 && n < 320.0, "nbar = {n}");
    assert_eq!(unsafe { spinmech_config_set_radius_um(cfg, -1.0) }, SpinmechStatus::InvalidArgument);
    assert_eq!(unsafe { spinmech_config_set_radius_um(cfg, 0.12) }, SpinmechStatus::Ok);
    assert_eq!(unsafe { spinmech_device_summary(cfg, &mut n, &mut xi) }, SpinmechStatus::Ok);
    assert!(n > 20.0 && n < 30.0, "nbar = {n}");
    unsafe { spinmech_config_free(cfg) };
}

#[test]
fn cat_state_handle_round_trip() {
    let cfg = reference_config();
    let mut summary = SpinmechCatSummary::default();
    let mut state = ptr::null_mut();
    let st = unsafe { spinmech_cat_run(cfg, 0.0, SpinmechOutcome::Down, &mut summary, &mut state) };
    assert_eq!(st, SpinmechStatus::Ok, "{}", last_error());
    assert!(summary.fidelity >= 0.99, "{summary:?}");
    let mut f = 0usize;
    assert_eq!(unsafe { spinmech_state_fock_dim(state, &mut f) }, SpinmechStatus::Ok);
    assert_eq!(f, 80);
    let mut n = 0.0;
    assert_eq!(unsafe { spinmech_state_phonon_number(state, &mut n) }, SpinmechStatus::Ok);
    assert!((n - 16.0).abs() < 1.0, "four coherent components of amplitude 4: n = {n}");

    let res = 21;
    let mut small = vec![0.0; 10];
    let st = unsafe { spinmech_state_wigner(state, -5.0, 5.0, res, small.as_mut_ptr(), small.len()) };
    assert_eq!(st, SpinmechStatus::BufferTooSmall);
    let mut buf = vec![0.0; res * res];
    let st = unsafe { spinmech_state_wigner(state, -5.0, 5.0, res, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(st, SpinmechStatus::Ok);
    assert!(buf.iter().any(|&w| w < 0.0));
    unsafe {
        spinmech_state_free(state);
        spinmech_config_free(cfg);
    }
}

#[test]
fn negative_rate_is_invalid() {
    let cfg = reference_config();
    let mut summary = SpinmechCatSummary::default();
    let st = unsafe { spinmech_cat_run(cfg, -0.1, SpinmechOutcome::Up, &mut summary, ptr::null_mut()) };
    assert_eq!(st, SpinmechStatus::InvalidArgument);
    unsafe { spinmech_config_free(cfg) };
}

#[test]
fn squeeze_and_cooling_points() {
    let cfg = reference_config();
    let mut s = SpinmechSqueezeSummary::default();
    let st = unsafe { spinmech_squeeze_run(cfg, 2.0, 15.0, 0, &mut s, ptr::null_mut()) };
    assert_eq!(st, SpinmechStatus::Ok, "{}", last_error());
    assert!(s.min_db < -3.0 && s.probability > 0.5, "{s:?}");
    let st = unsafe { spinmech_squeeze_run(cfg, 2.0, -1.0, 0, &mut s, ptr::null_mut()) };
    assert_eq!(st, SpinmechStatus::InvalidArgument);

    assert_eq!(unsafe { spinmech_config_set_radius_um(cfg, 0.12) }, SpinmechStatus::Ok);
    let mut n = 0.0;
    let st = unsafe { spinmech_cooling_point(cfg, 0.36, -1.1, &mut n) };
    assert_eq!(st, SpinmechStatus::Ok, "{}", last_error());
    assert!(n < 1.0, "n_eff = {n}");
    unsafe { spinmech_config_free(cfg) };
}
