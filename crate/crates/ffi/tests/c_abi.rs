use std::ffi::{CStr, CString};
use std::ptr;

use muskat_ffi::*;

fn last_error() -> String {
    let p = muskat_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn params_roundtrip_and_validation() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(muskat_params_new(0.0, 1.0, 2.0, 0.1, &mut p), MuskatStatus::Ok);
        let (mut dr, mut m1, mut m2) = (0.0, 0.0, 0.0);
        assert_eq!(muskat_params_derived(p, &mut dr, &mut m1, &mut m2), MuskatStatus::Ok);
        assert!((dr - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((m1 - 0.5).abs() < 1e-15 && (m2 - 0.5).abs() < 1e-15);
        muskat_params_free(p);

        let mut q = ptr::null_mut();
        assert_eq!(
            muskat_params_new(0.0, 3.0, 2.0, 0.1, &mut q),
            MuskatStatus::InvalidParameter
        );
        assert!(q.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(
            muskat_params_new(0.0, 1.0, 2.0, 0.1, ptr::null_mut()),
            MuskatStatus::NullPointer
        );
        let mut out = 0.0;
        assert_eq!(
            muskat_kernel_p(MuskatKernel::P11, ptr::null(), &mut out),
            MuskatStatus::NullPointer
        );
        assert_eq!(muskat_simulation_step(ptr::null_mut()), MuskatStatus::NullPointer);
        assert!(muskat_simulation_time(ptr::null()).is_nan());
        muskat_simulation_free(ptr::null_mut());
    }
}

#[test]
fn kernel_and_d0_evaluate() {
    unsafe {
        let args = MuskatKernelArgs {
            dx: 0.3,
            f_x: 0.01,
            f_x1: -0.02,
            g_x: 0.0,
            g_x1: 0.01,
            df_x1: 0.05,
            dg_x1: -0.02,
            sigma: 0.1,
        };
        let mut v = f64::NAN;
        assert_eq!(muskat_kernel_p(MuskatKernel::P12, &args, &mut v), MuskatStatus::Ok);
        let b = 2.0 * 0.1 + 0.01 - 0.01;
        assert!((v - 0.3 / (0.09 + b * b)).abs() < 1e-12 * v.abs());

        let mut p = ptr::null_mut();
        muskat_params_new(0.0, 1.0, 2.0, 0.1, &mut p);
        let (mut d11, mut d22) = (0.0, 0.0);
        assert_eq!(muskat_kernel_d0(p, 0.2, &mut d11, &mut d22), MuskatStatus::Ok);
        assert!(d11 > 0.0 && d22 > 0.0);
        muskat_params_free(p);
    }
}

#[test]
fn grid_rejects_non_power_of_two() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_ne!(muskat_grid_new(std::f64::consts::PI, 6, &mut g), MuskatStatus::Ok);
        assert!(g.is_null());
        assert_eq!(muskat_grid_new(std::f64::consts::PI, 64, &mut g), MuskatStatus::Ok);
        let zero = vec![0.0; 64];
        let mut out = -1.0;
        assert_eq!(muskat_hk_norm_sq(g, zero.as_ptr(), 64, 3, 0.1, &mut out), MuskatStatus::Ok);
        assert_eq!(out, 0.0);
        assert_eq!(muskat_hk_norm_sq(g, zero.as_ptr(), 63, 3, 0.1, &mut out), MuskatStatus::Shape);
        muskat_grid_free(g);
    }
}

#[test]
fn simulation_from_config_runs_to_horizon() {
    let cfg = CString::new(r#"{"params":{"sigma":0.4},"grid":{"n":128},"stepper":{"horizon":0.1}}"#).unwrap();
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(
            muskat_simulation_from_config_json(cfg.as_ptr(), &mut sim),
            MuskatStatus::Ok,
            "{}",
            last_error()
        );
        let n = muskat_simulation_len(sim);
        assert_eq!(n, 128);
        let mut e0 = 0.0;
        assert_eq!(muskat_simulation_energy(sim, &mut e0), MuskatStatus::Ok);
        assert_eq!(muskat_simulation_run(sim), MuskatStatus::Ok);
        assert!((muskat_simulation_time(sim) - 0.1).abs() < 1e-14);
        assert!(muskat_simulation_gamma(sim) < 0.1);
        assert_eq!(muskat_simulation_step(sim), MuskatStatus::Finished);
        let mut e1 = 0.0;
        muskat_simulation_energy(sim, &mut e1);
        assert!(e1 <= e0);
        let (mut f, mut g) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(
            muskat_simulation_copy_fg(sim, f.as_mut_ptr(), g.as_mut_ptr(), n),
            MuskatStatus::Ok
        );
        assert!(f.iter().chain(&g).all(|v| v.is_finite()));
        assert_eq!(
            muskat_simulation_copy_fg(sim, f.as_mut_ptr(), g.as_mut_ptr(), n - 1),
            MuskatStatus::Shape
        );
        muskat_simulation_free(sim);
    }
}

#[test]
fn bad_config_reports_config_status() {
    let cfg = CString::new(r#"{"grid":{"n":64,"bogus":1}}"#).unwrap();
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(
            muskat_simulation_from_config_json(cfg.as_ptr(), &mut sim),
            MuskatStatus::Config
        );
        assert!(last_error().contains("bogus"));
    }
}

#[test]
fn simulation_from_arrays_detects_overlap() {
    unsafe {
        let (mut p, mut g) = (ptr::null_mut(), ptr::null_mut());
        muskat_params_new(0.0, 1.0, 2.0, 0.1, &mut p);
        muskat_grid_new(std::f64::consts::PI, 32, &mut g);
        let f = vec![-0.3; 32];
        let zero = vec![0.0; 32];
        let mut sim = ptr::null_mut();
        assert_eq!(
            muskat_simulation_new(p, g, f.as_ptr(), zero.as_ptr(), 32, 0.1, 0.1, &mut sim),
            MuskatStatus::Collision
        );
        let flat = vec![0.0; 32];
        assert_eq!(
            muskat_simulation_new(p, g, flat.as_ptr(), zero.as_ptr(), 32, 0.1, 0.05, &mut sim),
            MuskatStatus::Ok
        );
        assert_eq!(muskat_simulation_step(sim), MuskatStatus::Ok);
        muskat_simulation_free(sim);
        muskat_params_free(p);
        muskat_grid_free(g);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(muskat_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/muskat.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["muskat_simulation_run", "MUSKAT_STATUS_OK", "MuskatKernelArgs"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ return 0; }}\n")).unwrap();
    match std::process::Command::new("cc").arg("-fsyntax-only").arg("-Wall").arg(&src).status() {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; syntax check skipped"),
    }
}
