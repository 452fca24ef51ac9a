use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pspin_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { pspin_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn mixture(a: &[f64]) -> *mut PspinMixture {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pspin_mixture_new(a.as_ptr(), a.len(), &mut m) }, PspinStatus::Ok);
    m
}

#[test]
fn free_dynamics_through_handles() {
    unsafe {
        let mix = mixture(&[0.0, 0.0, 1.0]);
        let mut params = ptr::null_mut();
        assert_eq!(pspin_params_new_hard(0.0, 0.0, 1.0, 0.5, 1.0, mix, &mut params), PspinStatus::Ok);
        let mut b = ptr::null_mut();
        assert_eq!(pspin_integrate(params, 0.01, 1.0, 2, &mut b), PspinStatus::Ok);
        let n = pspin_bundle_len(b);
        assert_eq!(n, 101);
        assert_eq!(pspin_bundle_dt(b), 0.01);
        let mut c = 0.0;
        assert_eq!(pspin_bundle_get(b, PspinField::C, 100, 0, &mut c), PspinStatus::Ok);
        assert!((c - (-0.5f64).exp()).abs() < 1e-4);
        let mut m = vec![0.0; n];
        assert_eq!(pspin_bundle_series(b, PspinSeries::M, m.as_mut_ptr(), n), PspinStatus::Ok);
        assert!((m[100] - 0.5 * (-0.5f64).exp()).abs() < 1e-4);
        assert_eq!(
            pspin_bundle_series(b, PspinSeries::M, m.as_mut_ptr(), n - 1),
            PspinStatus::BufferTooSmall
        );
        assert_eq!(pspin_bundle_get(b, PspinField::R, n, 0, &mut c), PspinStatus::OutOfRange);
        pspin_bundle_free(b);
        pspin_params_free(params);
        pspin_mixture_free(mix);
    }
}

#[test]
fn invalid_input_reports_codes_and_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(pspin_mixture_new(ptr::null(), 0, &mut m), PspinStatus::NullPointer);
        let mix = mixture(&[0.0, 1.0]);
        let mut params = ptr::null_mut();
        assert_eq!(
            pspin_params_new_hard(-1.0, 0.0, 1.0, 0.0, 1.0, mix, &mut params),
            PspinStatus::InvalidParameter
        );
        assert!(params.is_null());
        assert!(last_error().contains("beta"));
        let mut q = 0.0;
        let rf = mixture(&[0.2, 1.0]);
        assert_eq!(pspin_solve_qfdt(0.1, 0.1, rf, &mut q), PspinStatus::InvalidParameter);
        let mut beta = 0.0;
        assert_eq!(pspin_beta_c(0.5, mix, 1e-8, &mut beta, ptr::null_mut()), PspinStatus::NoSolution);
        pspin_mixture_free(rf);
        pspin_mixture_free(mix);
        pspin_mixture_free(ptr::null_mut());
    }
}

#[test]
fn stationary_solution_and_threshold() {
    unsafe {
        let mix = mixture(&[0.0, 0.0, 1.0]);
        let mut q = 0.0;
        assert_eq!(pspin_solve_qfdt(0.0, 0.5, mix, &mut q), PspinStatus::Ok);
        assert!((q - (3.0 - 5f64.sqrt()) / 2.0).abs() <= 1e-10);
        let mut f = ptr::null_mut();
        assert_eq!(pspin_solve_fdt(0.0, 0.0, mix, 1e-3, 10.0, &mut f), PspinStatus::Ok);
        let n = pspin_fdt_len(f);
        let mut c = vec![0.0; n];
        assert_eq!(pspin_fdt_copy(f, PspinField::C, c.as_mut_ptr(), n), PspinStatus::Ok);
        assert!((c[n - 1] - (-5.0f64).exp()).abs() <= 1e-6);
        let (mut qq, mut mm, mut mu) = (1.0, 1.0, 0.0);
        assert_eq!(pspin_fdt_scalars(f, &mut qq, &mut mm, &mut mu), PspinStatus::Ok);
        assert_eq!((qq, mm, mu), (0.0, 0.0, 0.5));
        pspin_fdt_free(f);
        let two = mixture(&[0.0, 1.0]);
        let mut beta = 0.0;
        assert_eq!(pspin_beta_c(0.0, two, 1e-8, &mut beta, ptr::null_mut()), PspinStatus::Ok);
        assert!((beta - 0.5).abs() <= 1e-6);
        pspin_mixture_free(two);
        pspin_mixture_free(mix);
    }
}

#[test]
fn config_validation() {
    let good = CString::new("[model]\nbeta = 0.1\na = [0.0, 1.0]\n").unwrap();
    let bad = CString::new("[model]\nbeta = 0.1\na = [0.0, 1.0]\nfoo = 1\n").unwrap();
    unsafe {
        assert_eq!(pspin_config_validate(good.as_ptr()), PspinStatus::Ok);
        assert_eq!(pspin_config_validate(bad.as_ptr()), PspinStatus::InvalidParameter);
    }
    let v = unsafe { CStr::from_ptr(pspin_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/pspin.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["pspin_integrate", "pspin_bundle_free", "pspin_solve_fdt", "PSPIN_STATUS_BLOW_UP"] {
        assert!(text.contains(f), "{f}");
    }
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
