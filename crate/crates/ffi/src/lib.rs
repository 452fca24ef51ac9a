//! C ABI over the `pspin` crate.
//!
//! Objects are opaque handles created by `*_new` / solver calls and released
//! with the matching `*_free`. Every fallible call returns a [`PspinStatus`];
//! the message of the last failure on the calling thread is available from
//! [`pspin_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pspin::fdt::{beta_c, solve_fdt, solve_qfdt, FdtSolution};
use pspin::{integrate, Error, IntegratorConfig, MixtureSpec, ModelParams, SolutionBundle};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PspinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    BlowUp = 3,
    Resource = 4,
    NoSolution = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Other = 9,
}

/// Two-time field selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PspinField {
    C = 0,
    R = 1,
    Q = 2,
}

/// One-time series selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PspinSeries {
    M = 0,
    K = 1,
    D = 2,
    Mu = 3,
}

/// Coefficients `a_1, a_2, ...` of the mixture.
pub struct PspinMixture(MixtureSpec);

/// Model parameters including the confinement.
pub struct PspinParams(ModelParams);

/// Output of an integration run.
pub struct PspinBundle(SolutionBundle);

/// Stationary FDT solution.
pub struct PspinFdt(FdtSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PspinStatus {
    match e {
        Error::InvalidParameter { .. } | Error::NoPotential | Error::RandomField(_) | Error::GridMismatch(_) => {
            PspinStatus::InvalidParameter
        }
        Error::BlowUp { .. } | Error::NormBlowUp { .. } => PspinStatus::BlowUp,
        Error::Resource { .. } => PspinStatus::Resource,
        Error::NoFdtRoot { .. } | Error::NoFdtSolution(_) | Error::NoCriticalBeta { .. } => PspinStatus::NoSolution,
        Error::OutOfRange { .. } => PspinStatus::OutOfRange,
        _ => PspinStatus::Other,
    }
}

/// Runs `f`, recording errors and turning panics into `PspinStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), (PspinStatus, String)>) -> PspinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PspinStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PspinStatus::Panic
        }
    }
}

fn lib<T>(r: pspin::Result<T>) -> Result<T, (PspinStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PspinStatus, String) {
    (PspinStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PspinStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), (PspinStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (PspinStatus, String)> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        return Err((
            PspinStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pspin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pspin_last_error(buf: *mut c_char, len: usize) -> usize {
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

/// Mixture from `len` coefficients `a_1 .. a_len`.
///
/// # Safety
/// `a` must point to `len` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pspin_mixture_new(a: *const f64, len: usize, out: *mut *mut PspinMixture) -> PspinStatus {
    guard(|| {
        if a.is_null() {
            return Err(null("a"));
        }
        let coeffs = std::slice::from_raw_parts(a, len).to_vec();
        let m = lib(MixtureSpec::new(coeffs))?;
        put(out, Box::into_raw(Box::new(PspinMixture(m))), "out")
    })
}

/// `nu^(order)(x)` for `order` in 0..=2.
///
/// # Safety
/// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_mixture_nu(mix: *const PspinMixture, x: f64, order: u32, out: *mut f64) -> PspinStatus {
    guard(|| {
        let m = &deref(mix, "mix")?.0;
        let v = match order {
            0 => m.nu0(x),
            1 => m.nu1(x),
            2 => m.nu2(x),
            _ => return Err((PspinStatus::InvalidParameter, format!("order {order} not in 0..=2"))),
        };
        put(out, v, "out")
    })
}

/// # Safety
/// `mix` must be null or come from [`pspin_mixture_new`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pspin_mixture_free(mix: *mut PspinMixture) {
    if !mix.is_null() {
        drop(Box::from_raw(mix));
    }
}

/// Hard spherical constraint `|x|^2 = rN` with constant `k`.
///
/// # Safety
/// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_params_new_hard(
    beta: f64,
    h: f64,
    r: f64,
    alpha: f64,
    k: f64,
    mix: *const PspinMixture,
    out: *mut *mut PspinParams,
) -> PspinStatus {
    guard(|| {
        let m = deref(mix, "mix")?.0.clone();
        let p = lib(ModelParams::hard(beta, h, r, alpha, k, m))?;
        put(out, Box::into_raw(Box::new(PspinParams(p))), "out")
    })
}

/// Soft confinement `L (x - r)^2 + (x/r)^(2 k_exp) / (4 k_exp) + alpha h x / r`.
///
/// # Safety
/// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_params_new_soft(
    beta: f64,
    h: f64,
    r: f64,
    alpha: f64,
    l: f64,
    k_exp: u32,
    mix: *const PspinMixture,
    out: *mut *mut PspinParams,
) -> PspinStatus {
    guard(|| {
        let m = deref(mix, "mix")?.0.clone();
        let p = lib(ModelParams::soft(beta, h, r, alpha, l, k_exp, m))?;
        put(out, Box::into_raw(Box::new(PspinParams(p))), "out")
    })
}

/// # Safety
/// `params` must be null or come from a `pspin_params_new_*` call, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pspin_params_free(params: *mut PspinParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Integrates on `[0, t_max]` with step `dt`. On blow-up no bundle is
/// returned and the message names the failing row.
///
/// # Safety
/// `params` must come from a `pspin_params_new_*` call; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_integrate(
    params: *const PspinParams,
    dt: f64,
    t_max: f64,
    corrector_iters: usize,
    out: *mut *mut PspinBundle,
) -> PspinStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = IntegratorConfig::new(dt, t_max).with_corrector_iters(corrector_iters);
        let b = lib(integrate(p, &cfg))?;
        put(out, Box::into_raw(Box::new(PspinBundle(b))), "out")
    })
}

/// Number of grid rows, 0 for a null handle.
///
/// # Safety
/// `bundle` must be null or a live bundle handle.
#[no_mangle]
pub unsafe extern "C" fn pspin_bundle_len(bundle: *const PspinBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.0.len())
}

/// Grid step, NaN for a null handle.
///
/// # Safety
/// `bundle` must be null or a live bundle handle.
#[no_mangle]
pub unsafe extern "C" fn pspin_bundle_dt(bundle: *const PspinBundle) -> f64 {
    bundle.as_ref().map_or(f64::NAN, |b| b.0.dt())
}

/// `field(s_i, t_j)`; `j > i` reads the symmetric entry for `C`, `Q` and 0 for `R`.
///
/// # Safety
/// `bundle` must be a live bundle handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_bundle_get(
    bundle: *const PspinBundle,
    field: PspinField,
    i: usize,
    j: usize,
    out: *mut f64,
) -> PspinStatus {
    guard(|| {
        let b = &deref(bundle, "bundle")?.0;
        if i >= b.len() || j >= b.len() {
            return Err((PspinStatus::OutOfRange, format!("index ({i}, {j}) outside {} rows", b.len())));
        }
        let f = match field {
            PspinField::C => &b.c,
            PspinField::R => &b.r,
            PspinField::Q => &b.q,
        };
        put(out, f.get(i, j), "out")
    })
}

/// Copies a one-time series (length [`pspin_bundle_len`]) into `buf`.
///
/// # Safety
/// `bundle` must be a live bundle handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pspin_bundle_series(
    bundle: *const PspinBundle,
    series: PspinSeries,
    buf: *mut f64,
    len: usize,
) -> PspinStatus {
    guard(|| {
        let b = &deref(bundle, "bundle")?.0;
        let src = match series {
            PspinSeries::M => &b.m,
            PspinSeries::K => &b.k,
            PspinSeries::D => &b.d,
            PspinSeries::Mu => &b.mu,
        };
        copy_out(src, buf, len)
    })
}

/// # Safety
/// `bundle` must be null or a live bundle handle, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pspin_bundle_free(bundle: *mut PspinBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Stationary overlap `Q^fdt(beta, h)`.
///
/// # Safety
/// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_solve_qfdt(beta: f64, h: f64, mix: *const PspinMixture, out: *mut f64) -> PspinStatus {
    guard(|| {
        let m = &deref(mix, "mix")?.0;
        let q = lib(solve_qfdt(beta, h, m))?;
        put(out, q, "out")
    })
}

/// Full stationary solution on the lag grid `0, dt, ..., tau_max`.
///
/// # Safety
/// `mix` must come from [`pspin_mixture_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_solve_fdt(
    beta: f64,
    h: f64,
    mix: *const PspinMixture,
    dt: f64,
    tau_max: f64,
    out: *mut *mut PspinFdt,
) -> PspinStatus {
    guard(|| {
        let m = &deref(mix, "mix")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = lib(solve_fdt(beta, h, m, dt, tau_max))?;
        put(out, Box::into_raw(Box::new(PspinFdt(s))), "out")
    })
}

/// Number of lags, 0 for a null handle.
///
/// # Safety
/// `fdt` must be null or a live FDT handle.
#[no_mangle]
pub unsafe extern "C" fn pspin_fdt_len(fdt: *const PspinFdt) -> usize {
    fdt.as_ref().map_or(0, |f| f.0.c_fdt.len())
}

/// Overlap, magnetization and drift coefficient of the stationary state.
///
/// # Safety
/// `fdt` must be a live FDT handle; each output must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_fdt_scalars(
    fdt: *const PspinFdt,
    q: *mut f64,
    m: *mut f64,
    mu: *mut f64,
) -> PspinStatus {
    guard(|| {
        let f = &deref(fdt, "fdt")?.0;
        for (p, v) in [(q, f.q_fdt), (m, f.m_fdt), (mu, f.mu_stat)] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Copies `C_fdt` (`field = C`) or `R_fdt` (`field = R`) into `buf`.
///
/// # Safety
/// `fdt` must be a live FDT handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pspin_fdt_copy(fdt: *const PspinFdt, field: PspinField, buf: *mut f64, len: usize) -> PspinStatus {
    guard(|| {
        let f = &deref(fdt, "fdt")?.0;
        let src = match field {
            PspinField::C => &f.c_fdt,
            PspinField::R => &f.r_fdt,
            PspinField::Q => return Err((PspinStatus::InvalidParameter, "Q is constant; use pspin_fdt_scalars".into())),
        };
        copy_out(src, buf, len)
    })
}

/// # Safety
/// `fdt` must be null or a live FDT handle, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pspin_fdt_free(fdt: *mut PspinFdt) {
    if !fdt.is_null() {
        drop(Box::from_raw(fdt));
    }
}

/// Predicted transition `beta_c(h)` and the overlap there.
///
/// # Safety
/// `mix` must come from [`pspin_mixture_new`]; `beta_out` must be valid,
/// `q_out` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pspin_beta_c(
    h: f64,
    mix: *const PspinMixture,
    tol: f64,
    beta_out: *mut f64,
    q_out: *mut f64,
) -> PspinStatus {
    guard(|| {
        let m = &deref(mix, "mix")?.0;
        if beta_out.is_null() {
            return Err(null("beta_out"));
        }
        let p = lib(beta_c(h, m, tol))?;
        beta_out.write(p.beta_c);
        if !q_out.is_null() {
            q_out.write(p.q_at_transition);
        }
        Ok(())
    })
}

/// Reads a NUL-terminated TOML configuration and validates it, without running anything.
///
/// # Safety
/// `text` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pspin_config_validate(text: *const c_char) -> PspinStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (PspinStatus::InvalidParameter, e.to_string()))?;
        let cfg = lib(pspin::cli::RunConfig::parse(s))?;
        lib(cfg.params())?;
        Ok(())
    })
}
