//! C ABI over `fracspec`.
//!
//! Every function returns an `FsStatus` code; on failure a message is kept
//! per thread and read with [`fs_last_error`]. Handles are opaque and must be
//! released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fracspec::applications::{beta_h, filtering_error, gamma_h, p_inf, solve_perturbed, Forcing};
use fracspec::asymptotics::{lambda_fbm, lambda_fbn, Order};
use fracspec::iasolver::{solve_fbn, solve_nu_fbm};
use fracspec::nystrom::{eigenfunction_at, reference_spectrum_with, ReferenceConfig, SymmetricSpectrum};
use fracspec::operators::{KernelFamily, KernelSpec};
use fracspec::sampler::{kl_sample, PathSample};
use fracspec::Error;

pub const FS_OK: i32 = 0;
/// Argument outside its valid range.
pub const FS_ERR_INVALID: i32 = 2;
/// A numerical routine failed to converge.
pub const FS_ERR_NUMERICAL: i32 = 3;
/// A required pointer was null.
pub const FS_ERR_NULL: i32 = 4;
/// Internal panic caught at the boundary.
pub const FS_ERR_PANIC: i32 = 5;

pub const FS_MODEL_FBM: i32 = 0;
pub const FS_MODEL_FBN: i32 = 1;

pub const FS_ORDER_FIRST: i32 = 1;
pub const FS_ORDER_SECOND: i32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> i32 {
    let code = if e.is_validation() { FS_ERR_INVALID } else { FS_ERR_NUMERICAL };
    set_error(e.to_string());
    code
}

fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FS_OK,
        Ok(Err(code)) => code,
        Err(_) => {
            set_error("internal panic".into());
            FS_ERR_PANIC
        }
    }
}

fn null() -> i32 {
    set_error("null pointer argument".into());
    FS_ERR_NULL
}

fn invalid(msg: &str) -> i32 {
    set_error(msg.into());
    FS_ERR_INVALID
}

fn kernel(model: i32, h: f64) -> Result<KernelSpec, i32> {
    match model {
        FS_MODEL_FBM => KernelSpec::fbm(h).map_err(fail),
        FS_MODEL_FBN => KernelSpec::fbn(h).map_err(fail),
        _ => Err(invalid("unknown model")),
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Asymptotic eigenvalue λ_n (order 1 or 2).
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn fs_lambda_asymptotic(model: i32, order: i32, n: usize, h: f64, out: *mut f64) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let ord = match order {
            FS_ORDER_FIRST => Order::FirstOrder,
            FS_ORDER_SECOND => Order::SecondOrder,
            _ => return Err(invalid("order must be 1 or 2")),
        };
        let v = match model {
            FS_MODEL_FBM => lambda_fbm(n, h, ord),
            FS_MODEL_FBN => lambda_fbn(n, h, ord),
            _ => return Err(invalid("unknown model")),
        }
        .map_err(fail)?;
        *out = v;
        Ok(())
    })
}

/// Frequency ν_n and eigenvalue λ_n from the integro-algebraic solver.
///
/// # Safety
/// `nu` and `lambda` must be null or point to writable `double`s.
#[no_mangle]
pub unsafe extern "C" fn fs_solve_mode(model: i32, n: usize, h: f64, nu: *mut f64, lambda: *mut f64) -> i32 {
    guard(|| {
        if nu.is_null() || lambda.is_null() {
            return Err(null());
        }
        let (v, l) = match model {
            FS_MODEL_FBM => solve_nu_fbm(n, h).map(|s| (s.nu, s.lambda())),
            FS_MODEL_FBN => solve_fbn(n, h).map(|s| (s.nu, s.lambda())),
            _ => return Err(invalid("unknown model")),
        }
        .map_err(fail)?;
        *nu = v;
        *lambda = l;
        Ok(())
    })
}

/// Reference spectrum of a discretised covariance operator.
pub struct FsSpectrum(SymmetricSpectrum);

/// Computes the first `n_max` eigenpairs on a grid of `n_grid` points.
///
/// # Safety
/// `out` must be null or point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_spectrum_new(model: i32, h: f64, n_grid: usize, n_max: usize, out: *mut *mut FsSpectrum) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let k = kernel(model, h)?;
        let s = reference_spectrum_with(&k, ReferenceConfig::new(n_grid, n_max).unchecked()).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsSpectrum(s)));
        Ok(())
    })
}

/// Number of eigenvalues held by the handle (0 for null).
///
/// # Safety
/// `s` must be null or a live handle from [`fs_spectrum_new`].
#[no_mangle]
pub unsafe extern "C" fn fs_spectrum_len(s: *const FsSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.0.eigenvalues.len())
}

/// λ_n, 1-based.
///
/// # Safety
/// `s` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fs_spectrum_eigenvalue(s: *const FsSpectrum, n: usize, out: *mut f64) -> i32 {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            return Err(null());
        };
        if n == 0 || n > s.0.eigenvalues.len() {
            return Err(fail(Error::Index { index: n, available: s.0.eigenvalues.len() }));
        }
        *out = s.0.eigenvalues[n - 1];
        Ok(())
    })
}

/// φ_n(x), 1-based, x in [0,1].
///
/// # Safety
/// `s` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fs_spectrum_eigenfunction(s: *const FsSpectrum, n: usize, x: f64, out: *mut f64) -> i32 {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            return Err(null());
        };
        *out = eigenfunction_at(&s.0, n, x).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from [`fs_spectrum_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_spectrum_free(s: *mut FsSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Karhunen–Loève fBm paths.
pub struct FsSample(PathSample);

/// Draws `count` paths on the `grid_len` times in `grid`.
///
/// # Safety
/// `grid` must point to `grid_len` readable doubles; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fs_sample_new(
    h: f64,
    n_modes: usize,
    grid: *const f64,
    grid_len: usize,
    count: usize,
    seed: u64,
    out: *mut *mut FsSample,
) -> i32 {
    guard(|| {
        if out.is_null() || (grid.is_null() && grid_len > 0) {
            return Err(null());
        }
        let g = if grid_len == 0 { &[][..] } else { std::slice::from_raw_parts(grid, grid_len) };
        let s = kl_sample(h, n_modes, g, count, seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsSample(s)));
        Ok(())
    })
}

/// Number of paths (0 for null).
///
/// # Safety
/// `s` must be null or a live handle from [`fs_sample_new`].
#[no_mangle]
pub unsafe extern "C" fn fs_sample_count(s: *const FsSample) -> usize {
    s.as_ref().map_or(0, |s| s.0.paths.len())
}

/// Copies path `i` (0-based) into `buf`, which holds `len` doubles.
///
/// # Safety
/// `s` must be null or a live handle; `buf` null or writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_sample_path(s: *const FsSample, i: usize, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), buf.is_null()) else {
            return Err(null());
        };
        let Some(p) = s.0.paths.get(i) else {
            return Err(fail(Error::Index { index: i, available: s.0.paths.len() }));
        };
        if len < p.len() {
            return Err(invalid("buffer shorter than the time grid"));
        }
        std::slice::from_raw_parts_mut(buf, p.len()).copy_from_slice(p);
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from [`fs_sample_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_sample_free(s: *mut FsSample) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// β(H), γ(H) of the small-ball asymptotics.
///
/// # Safety
/// `beta` and `gamma` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn fs_small_ball_constants(h: f64, beta: *mut f64, gamma: *mut f64) -> i32 {
    guard(|| {
        if beta.is_null() || gamma.is_null() {
            return Err(null());
        }
        *beta = beta_h(h).map_err(fail)?;
        *gamma = gamma_h(h).map_err(fail)?;
        Ok(())
    })
}

/// Steady-state filtering error P_∞(H, a).
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn fs_p_inf(h: f64, a: f64, out: *mut f64) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = p_inf(h, a).map_err(fail)?;
        Ok(())
    })
}

/// P_T for each of the `len` horizons in `t`, written to `out`.
///
/// # Safety
/// `t` must be readable and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_filtering_error(h: f64, a: f64, t: *const f64, len: usize, out: *mut f64) -> i32 {
    guard(|| {
        if t.is_null() || out.is_null() {
            return Err(null());
        }
        let r = filtering_error(h, a, std::slice::from_raw_parts(t, len)).map_err(fail)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&r.p_t);
        Ok(())
    })
}

/// ‖u_ε − u₀‖₂ and u_ε(1) for εu + K̃u = 1, 1/2 < H < 1.
///
/// # Safety
/// `l2_error` and `endpoint` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn fs_perturbed(h: f64, eps: f64, l2_error: *mut f64, endpoint: *mut f64) -> i32 {
    guard(|| {
        if l2_error.is_null() || endpoint.is_null() {
            return Err(null());
        }
        let k = KernelSpec::new(KernelFamily::FbnDirect, h).map_err(fail)?;
        let s = solve_perturbed(&k, eps, Forcing::One).map_err(fail)?;
        *l2_error = s.diagnostics.l2_error.unwrap_or(f64::NAN);
        *endpoint = s.diagnostics.endpoint_value;
        Ok(())
    })
}
