//! C interface to `tms-core`.
//!
//! Every function returns a [`TmsStatus`] and writes results through out
//! pointers. Specs and grids are opaque handles created by `*_new` and released
//! by `*_free`. After a failure, `tms_last_error` copies the message of the most
//! recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use tms_core::appendixcheck::schur_bounds;
use tms_core::kernels::{kernel_t, kernel_w, KernelSpec};
use tms_core::numerics::{GridSpec, Measure, RadialGrid};
use tms_core::operators::bottom;
use tms_core::params::{efimov_lambda, solve_s_of_m, thresholds};
use tms_core::zeromode::{cancellation_coefficient, smallest_singular};
use tms_core::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    NotBracketed = 3,
    NotConverged = 4,
    LinearAlgebra = 5,
    Mismatch = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// Radial measure selector for [`tms_grid_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmsMeasure {
    L2 = 0,
    Hminus12 = 1,
    Hplus12 = 2,
    Hminus32 = 3,
}

/// Opaque kernel specification.
pub struct TmsSpec(KernelSpec);

/// Opaque radial grid.
pub struct TmsGrid(Arc<RadialGrid>);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TmsThresholds {
    pub m_star: f64,
    pub m_star_star: f64,
    pub m_minlos: f64,
    pub m_of_zero: f64,
    pub cross_consistency: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TmsSchur {
    pub sup_row: f64,
    pub sup_col: f64,
    pub argmax_r: f64,
    pub refinement_delta: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TmsStatus {
    match e {
        Error::Domain(_) => TmsStatus::Domain,
        Error::NotBracketed { .. } => TmsStatus::NotBracketed,
        Error::NotConverged { .. } => TmsStatus::NotConverged,
        Error::LinearAlgebra(_) => TmsStatus::LinearAlgebra,
        Error::Mismatch(_) => TmsStatus::Mismatch,
    }
}

fn guard(f: impl FnOnce() -> Result<(), TmsStatus>) -> TmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TmsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside tms-core".into());
            TmsStatus::Panic
        }
    }
}

fn lift<T>(r: tms_core::Result<T>) -> Result<T, TmsStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> TmsStatus {
    set_error("null pointer argument".into());
    TmsStatus::NullPointer
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn write<T>(out: *mut T, v: T) -> Result<(), TmsStatus> {
    if out.is_null() {
        return Err(null());
    }
    unsafe { out.write(v) };
    Ok(())
}

/// # Safety
/// `h` must be null or a live handle from this library.
unsafe fn borrow<'a, T>(h: *const T) -> Result<&'a T, TmsStatus> {
    unsafe { h.as_ref() }.ok_or_else(null)
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tms_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                buf.add(n).write(0);
            }
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_efimov_lambda(m: f64, out: *mut f64) -> TmsStatus {
    guard(|| unsafe { write(out, lift(efimov_lambda(m))?) })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_thresholds(out: *mut TmsThresholds) -> TmsStatus {
    guard(|| {
        let r = lift(thresholds())?;
        let t = TmsThresholds {
            m_star: r.m_star,
            m_star_star: r.m_star_star,
            m_minlos: r.m_minlos,
            m_of_zero: r.m_of_zero,
            cross_consistency: r.cross_consistency,
        };
        unsafe { write(out, t) }
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_s_of_m(m: f64, out: *mut f64) -> TmsStatus {
    guard(|| unsafe { write(out, lift(solve_s_of_m(m))?.x) })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_cancellation_coefficient(s: f64, m: f64, k: f64, p: f64, out: *mut f64) -> TmsStatus {
    guard(|| unsafe { write(out, lift(cancellation_coefficient(s, m, k, p))?) })
}

/// Creates a kernel spec for mass ratio `m`, sector `ell`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_spec_new(m: f64, lambda: f64, alpha: f64, ell: c_int, out: *mut *mut TmsSpec) -> TmsStatus {
    guard(|| {
        let ell = usize::try_from(ell).map_err(|_| {
            set_error(format!("ell must be non-negative, got {ell}"));
            TmsStatus::InvalidArgument
        })?;
        let spec = lift(KernelSpec::from_mass(m, lambda, alpha, ell))?;
        unsafe { write(out, Box::into_raw(Box::new(TmsSpec(spec)))) }
    })
}

/// # Safety
/// `spec` must be null or a handle from `tms_spec_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tms_spec_free(spec: *mut TmsSpec) {
    if !spec.is_null() {
        drop(unsafe { Box::from_raw(spec) });
    }
}

/// # Safety
/// `spec` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_kernel_t(spec: *const TmsSpec, r: f64, rp: f64, out: *mut f64) -> TmsStatus {
    guard(|| unsafe { write(out, lift(kernel_t(&borrow(spec)?.0, r, rp))?) })
}

/// # Safety
/// `spec` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_kernel_w(spec: *const TmsSpec, r: f64, rp: f64, out: *mut f64) -> TmsStatus {
    guard(|| unsafe { write(out, lift(kernel_w(&borrow(spec)?.0, r, rp))?) })
}

/// Builds a geometric panel grid on `[r_min, r_max]` plus the origin panel.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_grid_new(
    n_panels: usize,
    nodes_per_panel: usize,
    r_min: f64,
    r_max: f64,
    measure: TmsMeasure,
    out: *mut *mut TmsGrid,
) -> TmsStatus {
    guard(|| {
        let measure = match measure {
            TmsMeasure::L2 => Measure::L2,
            TmsMeasure::Hminus12 => Measure::Hminus12,
            TmsMeasure::Hplus12 => Measure::Hplus12,
            TmsMeasure::Hminus32 => Measure::Hminus32,
        };
        let g = lift(GridSpec { n_panels, nodes_per_panel, r_min, r_max }.build(measure))?;
        unsafe { write(out, Box::into_raw(Box::new(TmsGrid(Arc::new(g))))) }
    })
}

/// # Safety
/// `grid` must be null or a handle from `tms_grid_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tms_grid_free(grid: *mut TmsGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// # Safety
/// `grid` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_grid_len(grid: *const TmsGrid, out: *mut usize) -> TmsStatus {
    guard(|| unsafe { write(out, borrow(grid)?.0.len()) })
}

/// Bottom of `2(T + α)` against `W`; the grid should carry the `L2` measure.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_bottom(spec: *const TmsSpec, grid: *const TmsGrid, out: *mut f64) -> TmsStatus {
    guard(|| unsafe {
        let (s, g) = (borrow(spec)?, borrow(grid)?);
        write(out, lift(bottom(&s.0, g.0.clone()))?.value)
    })
}

/// Two smallest singular values in the `H^{-1/2} → H^{-3/2}` geometry; the
/// grid must carry the `Hminus12` measure.
///
/// # Safety
/// Handles must be live; out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_smallest_singular(
    spec: *const TmsSpec,
    grid: *const TmsGrid,
    sigma_min: *mut f64,
    sigma_next: *mut f64,
) -> TmsStatus {
    guard(|| unsafe {
        let (s, g) = (borrow(spec)?, borrow(grid)?);
        if sigma_min.is_null() || sigma_next.is_null() {
            return Err(null());
        }
        let p = lift(smallest_singular(&s.0, g.0.clone()))?;
        write(sigma_min, p.sigma_min)?;
        write(sigma_next, p.sigma_next)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tms_schur_bounds(
    ell: usize,
    n_panels: usize,
    nodes_per_panel: usize,
    r_min: f64,
    r_max: f64,
    out: *mut TmsSchur,
) -> TmsStatus {
    guard(|| {
        let r = lift(schur_bounds(ell, &GridSpec { n_panels, nodes_per_panel, r_min, r_max }))?;
        let s = TmsSchur {
            sup_row: r.sup_row,
            sup_col: r.sup_col,
            argmax_r: r.argmax_r,
            refinement_delta: r.refinement_delta,
        };
        unsafe { write(out, s) }
    })
}
