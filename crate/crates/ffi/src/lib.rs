//! C ABI for the DMKP laboratory.
//!
//! Objects are opaque handles created by `dmkp_*_new` style functions and
//! released with the matching `dmkp_*_free`. Every fallible function returns
//! a [`DmkpStatus`]; on failure the message is available from
//! [`dmkp_last_error_message`] on the same thread. Output pointers are only
//! written on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use dmkp_core::illposed::{iterate_norm, ScanConfig};
use dmkp_core::io::{read_snapshot, write_snapshot, SnapshotManifest};
use dmkp_core::norms::sobolev_norm;
use dmkp_core::propagator::simulate;
use dmkp_core::spectral::{forward, inverse, RealField, SpectralField, SpectralGrid};
use dmkp_core::symbols::{DissipationKind, ModelParams};
use dmkp_core::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmkpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Io = 4,
    Panic = 5,
}

/// Dissipation symbol selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmkpDissipation {
    /// `alpha (xi^4 - xi^2)`
    Dmkp = 0,
    /// `alpha xi^2`
    Burgers = 1,
    None = 2,
}

/// Periodic grid.
pub struct DmkpGrid {
    inner: Arc<SpectralGrid>,
}

/// Real field on a grid, held by its Fourier coefficients.
pub struct DmkpField {
    inner: SpectralField,
}

/// Model coefficients.
pub struct DmkpParams {
    inner: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DmkpStatus {
    match e {
        Error::Io(_) | Error::Format { .. } => DmkpStatus::Io,
        _ if e.exit_code() == 3 => DmkpStatus::NumericalFailure,
        _ => DmkpStatus::InvalidArgument,
    }
}

struct Fail(DmkpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DmkpStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DmkpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DmkpStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            DmkpStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DmkpStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dmkp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn dmkp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmkp_params_new(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    dissipation: DmkpDissipation,
    out: *mut *mut DmkpParams,
) -> DmkpStatus {
    guard(|| {
        let kind = match dissipation {
            DmkpDissipation::Dmkp => DissipationKind::Dmkp,
            DmkpDissipation::Burgers => DissipationKind::Burgers,
            DmkpDissipation::None => DissipationKind::None,
        };
        let inner = ModelParams::new(alpha, beta, epsilon, kind)?;
        put(out, DmkpParams { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmkp_params_free(params: *mut DmkpParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Grid with `nx x ny` points on `[0, lx) x [0, ly)`; `nx` even, `ny` even or 1.
#[no_mangle]
pub unsafe extern "C" fn dmkp_grid_new(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    out: *mut *mut DmkpGrid,
) -> DmkpStatus {
    guard(|| {
        let inner = SpectralGrid::new(nx, ny, lx, ly)?;
        put(out, DmkpGrid { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmkp_grid_free(grid: *mut DmkpGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of samples `nx * ny`.
#[no_mangle]
pub unsafe extern "C" fn dmkp_grid_len(grid: *const DmkpGrid, out: *mut usize) -> DmkpStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = g.inner.len();
        Ok(())
    })
}

/// Field from `len = nx * ny` real samples, row-major with `y` outer.
#[no_mangle]
pub unsafe extern "C" fn dmkp_field_from_real(
    grid: *const DmkpGrid,
    data: *const f64,
    len: usize,
    out: *mut *mut DmkpField,
) -> DmkpStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        if data.is_null() {
            return Err(null("data"));
        }
        let samples = std::slice::from_raw_parts(data, len).to_vec();
        let real = RealField::new(g.inner.clone(), samples)?;
        put(out, DmkpField { inner: forward(&real) })
    })
}

/// Writes the real samples of `field` into `data`, which must hold `len = nx * ny` values.
#[no_mangle]
pub unsafe extern "C" fn dmkp_field_to_real(field: *const DmkpField, data: *mut f64, len: usize) -> DmkpStatus {
    guard(|| {
        let f = borrow(field, "field")?;
        if data.is_null() {
            return Err(null("data"));
        }
        let real = inverse(&f.inner);
        if real.data().len() != len {
            return Err(Error::SizeMismatch {
                expected: real.data().len(),
                actual: len,
            }
            .into());
        }
        std::slice::from_raw_parts_mut(data, len).copy_from_slice(real.data());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmkp_field_free(field: *mut DmkpField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// `||u||_{H^{s1,s2}}`.
#[no_mangle]
pub unsafe extern "C" fn dmkp_field_sobolev_norm(
    field: *const DmkpField,
    s1: f64,
    s2: f64,
    out: *mut f64,
) -> DmkpStatus {
    guard(|| {
        let f = borrow(field, "field")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = sobolev_norm(&f.inner, s1, s2);
        Ok(())
    })
}

/// Evolves `initial` to `t_final` with step `dt`; the result is a new field.
#[no_mangle]
pub unsafe extern "C" fn dmkp_simulate(
    initial: *const DmkpField,
    params: *const DmkpParams,
    t_final: f64,
    dt: f64,
    out: *mut *mut DmkpField,
) -> DmkpStatus {
    guard(|| {
        let f = borrow(initial, "initial")?;
        let p = borrow(params, "params")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let state = simulate(&f.inner, t_final, dt, &p.inner, usize::MAX, |_| {})?;
        put(out, DmkpField { inner: state.field })
    })
}

/// `||u_{2,N}(t_N)||_{H^{s,0}}` of the second iterate of the rectangle data,
/// with quadrature order `order` (at least 8) on every axis.
#[no_mangle]
pub unsafe extern "C" fn dmkp_illposed_iterate_norm(
    n: f64,
    s: f64,
    eps: f64,
    order: usize,
    params: *const DmkpParams,
    out: *mut f64,
) -> DmkpStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let cfg = ScanConfig {
            eps,
            outer: (order, order),
            inner: (order, order),
            ..ScanConfig::default()
        };
        cfg.validate()?;
        *out = iterate_norm(n, s, &p.inner, &cfg)?;
        Ok(())
    })
}

/// Writes `field` as an FLD1 snapshot with its JSON sidecar.
#[no_mangle]
pub unsafe extern "C" fn dmkp_snapshot_write(field: *const DmkpField, time: f64, path: *const c_char) -> DmkpStatus {
    guard(|| {
        let f = borrow(field, "field")?;
        let path = path_arg(path)?;
        let real = inverse(&f.inner);
        let m = SnapshotManifest::new(&real, time, None, None, "ffi");
        write_snapshot(path, &real, &m)?;
        Ok(())
    })
}

/// Reads an FLD1 snapshot; returns a new grid and field, and the stored time.
#[no_mangle]
pub unsafe extern "C" fn dmkp_snapshot_read(
    path: *const c_char,
    grid_out: *mut *mut DmkpGrid,
    field_out: *mut *mut DmkpField,
    time_out: *mut f64,
) -> DmkpStatus {
    guard(|| {
        let path = path_arg(path)?;
        if grid_out.is_null() || field_out.is_null() || time_out.is_null() {
            return Err(null("output pointer"));
        }
        let (real, _) = read_snapshot(path)?;
        let time = dmkp_core::io::snapshot_time(path)?;
        let grid = real.grid().clone();
        put(grid_out, DmkpGrid { inner: grid })?;
        put(field_out, DmkpField { inner: forward(&real) })?;
        *time_out = time;
        Ok(())
    })
}
