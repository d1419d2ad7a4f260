//! C interface to `ljsearch`.
//!
//! Configurations and regions cross the boundary as opaque handles created
//! by `*_new`/`*_generate` functions and released with the matching `*_free`.
//! Coordinates are flat `x0 y0 z0 x1 ...` arrays of doubles. Every fallible
//! call returns an `LjsStatus`; on failure `ljs_last_error` describes the
//! problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ljsearch::evolve::{evolve_n, EvolveConfig};
use ljsearch::lattices::{enumerate_region, generate, LatticeKind, Region};
use ljsearch::matching::match_cluster;
use ljsearch::minimize::{minimize, MinimizeSettings};
use ljsearch::oracle::count_combinations;
use ljsearch::parallel::BestStore;
use ljsearch::potential::{gradient, total_energy};
use ljsearch::structure::{classify, NucleusClass};
use ljsearch::{Configuration, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LjsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Coincident = 4,
    Numerical = 5,
    InsufficientRegion = 6,
    EmptyRegion = 7,
    SearchFailed = 8,
    Overflow = 9,
    Io = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LjsLattice {
    Cb = 0,
    Ic = 1,
    Fc = 2,
    If = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LjsClass {
    N1Ic = 0,
    N1Ir = 1,
    N0Ic = 2,
    N3 = 3,
    N4 = 4,
    N5 = 5,
    N6 = 6,
    N7 = 7,
    Unclassified = 8,
}

/// Opaque particle configuration.
pub struct LjsConfiguration(Configuration);

/// Opaque enumerated lattice region.
pub struct LjsRegion(Region);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LjsStatus {
    match e {
        Error::Coincident(..) => LjsStatus::Coincident,
        Error::Numerical { .. } => LjsStatus::Numerical,
        Error::InsufficientRegion { .. } => LjsStatus::InsufficientRegion,
        Error::EmptyRegion => LjsStatus::EmptyRegion,
        Error::NoUnusedIds | Error::SiteSearch | Error::Construction(_) => LjsStatus::SearchFailed,
        Error::BudgetExceeded { .. } => LjsStatus::Overflow,
        Error::Io(_) | Error::Parse { .. } => LjsStatus::Io,
        Error::Domain(_) => LjsStatus::InvalidArgument,
    }
}

struct Fail(LjsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(LjsStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LjsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LjsStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            LjsStatus::Panic
        }
    }
}

unsafe fn flat<'a>(coords: *const f64, n: usize) -> Result<&'a [f64], Fail> {
    if coords.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(coords, 3 * n))
}

unsafe fn write_out<T: Copy>(src: &[T], out: *mut T, cap: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    if cap < src.len() {
        return Err(Fail(LjsStatus::BufferTooSmall, format!("buffer holds {cap} values, {} needed", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

unsafe fn config<'a>(c: *const LjsConfiguration) -> Result<&'a Configuration, Fail> {
    c.as_ref().map(|c| &c.0).ok_or_else(null)
}

unsafe fn set<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread; empty when none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ljs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a configuration from `n` particles (`3n` doubles).
///
/// # Safety
/// `coords` must point to `3n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_configuration_new(coords: *const f64, n: usize, out: *mut *mut LjsConfiguration) -> LjsStatus {
    guard(|| {
        let c = Configuration::from_flat(flat(coords, n)?)?;
        set(out, Box::into_raw(Box::new(LjsConfiguration(c))))
    })
}

/// # Safety
/// `c` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ljs_configuration_free(c: *mut LjsConfiguration) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of particles; 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ljs_configuration_len(c: *const LjsConfiguration) -> usize {
    c.as_ref().map_or(0, |c| c.0.len())
}

/// Copies the coordinates into `out`, which must hold `3 * len` doubles.
///
/// # Safety
/// `c` must be a live handle and `out` must hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ljs_configuration_coords(c: *const LjsConfiguration, out: *mut f64, cap: usize) -> LjsStatus {
    guard(|| write_out(&config(c)?.to_flat(), out, cap))
}

/// # Safety
/// `c` must be a live handle and `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_energy(c: *const LjsConfiguration, energy: *mut f64) -> LjsStatus {
    guard(|| set(energy, total_energy(config(c)?)?))
}

/// # Safety
/// `c` must be a live handle and `out` must hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ljs_gradient(c: *const LjsConfiguration, out: *mut f64, cap: usize) -> LjsStatus {
    guard(|| write_out(&gradient(config(c)?)?, out, cap))
}

/// Local minimization. `grad_tol <= 0` or `max_iters == 0` select the
/// defaults. The minimized configuration is a new handle.
///
/// # Safety
/// `c` must be a live handle; `out` and `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_minimize(
    c: *const LjsConfiguration,
    grad_tol: f64,
    max_iters: usize,
    out: *mut *mut LjsConfiguration,
    energy: *mut f64,
) -> LjsStatus {
    guard(|| {
        let mut s = MinimizeSettings::default();
        if grad_tol > 0.0 {
            s.grad_tol = grad_tol;
        }
        if max_iters > 0 {
            s.max_iters = max_iters;
        }
        let r = minimize(config(c)?, &s)?;
        set(energy, r.energy)?;
        set(out, Box::into_raw(Box::new(LjsConfiguration(r.config))))
    })
}

/// # Safety
/// `c` must be a live handle and `class` writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_classify(c: *const LjsConfiguration, class: *mut LjsClass) -> LjsStatus {
    guard(|| {
        let k = match classify(config(c)?) {
            NucleusClass::N1Ic => LjsClass::N1Ic,
            NucleusClass::N1Ir => LjsClass::N1Ir,
            NucleusClass::N0Ic => LjsClass::N0Ic,
            NucleusClass::N3 => LjsClass::N3,
            NucleusClass::N4 => LjsClass::N4,
            NucleusClass::N5 => LjsClass::N5,
            NucleusClass::N6 => LjsClass::N6,
            NucleusClass::N7 => LjsClass::N7,
            NucleusClass::Unclassified => LjsClass::Unclassified,
        };
        set(class, k)
    })
}

/// Static name such as `N1_IC`.
#[no_mangle]
pub extern "C" fn ljs_class_name(class: LjsClass) -> *const c_char {
    let s: &'static [u8] = match class {
        LjsClass::N1Ic => b"N1_IC\0",
        LjsClass::N1Ir => b"N1_IR\0",
        LjsClass::N0Ic => b"N0_IC\0",
        LjsClass::N3 => b"N3\0",
        LjsClass::N4 => b"N4\0",
        LjsClass::N5 => b"N5\0",
        LjsClass::N6 => b"N6\0",
        LjsClass::N7 => b"N7\0",
        LjsClass::Unclassified => b"UNCLASSIFIED\0",
    };
    s.as_ptr().cast()
}

/// Generates a lattice region: `size` is the half-width for `Cb` and the
/// shell count otherwise.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_region_generate(kind: LjsLattice, size: u32, out: *mut *mut LjsRegion) -> LjsStatus {
    guard(|| {
        let k = match kind {
            LjsLattice::Cb => LatticeKind::Cb,
            LjsLattice::Ic => LatticeKind::Ic,
            LjsLattice::Fc => LatticeKind::Fc,
            LjsLattice::If => LatticeKind::If,
        };
        set(out, Box::into_raw(Box::new(LjsRegion(generate(k, size)?))))
    })
}

/// Region from `n` arbitrary distinct points, numbered from the core out.
///
/// # Safety
/// `coords` must point to `3n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_region_from_points(coords: *const f64, n: usize, out: *mut *mut LjsRegion) -> LjsStatus {
    guard(|| {
        let pts = Configuration::from_flat(flat(coords, n)?)?.into_points();
        set(out, Box::into_raw(Box::new(LjsRegion(enumerate_region(pts)?))))
    })
}

/// # Safety
/// `r` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ljs_region_free(r: *mut LjsRegion) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ljs_region_len(r: *const LjsRegion) -> usize {
    r.as_ref().map_or(0, |r| r.0.len())
}

/// Copies the points in id order (id 1 first).
///
/// # Safety
/// `r` must be a live handle and `out` must hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ljs_region_points(r: *const LjsRegion, out: *mut f64, cap: usize) -> LjsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(null)?;
        let flat: Vec<f64> = r.0.points().iter().flat_map(|p| p.to_array()).collect();
        write_out(&flat, out, cap)
    })
}

/// Writes the 1-based region id matched to each particle into `ids`.
///
/// # Safety
/// `c` and `r` must be live handles and `ids` must hold `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn ljs_match(
    c: *const LjsConfiguration,
    r: *const LjsRegion,
    ids: *mut usize,
    cap: usize,
) -> LjsStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(null)?;
        let m = match_cluster(config(c)?.points(), &r.0)?;
        write_out(&m.ids, ids, cap)
    })
}

/// `C(m, n)`; `LJS_STATUS_OVERFLOW` when it does not fit in 64 bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_count_combinations(m: u64, n: u64, out: *mut u64) -> LjsStatus {
    guard(|| {
        let big = count_combinations(m, n)?;
        let v = u64::try_from(&big).map_err(|_| Fail(LjsStatus::Overflow, format!("C({m}, {n}) = {big} exceeds 64 bits")))?;
        set(out, v)
    })
}

/// Evolutionary search for an `n`-particle cluster. `regions` may be null
/// (with `n_regions == 0`) to use regions sized for `n`.
///
/// # Safety
/// `regions` must point to `n_regions` live handles; `out` and `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn ljs_evolve(
    n: usize,
    regions: *const *const LjsRegion,
    n_regions: usize,
    seed: u64,
    out: *mut *mut LjsConfiguration,
    energy: *mut f64,
) -> LjsStatus {
    guard(|| {
        let regions = if n_regions == 0 {
            EvolveConfig::default_regions(n)
        } else {
            if regions.is_null() {
                return Err(null());
            }
            std::slice::from_raw_parts(regions, n_regions)
                .iter()
                .map(|&r| r.as_ref().map(|r| r.0.clone()).ok_or_else(null))
                .collect::<Result<_, _>>()?
        };
        let cfg = EvolveConfig { seed, regions, ..Default::default() };
        let o = evolve_n(n, &cfg, &[], &mut BestStore::new(), None)?;
        set(energy, o.best.energy)?;
        set(out, Box::into_raw(Box::new(LjsConfiguration(o.best.config))))
    })
}
