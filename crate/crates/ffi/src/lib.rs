//! C ABI over the sparsenet toolkit.
//!
//! The surface follows the usual opaque-handle pattern: constructors
//! return a status code and write a handle through an out-pointer, every
//! handle has a `_free` function, and accessors either return plain
//! values (with a documented null fallback) or copy into caller-owned
//! buffers. The last failure's message is kept per thread and readable
//! via [`snn_last_error_message`]. The generated header lives at
//! `include/sparsenet.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use sparsenet::error::Error;
use sparsenet::experiment::{self, config::Profile};
use sparsenet::spectral::{self, SpectralReport};
use sparsenet::topology::{self, BipartiteTopology, ConstructionKind, ConstructionSpec};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDegree = 3,
    MissingSeed = 4,
    DimensionMismatch = 5,
    NotSymmetric = 6,
    NoConvergence = 7,
    IoError = 8,
    ParseError = 9,
    DataError = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Bipartite construction selector, mirroring the core enum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnnConstruction {
    FullyConnected = 0,
    RandomEdge = 1,
    RandomRotating = 2,
    RandomDRegular = 3,
    RegularRotating = 4,
    LongShortRotating = 5,
    FibonacciRotating = 6,
}

impl From<SnnConstruction> for ConstructionKind {
    fn from(c: SnnConstruction) -> ConstructionKind {
        match c {
            SnnConstruction::FullyConnected => ConstructionKind::FullyConnected,
            SnnConstruction::RandomEdge => ConstructionKind::RandomEdge,
            SnnConstruction::RandomRotating => ConstructionKind::RandomRotating,
            SnnConstruction::RandomDRegular => ConstructionKind::RandomDRegular,
            SnnConstruction::RegularRotating => ConstructionKind::RegularRotating,
            SnnConstruction::LongShortRotating => ConstructionKind::LongShortRotating,
            SnnConstruction::FibonacciRotating => ConstructionKind::FibonacciRotating,
        }
    }
}

/// Opaque bipartite topology handle.
pub struct SnnTopology(BipartiteTopology);

/// Opaque spectral report handle.
pub struct SnnSpectralReport(SpectralReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_of(e: &Error) -> SnnStatus {
    match e {
        Error::InvalidDegree { .. } => SnnStatus::InvalidDegree,
        Error::MissingSeed(_) => SnnStatus::MissingSeed,
        Error::DimensionMismatch { .. } => SnnStatus::DimensionMismatch,
        Error::NotSymmetric { .. } => SnnStatus::NotSymmetric,
        Error::NoConvergence { .. } => SnnStatus::NoConvergence,
        Error::LabelOutOfRange { .. }
        | Error::ClassTooSmall { .. }
        | Error::BadMagic { .. }
        | Error::Malformed { .. } => SnnStatus::DataError,
        Error::InvalidConfig(_) => SnnStatus::InvalidArgument,
        Error::Parse(_) => SnnStatus::ParseError,
        Error::Io(_) => SnnStatus::IoError,
    }
}

fn fail(e: &Error) -> SnnStatus {
    set_error(&e.to_string());
    status_of(e)
}

fn guard(f: impl FnOnce() -> SnnStatus) -> SnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            SnnStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string or null.
unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, SnnStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(SnnStatus::NullPointer);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(&format!("{name} is not valid UTF-8"));
            Err(SnnStatus::InvalidArgument)
        }
    }
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn snn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn snn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Build a bipartite topology with `n` left (output-side) and `m` right
/// (input-side) vertices. `seed` is consumed only when `has_seed` is
/// true; the three random constructions require it. On success writes a
/// handle the caller must release with [`snn_topology_free`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_build(
    kind: SnnConstruction,
    k: usize,
    has_seed: bool,
    seed: u64,
    n: usize,
    m: usize,
    out: *mut *mut SnnTopology,
) -> SnnStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SnnStatus::NullPointer;
        }
        let spec = ConstructionSpec {
            kind: kind.into(),
            k,
            seed: has_seed.then_some(seed),
        };
        match topology::build(spec, n, m) {
            Ok(t) => {
                unsafe { *out = Box::into_raw(Box::new(SnnTopology(t))) };
                SnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a topology handle. Null is a no-op.
///
/// # Safety
/// `t` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_free(t: *mut SnnTopology) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

/// Left vertex count; 0 on null.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_left_count(t: *const SnnTopology) -> usize {
    unsafe { t.as_ref() }.map_or(0, |t| t.0.left_count())
}

/// Right vertex count; 0 on null.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_right_count(t: *const SnnTopology) -> usize {
    unsafe { t.as_ref() }.map_or(0, |t| t.0.right_count())
}

/// Number of edges; 0 on null.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_edge_count(t: *const SnnTopology) -> usize {
    unsafe { t.as_ref() }.map_or(0, |t| t.0.edge_count())
}

/// Fraction of possible edges present; 0.0 on null.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_density(t: *const SnnTopology) -> f64 {
    unsafe { t.as_ref() }.map_or(0.0, |t| t.0.density())
}

/// Construction that produced the topology; FullyConnected on null.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_construction(t: *const SnnTopology) -> SnnConstruction {
    let kind = unsafe { t.as_ref() }
        .map(|t| t.0.construction())
        .unwrap_or(ConstructionKind::FullyConnected);
    match kind {
        ConstructionKind::FullyConnected => SnnConstruction::FullyConnected,
        ConstructionKind::RandomEdge => SnnConstruction::RandomEdge,
        ConstructionKind::RandomRotating => SnnConstruction::RandomRotating,
        ConstructionKind::RandomDRegular => SnnConstruction::RandomDRegular,
        ConstructionKind::RegularRotating => SnnConstruction::RegularRotating,
        ConstructionKind::LongShortRotating => SnnConstruction::LongShortRotating,
        ConstructionKind::FibonacciRotating => SnnConstruction::FibonacciRotating,
    }
}

/// Recorded degree parameter k; 0 on null.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_k(t: *const SnnTopology) -> usize {
    unsafe { t.as_ref() }.map_or(0, |t| t.0.k())
}

/// Seed recorded for a randomized construction. Writes through `seed`
/// when present and returns whether one exists.
///
/// # Safety
/// `t` must be a live handle or null; `seed` may be null.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_seed(t: *const SnnTopology, seed: *mut u64) -> bool {
    match unsafe { t.as_ref() }.and_then(|t| t.0.seed()) {
        Some(s) => {
            if !seed.is_null() {
                unsafe { *seed = s };
            }
            true
        }
        None => false,
    }
}

/// Degree of one left vertex.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_row_degree(
    t: *const SnnTopology,
    row: usize,
    out: *mut usize,
) -> SnnStatus {
    guard(|| {
        let (Some(t), false) = (unsafe { t.as_ref() }, out.is_null()) else {
            set_error("null pointer");
            return SnnStatus::NullPointer;
        };
        if row >= t.0.left_count() {
            set_error("row out of range");
            return SnnStatus::InvalidArgument;
        }
        unsafe { *out = t.0.row(row).len() };
        SnnStatus::Ok
    })
}

/// Copy one row's sorted column indices into `buf` (capacity in
/// elements); writes the copied count through `written`.
///
/// # Safety
/// `buf` must point to at least `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_copy_row(
    t: *const SnnTopology,
    row: usize,
    buf: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> SnnStatus {
    guard(|| {
        let (Some(t), false, false) = (unsafe { t.as_ref() }, buf.is_null(), written.is_null())
        else {
            set_error("null pointer");
            return SnnStatus::NullPointer;
        };
        if row >= t.0.left_count() {
            set_error("row out of range");
            return SnnStatus::InvalidArgument;
        }
        let cols = t.0.row(row);
        if cols.len() > capacity {
            set_error("buffer too small for row");
            return SnnStatus::BufferTooSmall;
        }
        unsafe {
            std::ptr::copy_nonoverlapping(cols.as_ptr(), buf, cols.len());
            *written = cols.len();
        }
        SnnStatus::Ok
    })
}

/// Write the plain-text edge list (`n m construction k seed` header,
/// one `i j` line per edge).
///
/// # Safety
/// `t` must be a live handle, `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_write_edge_list(
    t: *const SnnTopology,
    path: *const c_char,
) -> SnnStatus {
    guard(|| {
        let Some(t) = (unsafe { t.as_ref() }) else {
            set_error("topology is null");
            return SnnStatus::NullPointer;
        };
        let path = match unsafe { str_arg(path, "path") } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match t.0.write_edge_list_path(path) {
            Ok(()) => SnnStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Read an edge-list file written by [`snn_topology_write_edge_list`].
///
/// # Safety
/// `path` must be a valid NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_topology_read_edge_list(
    path: *const c_char,
    out: *mut *mut SnnTopology,
) -> SnnStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SnnStatus::NullPointer;
        }
        let path = match unsafe { str_arg(path, "path") } {
            Ok(p) => p,
            Err(s) => return s,
        };
        match BipartiteTopology::read_edge_list_path(path) {
            Ok(t) => {
                unsafe { *out = Box::into_raw(Box::new(SnnTopology(t))) };
                SnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Compute the Laplacian spectral report of a topology. The handle must
/// be released with [`snn_spectral_free`].
///
/// # Safety
/// `t` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_analyze(
    t: *const SnnTopology,
    out: *mut *mut SnnSpectralReport,
) -> SnnStatus {
    guard(|| {
        let (Some(t), false) = (unsafe { t.as_ref() }, out.is_null()) else {
            set_error("null pointer");
            return SnnStatus::NullPointer;
        };
        match spectral::analyze(&t.0) {
            Ok(r) => {
                unsafe { *out = Box::into_raw(Box::new(SnnSpectralReport(r))) };
                SnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a spectral report handle. Null is a no-op.
///
/// # Safety
/// `r` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_free(r: *mut SnnSpectralReport) {
    if !r.is_null() {
        drop(unsafe { Box::from_raw(r) });
    }
}

/// Algebraic connectivity (Fiedler value, clamped to 0 when the graph
/// is disconnected); NaN on null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_lambda2(r: *const SnnSpectralReport) -> f64 {
    unsafe { r.as_ref() }.map_or(f64::NAN, |r| r.0.algebraic_connectivity_standard)
}

/// Largest Laplacian eigenvalue; NaN on null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_largest_nonzero(r: *const SnnSpectralReport) -> f64 {
    unsafe { r.as_ref() }.map_or(f64::NAN, |r| r.0.largest_nonzero)
}

/// Second-largest eigenvalue above the zero tolerance; NaN on null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_second_largest_nonzero(r: *const SnnSpectralReport) -> f64 {
    unsafe { r.as_ref() }.map_or(f64::NAN, |r| r.0.second_largest_nonzero)
}

/// Threshold below which eigenvalues count as zero; NaN on null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_zero_tolerance(r: *const SnnSpectralReport) -> f64 {
    unsafe { r.as_ref() }.map_or(f64::NAN, |r| r.0.zero_tolerance)
}

/// Connected component count; 0 on null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_component_count(r: *const SnnSpectralReport) -> usize {
    unsafe { r.as_ref() }.map_or(0, |r| r.0.component_count)
}

/// Number of eigenvalues (n + m); 0 on null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_eigenvalue_count(r: *const SnnSpectralReport) -> usize {
    unsafe { r.as_ref() }.map_or(0, |r| r.0.eigenvalues.len())
}

/// Copy the ascending eigenvalue list into `buf`.
///
/// # Safety
/// `buf` must point to at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn snn_spectral_copy_eigenvalues(
    r: *const SnnSpectralReport,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> SnnStatus {
    guard(|| {
        let (Some(r), false, false) = (unsafe { r.as_ref() }, buf.is_null(), written.is_null())
        else {
            set_error("null pointer");
            return SnnStatus::NullPointer;
        };
        let eig = &r.0.eigenvalues;
        if eig.len() > capacity {
            set_error("buffer too small for eigenvalues");
            return SnnStatus::BufferTooSmall;
        }
        unsafe {
            std::ptr::copy_nonoverlapping(eig.as_ptr(), buf, eig.len());
            *written = eig.len();
        }
        SnnStatus::Ok
    })
}

/// Run one training job from a TOML config file (same format as the
/// `sparsenet train` subcommand). `profile` is `"desk"` or `"paper"`;
/// artifacts configured in the file land under `out_dir`. Writes the
/// final test accuracy through `final_accuracy` when non-null.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn snn_train_file(
    config_path: *const c_char,
    profile: *const c_char,
    out_dir: *const c_char,
    base_seed: u64,
    final_accuracy: *mut f64,
) -> SnnStatus {
    guard(|| {
        let config_path = match unsafe { str_arg(config_path, "config_path") } {
            Ok(p) => PathBuf::from(p),
            Err(s) => return s,
        };
        let profile = match unsafe { str_arg(profile, "profile") } {
            Ok(p) => match p.parse::<Profile>() {
                Ok(p) => p,
                Err(e) => return fail(&e),
            },
            Err(s) => return s,
        };
        let out_dir = match unsafe { str_arg(out_dir, "out_dir") } {
            Ok(p) => PathBuf::from(p),
            Err(s) => return s,
        };
        let spec = match experiment::config::load_train_spec(&config_path, profile, base_seed) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        match experiment::run_single_train(&spec, &out_dir) {
            Ok((record, _)) => {
                if !final_accuracy.is_null() {
                    unsafe { *final_accuracy = record.final_accuracy() };
                }
                SnnStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
