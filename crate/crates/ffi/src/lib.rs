//! C interface to symbohm.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `symbohm_*_new` or producing call and released by the matching
//! `symbohm_*_free`. Functions return a [`SymbohmStatus`]; on failure
//! `symbohm_last_error` gives a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use symbohm::field::{amplitude, gaussian_packet_at, WavefunctionField};
use symbohm::grid::Grid1D;
use symbohm::guidance::{symmetric_fields, GuidanceField};
use symbohm::propagate::{evolve_window, EvolutionRecord, Potential};
use symbohm::scenarios::{self, ScenarioConfig};
use symbohm::verify::{self, VerifyConfig};
use symbohm::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbohmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Bad configuration, grid, window or packet.
    Config = 3,
    /// Failure inside the numerics.
    Numeric = 4,
    Io = 5,
    Panic = 6,
}

pub struct SymbohmGrid {
    inner: Grid1D,
}

pub struct SymbohmWavefunction {
    inner: WavefunctionField,
}

pub struct SymbohmRecord {
    inner: EvolutionRecord,
}

pub struct SymbohmGuidance {
    inner: GuidanceField,
}

/// A scenario or verify report, held as JSON.
pub struct SymbohmReport {
    passed: bool,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> SymbohmStatus {
    match e {
        Error::Io(_) => SymbohmStatus::Io,
        e if e.is_config() => SymbohmStatus::Config,
        _ => SymbohmStatus::Numeric,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SymbohmStatus, String)>) -> SymbohmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SymbohmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SymbohmStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SymbohmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SymbohmStatus, String) {
    (SymbohmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SymbohmStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SymbohmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SymbohmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (SymbohmStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn symbohm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn symbohm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Periodic grid of `points` (a power of two) covering `length` around `center`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn symbohm_grid_new(points: usize, length: f64, center: f64, out: *mut *mut SymbohmGrid) -> SymbohmStatus {
    guard(|| {
        let inner = Grid1D::centered(points, length, center).map_err(lib)?;
        put(out, SymbohmGrid { inner })
    })
}

/// # Safety
/// `grid` must come from `symbohm_grid_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symbohm_grid_free(grid: *mut SymbohmGrid) {
    release(grid);
}

/// Normalized Gaussian packet with time tag `time`.
///
/// # Safety
/// `grid` must be a live grid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn symbohm_gaussian_new(
    grid: *const SymbohmGrid,
    center: f64,
    momentum: f64,
    width: f64,
    time: f64,
    out: *mut *mut SymbohmWavefunction,
) -> SymbohmStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        let inner = gaussian_packet_at(&g.inner, center, momentum, width, time).map_err(lib)?;
        put(out, SymbohmWavefunction { inner })
    })
}

/// # Safety
/// `psi` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn symbohm_wavefunction_len(psi: *const SymbohmWavefunction) -> usize {
    psi.as_ref().map_or(0, |p| p.inner.values().len())
}

/// # Safety
/// `psi` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn symbohm_wavefunction_time(psi: *const SymbohmWavefunction) -> f64 {
    psi.as_ref().map_or(f64::NAN, |p| p.inner.time())
}

/// Copies the values into `re` and `im`, each of length `len`, which must
/// equal `symbohm_wavefunction_len`.
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn symbohm_wavefunction_values(
    psi: *const SymbohmWavefunction,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SymbohmStatus {
    guard(|| {
        let p = borrow(psi, "wavefunction")?;
        let v = p.inner.values();
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        if len != v.len() {
            return Err((SymbohmStatus::InvalidArgument, format!("buffer length {len}, field length {}", v.len())));
        }
        let (re, im) = (std::slice::from_raw_parts_mut(re, len), std::slice::from_raw_parts_mut(im, len));
        for (k, z) in v.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `psi` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symbohm_wavefunction_free(psi: *mut SymbohmWavefunction) {
    release(psi);
}

/// Evolves `psi` from its time tag to `t_end` (either direction) under a
/// harmonic potential of frequency `omega`, or freely when `omega` is 0.
///
/// # Safety
/// `psi` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn symbohm_evolve(
    psi: *const SymbohmWavefunction,
    omega: f64,
    t_end: f64,
    dt: f64,
    stride: usize,
    out: *mut *mut SymbohmRecord,
) -> SymbohmStatus {
    guard(|| {
        let p = borrow(psi, "wavefunction")?;
        let potential = if omega == 0.0 {
            Potential::Free
        } else {
            Potential::Harmonic { omega, center: 0.0 }
        };
        let inner = evolve_window(&p.inner, &potential, p.inner.time(), t_end, dt, stride).map_err(lib)?;
        put(out, SymbohmRecord { inner })
    })
}

/// Number of stored snapshots.
///
/// # Safety
/// `record` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn symbohm_record_len(record: *const SymbohmRecord) -> usize {
    record.as_ref().map_or(0, |r| r.inner.len())
}

/// Copies snapshot `index` (in production order) into a new wavefunction handle.
///
/// # Safety
/// `record` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn symbohm_record_snapshot(
    record: *const SymbohmRecord,
    index: usize,
    out: *mut *mut SymbohmWavefunction,
) -> SymbohmStatus {
    guard(|| {
        let r = borrow(record, "record")?;
        let snap = r.inner.snapshots.get(index).ok_or_else(|| {
            (SymbohmStatus::InvalidArgument, format!("snapshot {index} of {}", r.inner.len()))
        })?;
        put(out, SymbohmWavefunction { inner: snap.clone() })
    })
}

/// # Safety
/// `record` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symbohm_record_free(record: *mut SymbohmRecord) {
    release(record);
}

/// The overlap <psi_f|psi_i> of two fields with equal grids and time tags.
///
/// # Safety
/// Both handles must be live; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symbohm_amplitude(
    psi_f: *const SymbohmWavefunction,
    psi_i: *const SymbohmWavefunction,
    re: *mut f64,
    im: *mut f64,
) -> SymbohmStatus {
    guard(|| {
        let (f, i) = (borrow(psi_f, "psi_f")?, borrow(psi_i, "psi_i")?);
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let a = amplitude(&f.inner, &i.inner).map_err(lib)?;
        *re = a.value().re;
        *im = a.value().im;
        Ok(())
    })
}

/// Signed density, current and velocity of the pair at their common time.
///
/// # Safety
/// Both handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn symbohm_symmetric_fields(
    psi_i: *const SymbohmWavefunction,
    psi_f: *const SymbohmWavefunction,
    out: *mut *mut SymbohmGuidance,
) -> SymbohmStatus {
    guard(|| {
        let (i, f) = (borrow(psi_i, "psi_i")?, borrow(psi_f, "psi_f")?);
        let a = amplitude(&f.inner, &i.inner).map_err(lib)?;
        let inner = symmetric_fields(&i.inner, &f.inner, &a).map_err(lib)?;
        put(out, SymbohmGuidance { inner })
    })
}

/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn symbohm_guidance_len(field: *const SymbohmGuidance) -> usize {
    field.as_ref().map_or(0, |g| g.inner.density.len())
}

/// Copies density, current and velocity (NaN where undefined) into buffers
/// of length `len`; any buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn symbohm_guidance_values(
    field: *const SymbohmGuidance,
    density: *mut f64,
    current: *mut f64,
    velocity: *mut f64,
    len: usize,
) -> SymbohmStatus {
    guard(|| {
        let g = &borrow(field, "guidance field")?.inner;
        if len != g.density.len() {
            return Err((
                SymbohmStatus::InvalidArgument,
                format!("buffer length {len}, field length {}", g.density.len()),
            ));
        }
        if !density.is_null() {
            std::slice::from_raw_parts_mut(density, len).copy_from_slice(&g.density);
        }
        if !current.is_null() {
            std::slice::from_raw_parts_mut(current, len).copy_from_slice(&g.current);
        }
        if !velocity.is_null() {
            let v = std::slice::from_raw_parts_mut(velocity, len);
            for (dst, src) in v.iter_mut().zip(&g.velocity) {
                *dst = src.unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symbohm_guidance_free(field: *mut SymbohmGuidance) {
    release(field);
}

unsafe fn optional_dir<'a>(p: *const c_char) -> Result<Option<&'a Path>, (SymbohmStatus, String)> {
    if p.is_null() {
        Ok(None)
    } else {
        Ok(Some(Path::new(text(p, "output directory")?)))
    }
}

fn report(passed: bool, json: String) -> Result<SymbohmReport, (SymbohmStatus, String)> {
    let json = CString::new(json).map_err(|_| (SymbohmStatus::Numeric, "report contains NUL".to_string()))?;
    Ok(SymbohmReport { passed, json })
}

/// Runs scenario `id` with its default config, or with `config_json` when
/// non-null. Artifacts go to `out_dir` when non-null. A completed run
/// returns `Ok` whether or not its assertions passed; see
/// `symbohm_report_passed`.
///
/// # Safety
/// Strings must be NUL-terminated or null where allowed; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn symbohm_scenario_run(
    id: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut SymbohmReport,
) -> SymbohmStatus {
    guard(|| {
        let id = text(id, "scenario id")?;
        let config = if config_json.is_null() {
            scenarios::default_config(id).map_err(lib)?
        } else {
            let c = ScenarioConfig::from_json(text(config_json, "config")?).map_err(lib)?;
            if c.scenario != id {
                return Err((SymbohmStatus::Config, format!("config is for '{}', not '{id}'", c.scenario)));
            }
            c
        };
        let r = scenarios::run(&config, optional_dir(out_dir)?).map_err(lib)?;
        put(out, report(r.passed, r.to_json())?)
    })
}

/// Runs a verify suite (`full` for all) with default parameters, or with
/// `config_json` when non-null.
///
/// # Safety
/// As for `symbohm_scenario_run`.
#[no_mangle]
pub unsafe extern "C" fn symbohm_verify(
    suite: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut SymbohmReport,
) -> SymbohmStatus {
    guard(|| {
        let suite = text(suite, "suite")?;
        let config: VerifyConfig = if config_json.is_null() {
            VerifyConfig::default()
        } else {
            serde_json::from_str(text(config_json, "config")?).map_err(|e| lib(e.into()))?
        };
        let r = verify::run_suite(suite, &config, optional_dir(out_dir)?).map_err(lib)?;
        put(out, report(r.passed, r.to_json())?)
    })
}

/// 1 if every assertion held, 0 otherwise (also for null).
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn symbohm_report_passed(report: *const SymbohmReport) -> i32 {
    report.as_ref().map_or(0, |r| i32::from(r.passed))
}

/// The report as JSON, owned by the handle.
///
/// # Safety
/// `report` must be a live handle or null; the string dies with the handle.
#[no_mangle]
pub unsafe extern "C" fn symbohm_report_json(report: *const SymbohmReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symbohm_report_free(report: *mut SymbohmReport) {
    release(report);
}
