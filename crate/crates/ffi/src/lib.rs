//! C ABI for the kacstroock core.
//!
//! Every fallible call returns a [`KsStatus`]; on anything other than
//! `KS_STATUS_OK` a message is available from [`ks_last_error`] on the same
//! thread. Objects cross the boundary as opaque handles and must be released
//! with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kacstroock::kac::ExperimentConfig;
use kacstroock::levy::{classify_theta, levy_exponent, normalization_constant, LevyTriplet, ThetaClass};
use kacstroock::presets::load_preset;
use kacstroock::report::{report_files, write_report};
use kacstroock::stats::{simulate_components, verify_limit, with_workers, StatReport};
use kacstroock::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    InvalidTriplet = 5,
    DegenerateTheta = 6,
    AdmissibilityFailure = 7,
    TooFewSamples = 8,
    OutOfRange = 9,
    Io = 10,
    Numerical = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsThetaClass {
    ComplexAdmissible = 0,
    RealDegenerate = 1,
    NullDegenerate = 2,
    Inadmissible = 3,
}

/// A Lévy triplet.
pub struct KsTriplet(LevyTriplet);

/// An experiment configuration.
pub struct KsConfig(ExperimentConfig);

/// Simulated paths, indexed by component then replica on a shared time grid.
pub struct KsPaths {
    times: Vec<f64>,
    re: Vec<Vec<Vec<f64>>>,
    im: Vec<Vec<Vec<f64>>>,
}

/// A verification report.
pub struct KsReport(StatReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> KsStatus {
    match e {
        Error::Parse { .. } => KsStatus::Parse,
        Error::Validation { .. } | Error::InvalidInput(_) | Error::WouldOverwrite(_) => KsStatus::Validation,
        Error::InvalidTriplet(_) | Error::UnsampleableFamily(_) => KsStatus::InvalidTriplet,
        Error::DegenerateTheta { .. } => KsStatus::DegenerateTheta,
        Error::AdmissibilityFailure(_) => KsStatus::AdmissibilityFailure,
        Error::TooFewSamples { .. } => KsStatus::TooFewSamples,
        Error::Io(_) => KsStatus::Io,
        _ => KsStatus::Numerical,
    }
}

struct Failure(KsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: KsStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

/// Runs `f`, turning errors and panics into a status plus the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("panic: {message}"));
            KsStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(KsStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(KsStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(KsStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(KsStatus::NullPointer, format!("{what} is NULL")));
    }
    out.write(value);
    Ok(())
}

fn workers(n: usize) -> Option<usize> {
    (n > 0).then_some(n)
}

/// Message for the last failing call on this thread. Empty if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ks_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ks_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` is NULL or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ks_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a triplet document.
///
/// # Safety
/// `json` is NULL or a NUL-terminated string; `out` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ks_triplet_from_json(json: *const c_char, out: *mut *mut KsTriplet) -> KsStatus {
    guard(|| {
        let triplet = LevyTriplet::from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(KsTriplet(triplet))), "out")
    })
}

/// # Safety
/// `t` is NULL or a live handle from [`ks_triplet_from_json`].
#[no_mangle]
pub unsafe extern "C" fn ks_triplet_free(t: *mut KsTriplet) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Real and imaginary parts of ψ(u).
///
/// # Safety
/// `t` is a live handle; `a` and `b` are writable.
#[no_mangle]
pub unsafe extern "C" fn ks_levy_exponent(t: *const KsTriplet, u: f64, a: *mut f64, b: *mut f64) -> KsStatus {
    guard(|| {
        let e = levy_exponent(u, &get(t, "triplet")?.0)?;
        put(a, e.a_part, "a")?;
        put(b, e.b_part, "b")
    })
}

/// c(θ); fails with `KS_STATUS_DEGENERATE_THETA` when a(θ) vanishes.
///
/// # Safety
/// `t` is a live handle; `c` is writable.
#[no_mangle]
pub unsafe extern "C" fn ks_normalization_constant(t: *const KsTriplet, theta: f64, c: *mut f64) -> KsStatus {
    guard(|| {
        let value = normalization_constant(theta, &get(t, "triplet")?.0)?;
        put(c, value, "c")
    })
}

/// Classifies θ with the triplet's default tolerance.
///
/// # Safety
/// `t` is a live handle; `class` is writable.
#[no_mangle]
pub unsafe extern "C" fn ks_classify_theta(t: *const KsTriplet, theta: f64, class: *mut KsThetaClass) -> KsStatus {
    guard(|| {
        let triplet = &get(t, "triplet")?.0;
        let value = match classify_theta(theta, triplet, triplet.default_tolerance())? {
            ThetaClass::ComplexAdmissible => KsThetaClass::ComplexAdmissible,
            ThetaClass::RealDegenerate => KsThetaClass::RealDegenerate,
            ThetaClass::NullDegenerate => KsThetaClass::NullDegenerate,
            ThetaClass::Inadmissible(reason) => {
                set_last_error(&reason);
                KsThetaClass::Inadmissible
            }
        };
        put(class, value, "class")
    })
}

/// Parses a configuration document.
///
/// # Safety
/// `json` is NULL or a NUL-terminated string; `out` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ks_config_from_json(json: *const c_char, out: *mut *mut KsConfig) -> KsStatus {
    guard(|| {
        let loaded = ExperimentConfig::from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(KsConfig(loaded.config))), "out")
    })
}

/// Loads a shipped preset by name, e.g. `poisson-pi-half`.
///
/// # Safety
/// `name` is NULL or a NUL-terminated string; `out` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ks_config_from_preset(name: *const c_char, out: *mut *mut KsConfig) -> KsStatus {
    guard(|| {
        let loaded = load_preset(text(name, "name")?)?;
        put(out, Box::into_raw(Box::new(KsConfig(loaded.config))), "out")
    })
}

/// # Safety
/// `c` is NULL or a live config handle.
#[no_mangle]
pub unsafe extern "C" fn ks_config_free(c: *mut KsConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Overrides replica count and master seed.
///
/// # Safety
/// `c` is a live config handle not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn ks_config_set_run(c: *mut KsConfig, replicas: u64, master_seed: u64) -> KsStatus {
    guard(|| {
        let config = &mut c.as_mut().ok_or_else(|| fail(KsStatus::NullPointer, "config is NULL"))?.0;
        config.replicas = replicas;
        config.master_seed = master_seed;
        Ok(())
    })
}

/// Simulates every replica of every component. `workers` = 0 uses all cores.
///
/// # Safety
/// `c` is a live config handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ks_simulate(c: *const KsConfig, workers_n: usize, out: *mut *mut KsPaths) -> KsStatus {
    guard(|| {
        let config = &get(c, "config")?.0;
        let components = with_workers(workers(workers_n), || simulate_components(config))??;
        let times = components.first().and_then(|c| c.first()).map(|p| p.times.clone()).unwrap_or_default();
        let paths = KsPaths {
            times,
            re: components.iter().map(|c| c.iter().map(|p| p.re.clone()).collect()).collect(),
            im: components.iter().map(|c| c.iter().map(|p| p.im.clone()).collect()).collect(),
        };
        put(out, Box::into_raw(Box::new(paths)), "out")
    })
}

/// # Safety
/// `p` is NULL or a live paths handle.
#[no_mangle]
pub unsafe extern "C" fn ks_paths_free(p: *mut KsPaths) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of components, replicas and grid points.
///
/// # Safety
/// `p` is a live handle; the outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn ks_paths_shape(
    p: *const KsPaths,
    components: *mut usize,
    replicas: *mut usize,
    points: *mut usize,
) -> KsStatus {
    guard(|| {
        let paths = get(p, "paths")?;
        put(components, paths.re.len(), "components")?;
        put(replicas, paths.re.first().map_or(0, Vec::len), "replicas")?;
        put(points, paths.times.len(), "points")
    })
}

/// Copies the time grid into `times[0..len]`; `len` must equal the point count.
///
/// # Safety
/// `p` is a live handle; `times` holds `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_paths_times(p: *const KsPaths, times: *mut f64, len: usize) -> KsStatus {
    guard(|| {
        let paths = get(p, "paths")?;
        copy_out(&paths.times, times, len, "times")
    })
}

/// Copies one replica of one component into `re[0..len]` and `im[0..len]`.
///
/// # Safety
/// `p` is a live handle; `re` and `im` each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_paths_replica(
    p: *const KsPaths,
    component: usize,
    replica: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> KsStatus {
    guard(|| {
        let paths = get(p, "paths")?;
        let (Some(r), Some(i)) = (
            paths.re.get(component).and_then(|c| c.get(replica)),
            paths.im.get(component).and_then(|c| c.get(replica)),
        ) else {
            return Err(fail(KsStatus::OutOfRange, format!("no replica {replica} of component {component}")));
        };
        copy_out(r, re, len, "re")?;
        copy_out(i, im, len, "im")
    })
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize, what: &str) -> Result<(), Failure> {
    if dst.is_null() {
        return Err(fail(KsStatus::NullPointer, format!("{what} is NULL")));
    }
    if len != src.len() {
        return Err(fail(KsStatus::OutOfRange, format!("{what}: buffer holds {len}, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
    Ok(())
}

/// Simulates and runs the statistical checks. `workers` = 0 uses all cores.
///
/// # Safety
/// `c` is a live config handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ks_verify(c: *const KsConfig, workers_n: usize, out: *mut *mut KsReport) -> KsStatus {
    guard(|| {
        let report = verify_limit(&get(c, "config")?.0, workers(workers_n))?;
        put(out, Box::into_raw(Box::new(KsReport(report))), "out")
    })
}

/// # Safety
/// `r` is NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ks_report_free(r: *mut KsReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Whether every check passed.
///
/// # Safety
/// `r` is a live handle; `passed` is writable.
#[no_mangle]
pub unsafe extern "C" fn ks_report_passed(r: *const KsReport, passed: *mut bool) -> KsStatus {
    guard(|| put(passed, get(r, "report")?.0.passed, "passed"))
}

/// The report as JSON, identical to `report.json`. Free with [`ks_string_free`].
///
/// # Safety
/// `r` is a live handle; `json` is writable.
#[no_mangle]
pub unsafe extern "C" fn ks_report_json(r: *const KsReport, json: *mut *mut c_char) -> KsStatus {
    guard(|| {
        let files = report_files(&get(r, "report")?.0);
        let bytes = files.into_iter().next().map(|(_, b)| b).unwrap_or_default();
        let s = CString::new(bytes).map_err(|e| fail(KsStatus::Numerical, e.to_string()))?;
        put(json, s.into_raw(), "json")
    })
}

/// Writes the report files and manifest into `out_dir`.
///
/// # Safety
/// `r` is a live handle; `out_dir` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ks_report_write(r: *const KsReport, out_dir: *const c_char, force: bool) -> KsStatus {
    guard(|| {
        let report = &get(r, "report")?.0;
        write_report(report, Path::new(text(out_dir, "out_dir")?), force)?;
        Ok(())
    })
}
