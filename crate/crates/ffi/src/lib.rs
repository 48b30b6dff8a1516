//! C interface to `cps_sentinel`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`CpsStatus`]; on failure the message is available from
//! [`cps_last_error_message`] on the same thread. Strings returned to the
//! caller are owned and released with [`cps_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cps_sentinel::detection::{expected_step_drift, DetectionError, DetectionSeries};
use cps_sentinel::harness::run::check_influence;
use cps_sentinel::harness::scenario::parse_scenario;
use cps_sentinel::harness::{detect_run, preset_json, run_montecarlo, HarnessError, LoadError, RunOptions, Scenario};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    NumericError = 5,
    OutOfRange = 6,
    UndefinedRatio = 7,
    Refused = 8,
    UnknownPreset = 9,
    Panic = 10,
}

/// A validated scenario.
pub struct CpsScenario {
    inner: Scenario,
}

/// Detection statistics of one simulated path.
pub struct CpsSeries {
    inner: DetectionSeries,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(CpsStatus, String);

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let status = match e {
            LoadError::Invalid(_) => CpsStatus::ValidationError,
            _ => CpsStatus::ParseError,
        };
        Failure(status, e.to_string())
    }
}

impl From<DetectionError> for Failure {
    fn from(e: DetectionError) -> Self {
        let status = match e {
            DetectionError::OutOfRange { .. } => CpsStatus::OutOfRange,
            DetectionError::UndefinedRatio { .. } => CpsStatus::UndefinedRatio,
            _ => CpsStatus::NumericError,
        };
        Failure(status, e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let status = match e {
            HarnessError::Refused { .. } => CpsStatus::Refused,
            _ => CpsStatus::NumericError,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CpsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CpsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CpsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul removed").into_raw()
}

/// Copy of the last error message on this thread, or null if none.
#[no_mangle]
pub extern "C" fn cps_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a JSON scenario.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cps_scenario_from_json(json: *const c_char, out: *mut *mut CpsScenario) -> CpsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let text = read_str(json, "json")?;
        let inner = parse_scenario(text)?;
        *out = Box::into_raw(Box::new(CpsScenario { inner }));
        Ok(())
    })
}

/// JSON text of a built-in scenario, to be freed with [`cps_string_free`].
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cps_preset_json(name: *const c_char, out: *mut *mut c_char) -> CpsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let name = read_str(name, "name")?;
        let json = preset_json(name).ok_or_else(|| Failure(CpsStatus::UnknownPreset, format!("unknown preset {name:?}")))?;
        *out = owned_string(json);
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cps_scenario_free(scenario: *mut CpsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_scenario_n_agents(scenario: *const CpsScenario, out: *mut usize) -> CpsStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(scenario, "scenario")?.inner.model.n_agents();
        Ok(())
    })
}

/// Whether every agent is reachable from an honest actuator.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_scenario_influence_holds(scenario: *const CpsScenario, out: *mut bool) -> CpsStatus {
    guard(|| {
        *out_ref(out, "out")? = check_influence(&handle(scenario, "scenario")?.inner).holds;
        Ok(())
    })
}

/// Predicted per-step drift of `log L_n`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_expected_drift(scenario: *const CpsScenario, seed: u64, out: *mut f64) -> CpsStatus {
    guard(|| {
        let s = &handle(scenario, "scenario")?.inner;
        *out_ref(out, "out")? = expected_step_drift(&s.model, &s.honest, s.attack.as_ref(), seed)?.drift;
        Ok(())
    })
}

/// Simulates one path with `seed` and scores it. A zero `horizon` keeps
/// the scenario's own.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_detect(
    scenario: *const CpsScenario,
    seed: u64,
    horizon: usize,
    out: *mut *mut CpsSeries,
) -> CpsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = &handle(scenario, "scenario")?.inner;
        let (_, series) = if horizon == 0 {
            detect_run(s, seed)?
        } else {
            let mut s = s.clone();
            s.horizon = horizon;
            detect_run(&s, seed)?
        };
        *out = Box::into_raw(Box::new(CpsSeries { inner: series }));
        Ok(())
    })
}

/// # Safety
/// `series` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cps_series_free(series: *mut CpsSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of transitions in the series.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_series_len(series: *const CpsSeries, out: *mut usize) -> CpsStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(series, "series")?.inner.len();
        Ok(())
    })
}

/// `log L_n` after `n` transitions.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_series_log_l(series: *const CpsSeries, n: usize, out: *mut f64) -> CpsStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(series, "series")?.inner.log_l(n)?;
        Ok(())
    })
}

/// `r_n` after `n` transitions.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_series_r_n(series: *const CpsSeries, n: usize, out: *mut f64) -> CpsStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(series, "series")?.inner.r_n(n)?;
        Ok(())
    })
}

/// DetectionSeries CSV text, to be freed with [`cps_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_series_csv(series: *const CpsSeries, out: *mut *mut c_char) -> CpsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mut buf = Vec::new();
        handle(series, "series")?
            .inner
            .write_csv(&mut buf)
            .map_err(|e| Failure(CpsStatus::NumericError, e.to_string()))?;
        *out = owned_string(String::from_utf8(buf).expect("csv is ASCII"));
        Ok(())
    })
}

/// Runs the whole batch in memory and returns the summary JSON. `jobs = 0`
/// uses all cores, `1` runs serially.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cps_montecarlo_summary(
    scenario: *const CpsScenario,
    jobs: usize,
    override_assumption2: bool,
    out: *mut *mut c_char,
) -> CpsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = &handle(scenario, "scenario")?.inner;
        let opts = RunOptions {
            jobs: (jobs > 0).then_some(jobs),
            override_assumption2,
        };
        let summary = run_montecarlo(s, opts, None)?;
        *out = owned_string(serde_json::to_string(&summary.summary).expect("summary serializes"));
        Ok(())
    })
}
