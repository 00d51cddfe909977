//! C ABI for `faked-states`.
//!
//! Every fallible call returns an [`FsStatus`]. On failure the message is
//! kept per thread and can be read with [`fs_last_error`] until the next
//! call on that thread. Handles are opaque; free each one exactly once
//! with its matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use faked_states::detmodel::MismatchSpec;
use faked_states::ekert::{self, WeightTarget};
use faked_states::engine::{self, RunOutcome, ScenarioConfig};
use faked_states::{bb84, sarg04, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// The quantity has no value, e.g. a QBER with nothing sifted.
    Undefined = 4,
    Utf8 = 5,
    Panic = 6,
}

/// A validated scenario.
pub struct FsScenario {
    config: ScenarioConfig,
}

/// Rows produced by running a scenario.
pub struct FsOutcome {
    outcome: RunOutcome,
}

/// One result row. Missing values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsRow {
    pub sweep_value: f64,
    pub eta0_t0: f64,
    pub eta0_t1: f64,
    pub eta1_t0: f64,
    pub eta1_t1: f64,
    pub rounds: u64,
    pub sifted: u64,
    pub errors: u64,
    pub qber: f64,
    pub qber_ci_low: f64,
    pub qber_ci_high: f64,
    pub expected_qber: f64,
    pub eve_knowledge: f64,
    pub coincidence_rate: f64,
    pub chsh: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: FsStatus, msg: impl Into<String>) -> FsStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> FsStatus {
    match err {
        Error::Config { .. } => FsStatus::Config,
        Error::Undefined(_) | Error::NoSignal => FsStatus::Undefined,
        _ => FsStatus::InvalidArgument,
    }
}

fn from_error(err: Error) -> FsStatus {
    fail(status_of(&err), err.to_string())
}

/// Runs `f`, turning panics into [`FsStatus::Panic`].
fn guard(f: impl FnOnce() -> FsStatus) -> FsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(FsStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, FsStatus> {
    if s.is_null() {
        return Err(fail(FsStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(FsStatus::Utf8, e.to_string()))
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $( if $p.is_null() {
            return fail(FsStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        } )+
    };
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a TOML scenario.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_from_toml(toml: *const c_char, out: *mut *mut FsScenario) -> FsStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = match read_str(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::from_toml(text) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(FsScenario { config }));
                FsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `scenario` must come from [`fs_scenario_from_toml`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_free(scenario: *mut FsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_set_seed(scenario: *mut FsScenario, seed: u64) -> FsStatus {
    guard(|| {
        non_null!(scenario);
        (*scenario).config.seed = seed;
        FsStatus::Ok
    })
}

/// Worker threads. Results do not depend on this.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_set_workers(scenario: *mut FsScenario, workers: usize) -> FsStatus {
    guard(|| {
        non_null!(scenario);
        if workers == 0 {
            return fail(FsStatus::InvalidArgument, "workers must be positive");
        }
        (*scenario).config.workers = workers;
        FsStatus::Ok
    })
}

/// Runs the scenario, or every point of its sweep.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_run(scenario: *const FsScenario, out: *mut *mut FsOutcome) -> FsStatus {
    guard(|| {
        non_null!(scenario, out);
        *out = ptr::null_mut();
        match engine::sweep(&(*scenario).config) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(FsOutcome { outcome }));
                FsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `outcome` must come from [`fs_scenario_run`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn fs_outcome_free(outcome: *mut FsOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `outcome` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_outcome_len(outcome: *const FsOutcome) -> usize {
    outcome.as_ref().map_or(0, |o| o.outcome.records.len())
}

/// # Safety
/// `outcome` must be a live handle and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_outcome_row(outcome: *const FsOutcome, index: usize, row: *mut FsRow) -> FsStatus {
    guard(|| {
        non_null!(outcome, row);
        let records = &(*outcome).outcome.records;
        let Some(r) = records.get(index) else {
            return fail(FsStatus::InvalidArgument, format!("row {index} out of range"));
        };
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *row = FsRow {
            sweep_value: nan(r.sweep_value),
            eta0_t0: r.eta[0],
            eta0_t1: r.eta[1],
            eta1_t0: r.eta[2],
            eta1_t1: r.eta[3],
            rounds: r.rounds,
            sifted: r.sifted,
            errors: r.errors,
            qber: nan(r.qber),
            qber_ci_low: nan(r.qber_ci.map(|c| c.0)),
            qber_ci_high: nan(r.qber_ci.map(|c| c.1)),
            expected_qber: nan(r.expected_qber),
            eve_knowledge: nan(r.eve_knowledge),
            coincidence_rate: nan(r.coincidence_rate),
            chsh: nan(r.chsh),
        };
        FsStatus::Ok
    })
}

/// The rows as CSV (with header). Free the string with [`fs_string_free`].
///
/// # Safety
/// `outcome` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_outcome_csv(outcome: *const FsOutcome, out: *mut *mut c_char) -> FsStatus {
    guard(|| {
        non_null!(outcome, out);
        *out = ptr::null_mut();
        let mut buf = Vec::new();
        if let Err(e) = engine::write_csv(&(*outcome).outcome, &mut buf) {
            return from_error(e);
        }
        match CString::new(buf) {
            Ok(s) => {
                *out = s.into_raw();
                FsStatus::Ok
            }
            Err(e) => fail(FsStatus::Utf8, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn fs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn write_f64(out: *mut f64, v: Result<f64, Error>) -> FsStatus {
    match v {
        Ok(v) => {
            unsafe { *out = v };
            FsStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

fn spec(e00: f64, e01: f64, e10: f64, e11: f64) -> Result<MismatchSpec, Error> {
    MismatchSpec::new(e00, e01, e10, e11)
}

/// Closed-form BB84 attack QBER for efficiencies η_d(t_k) given as
/// `eta<d>_t<k>`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_bb84_qber(eta0_t0: f64, eta0_t1: f64, eta1_t0: f64, eta1_t1: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        write_f64(out, spec(eta0_t0, eta0_t1, eta1_t0, eta1_t1).and_then(|m| bb84::analytic_qber(&m)))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_bb84_symmetric_qber(eta: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        write_f64(out, bb84::symmetric_qber(eta))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_sarg04_qber(eta0_t0: f64, eta0_t1: f64, eta1_t0: f64, eta1_t1: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        write_f64(out, spec(eta0_t0, eta0_t1, eta1_t0, eta1_t1).and_then(|m| sarg04::analytic_qber(&m)))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_sarg04_symmetric_qber(eta: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        write_f64(out, sarg04::symmetric_qber(eta))
    })
}

/// Weights `(α, β, γ)` giving four CHSH terms of magnitude `magnitude`.
///
/// # Safety
/// `out` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_ekert_solve_equal_terms(magnitude: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        match ekert::solve_weights(WeightTarget::EqualTerms(magnitude)) {
            Ok(w) => {
                std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&w.as_array());
                FsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// CHSH value of an α/β mix with weight `p_beta` on β.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_ekert_s_of_beta(p_beta: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        write_f64(out, ekert::s_of_beta(p_beta))
    })
}
