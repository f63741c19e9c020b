//! C ABI over the `pacpomdp` library.
//!
//! Every fallible function returns a [`PacStatus`]; on failure a message is
//! available from [`pac_last_error`] on the same thread until the next call.
//! Models are opaque [`PacModel`] handles released with [`pac_model_free`].
//! Strings returned by the library are released with [`pac_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pacpomdp::domains::{make_tiger, DomainSpec};
use pacpomdp::harness::{compare_to_truth, oracle_value, run_pipeline, PipelineConfig};
use pacpomdp::pac::{required_episodes, simulation_gap_bound, ModelStats, PacConfig, Sizes};
use pacpomdp::pomdp::{validate, ValidationConfig};
use pacpomdp::{Error, ExplorationPolicy, TabularPomdp};

/// Opaque model handle.
pub struct PacModel {
    inner: TabularPomdp,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    Parse = 4,
    SizeLimit = 5,
    /// Estimation or alignment could not recover the model.
    Estimation = 6,
    Io = 7,
    Panic = 8,
}

impl From<&Error> for PacStatus {
    fn from(e: &Error) -> Self {
        match e.root() {
            Error::InvalidArgument(_) | Error::ImpossibleObservation { .. } => {
                PacStatus::InvalidArgument
            }
            Error::InvalidModel(_) | Error::GenerationFailed { .. } => PacStatus::InvalidModel,
            Error::Parse(_) | Error::Json(_) => PacStatus::Parse,
            Error::SizeLimit { .. } => PacStatus::SizeLimit,
            Error::Io(_) => PacStatus::Io,
            _ => PacStatus::Estimation,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (PacStatus, String)>) -> PacStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PacStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside pacpomdp".into());
            PacStatus::Panic
        }
    }
}

fn lib(e: Error) -> (PacStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(what: &str) -> (PacStatus, String) {
    (PacStatus::NullArgument, format!("{what} is null"))
}

unsafe fn model_ref<'a>(
    p: *const PacModel,
    what: &str,
) -> Result<&'a TabularPomdp, (PacStatus, String)> {
    p.as_ref().map(|m| &m.inner).ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut T, value: T, what: &str) -> Result<(), (PacStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn store_model(
    out: *mut *mut PacModel,
    model: TabularPomdp,
) -> Result<(), (PacStatus, String)> {
    store(
        out,
        Box::into_raw(Box::new(PacModel { inner: model })),
        "out",
    )
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn pac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Tiger with rewards in [0, 1].
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pac_model_tiger(
    listen_accuracy: f64,
    horizon: usize,
    out: *mut *mut PacModel,
) -> PacStatus {
    guard(|| store_model(out, make_tiger(listen_accuracy, horizon).map_err(lib)?))
}

/// Seeded random model that passes validation.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pac_model_random(
    states: usize,
    actions: usize,
    observations: usize,
    horizon: usize,
    seed: u64,
    out: *mut *mut PacModel,
) -> PacStatus {
    guard(|| {
        let m = DomainSpec::random(states, actions, observations, horizon, seed)
            .build()
            .map_err(lib)?;
        store_model(out, m)
    })
}

/// Parses a model document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pac_model_from_json(
    json: *const c_char,
    out: *mut *mut PacModel,
) -> PacStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (PacStatus::Parse, format!("model text is not UTF-8: {e}")))?;
        store_model(out, TabularPomdp::from_json(text).map_err(lib)?)
    })
}

/// Serializes a model; release the result with `pac_string_free`.
///
/// # Safety
/// `model` must come from this library; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pac_model_to_json(
    model: *const PacModel,
    out: *mut *mut c_char,
) -> PacStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        let c = CString::new(m.to_json()).expect("JSON has no nul bytes");
        store(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn pac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `model` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn pac_model_free(model: *mut PacModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the state, action and observation counts and the horizon.
///
/// # Safety
/// `model` must come from this library; the outputs must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pac_model_dims(
    model: *const PacModel,
    states: *mut usize,
    actions: *mut usize,
    observations: *mut usize,
    horizon: *mut usize,
) -> PacStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        store(states, m.num_states(), "states")?;
        store(actions, m.num_actions(), "actions")?;
        store(observations, m.num_observations(), "observations")?;
        store(horizon, m.horizon(), "horizon")
    })
}

/// Checks the identifiability conditions under uniform exploration; `passed`
/// is set to 1 or 0. Failure details are not an error.
///
/// # Safety
/// `model` must come from this library; `passed` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pac_model_validate(
    model: *const PacModel,
    floor: f64,
    passed: *mut c_int,
) -> PacStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        let report = validate(
            m,
            &ExplorationPolicy::uniform(m.num_actions()),
            ValidationConfig { floor },
        )
        .map_err(lib)?;
        store(passed, c_int::from(report.passed), "passed")
    })
}

/// Optimal expected return from the initial belief.
///
/// # Safety
/// `model` must come from this library; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pac_optimal_value(model: *const PacModel, out: *mut f64) -> PacStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        store(out, oracle_value(m).map_err(lib)?.value, "out")
    })
}

/// Exploration episodes required for an `epsilon`-optimal policy with
/// probability `1 - delta`, with every formula constant at 1.
///
/// # Safety
/// `model` must come from this library; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pac_required_episodes(
    model: *const PacModel,
    epsilon: f64,
    delta: f64,
    out: *mut u64,
) -> PacStatus {
    guard(|| {
        let m = model_ref(model, "model")?;
        let report = validate(
            m,
            &ExplorationPolicy::uniform(m.num_actions()),
            ValidationConfig::default(),
        )
        .map_err(lib)?;
        let config = PacConfig {
            epsilon,
            delta,
            stats: ModelStats::from_report(&report),
            sizes: Sizes::of(m),
            constant_overrides: Default::default(),
        };
        store(
            out,
            required_episodes(&config).map_err(lib)?.episodes,
            "out",
        )
    })
}

/// Bound on the value gap of any policy between `truth` and `estimate`,
/// after matching the estimate's latent labels to the truth.
///
/// # Safety
/// Both models must come from this library; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pac_simulation_gap_bound(
    truth: *const PacModel,
    estimate: *const PacModel,
    out: *mut f64,
) -> PacStatus {
    guard(|| {
        let t = model_ref(truth, "truth")?;
        let e = model_ref(estimate, "estimate")?;
        let cmp = compare_to_truth(t, e).map_err(lib)?;
        store(
            out,
            simulation_gap_bound(&cmp.errors, t.horizon(), t.reward_max()),
            "out",
        )
    })
}

/// Explores `env` for `episodes` episodes (ignored when `population` is
/// nonzero), estimates, plans and scores the plan. Writes the regret and the
/// largest entry error of the matched estimate; either output may be null.
/// When `estimate` is non-null it receives a new handle to the estimated
/// model.
///
/// # Safety
/// `env` must come from this library; non-null outputs must be valid for
/// writing.
#[no_mangle]
pub unsafe extern "C" fn pac_run_pipeline(
    env: *const PacModel,
    episodes: u64,
    seed: u64,
    population: c_int,
    regret: *mut f64,
    max_entry_error: *mut f64,
    estimate: *mut *mut PacModel,
) -> PacStatus {
    guard(|| {
        let m = model_ref(env, "env")?;
        let config = PipelineConfig {
            population_moments: population != 0,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(m, episodes, seed, &config).map_err(lib)?;
        if !regret.is_null() {
            regret.write(out.row.regret.unwrap_or(f64::NAN));
        }
        if !max_entry_error.is_null() {
            max_entry_error.write(
                out.row
                    .comparison
                    .as_ref()
                    .map_or(f64::NAN, |c| c.max_entry_error),
            );
        }
        if !estimate.is_null() {
            store_model(estimate, out.model)?;
        }
        Ok(())
    })
}
