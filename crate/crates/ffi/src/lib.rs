//! C ABI for the demon-core sampling engine.
//!
//! Every fallible function returns a [`DemonStatus`]; on failure the message
//! is available from [`demon_last_error`] on the same thread. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Strings returned by the library are released with
//! [`demon_string_free`].

use demon_core::config::{load_model, RewardRef};
use demon_core::demon::{replay, sample_trajectory, synthesize_noise, DemonConfig, DemonError, DemonKind, Trajectory};
use demon_core::diffusion::MixtureModel;
use demon_core::rewards::RewardSource;
use demon_core::state::State;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemonStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Reward = 4,
    Engine = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A mixture model.
pub struct DemonModel {
    model: MixtureModel,
}

/// A model, sampler settings and a reward source, ready to draw trajectories.
pub struct DemonSampler {
    model: MixtureModel,
    config: DemonConfig,
    source: RewardSource,
}

/// A recorded trajectory.
pub struct DemonTrajectory {
    trajectory: Trajectory,
}

struct Failure(DemonStatus, String);

impl Failure {
    fn new(status: DemonStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<DemonError> for Failure {
    fn from(e: DemonError) -> Self {
        let mut root = &e;
        while let DemonError::Step { source, .. } = root {
            root = source;
        }
        let status = match root {
            DemonError::Config(_) | DemonError::Selection(_) => DemonStatus::InvalidConfig,
            DemonError::Reward(_) => DemonStatus::Reward,
            _ => DemonStatus::Engine,
        };
        Failure(status, e.to_string())
    }
}

impl From<demon_core::config::ConfigError> for Failure {
    fn from(e: demon_core::config::ConfigError) -> Self {
        match e {
            demon_core::config::ConfigError::Demon(d) => d.into(),
            other => Failure(DemonStatus::InvalidConfig, other.to_string()),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DemonStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DemonStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside demon-ffi");
            DemonStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(DemonStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::new(DemonStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(DemonStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(DemonStatus::NullArgument, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_state(state: &State, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(DemonStatus::NullArgument, "output buffer is null"));
    }
    if len < state.len() {
        return Err(Failure::new(
            DemonStatus::BufferTooSmall,
            format!("buffer holds {len} values, state has {}", state.len()),
        ));
    }
    ptr::copy_nonoverlapping(state.as_ptr(), out, state.len());
    Ok(())
}

/// The message of the last failure on this thread, or an empty string. Valid
/// until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn demon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn demon_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads `benchmark:2d`, `benchmark:8d`, or a mixture JSON file.
///
/// # Safety
/// `reference` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn demon_model_load(reference: *const c_char, out: *mut *mut DemonModel) -> DemonStatus {
    guard(|| {
        let model = load_model(text(reference, "reference")?)?;
        put(out, DemonModel { model })
    })
}

/// Parses a mixture model from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn demon_model_from_json(json: *const c_char, out: *mut *mut DemonModel) -> DemonStatus {
    guard(|| {
        let model = MixtureModel::from_json(text(json, "json")?)
            .map_err(|e| Failure::new(DemonStatus::InvalidConfig, format!("model: {e}")))?;
        put(out, DemonModel { model })
    })
}

/// Data dimension `N`; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn demon_model_dim(model: *const DemonModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.dim())
}

/// # Safety
/// `model` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn demon_model_free(model: *mut DemonModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Builds a sampler. `config_json` holds sampler settings (null for the
/// defaults); `reward` is a preset name, an `http(s)://` endpoint, or a JSON
/// reward source or spec, and may be null for kind `none`.
///
/// # Safety
/// `model` must be a live handle; strings must be null or NUL-terminated;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn demon_sampler_new(
    model: *const DemonModel,
    config_json: *const c_char,
    reward: *const c_char,
    out: *mut *mut DemonSampler,
) -> DemonStatus {
    guard(|| {
        let model = handle(model, "model")?.model.clone();
        let config: DemonConfig = if config_json.is_null() {
            DemonConfig::default()
        } else {
            serde_json::from_str(text(config_json, "config_json")?)
                .map_err(|e| Failure::new(DemonStatus::InvalidConfig, format!("config: {e}")))?
        };
        config.validate()?;
        let source = if reward.is_null() {
            if config.kind != DemonKind::None {
                return Err(Failure::new(DemonStatus::InvalidConfig, format!("kind {} needs a reward", config.kind)));
            }
            RewardSource::Interactive
        } else {
            let r = text(reward, "reward")?.trim();
            let reference = if r.starts_with('{') {
                serde_json::from_str(r).map_err(|e| Failure::new(DemonStatus::InvalidConfig, format!("reward: {e}")))?
            } else {
                RewardRef::Preset(r.to_string())
            };
            reference.resolve(model.dim())?
        };
        if config.kind == DemonKind::BestOfN {
            return Err(Failure::new(DemonStatus::InvalidConfig, "best-of-n runs are not trajectories"));
        }
        put(out, DemonSampler { model, config, source })
    })
}

/// # Safety
/// `sampler` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn demon_sampler_free(sampler: *mut DemonSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Draws one trajectory with the given seed.
///
/// # Safety
/// `sampler` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn demon_sample(
    sampler: *const DemonSampler,
    seed: u64,
    out: *mut *mut DemonTrajectory,
) -> DemonStatus {
    guard(|| {
        let s = handle(sampler, "sampler")?;
        let cfg = DemonConfig { seed, ..s.config.clone() };
        let trajectory = sample_trajectory(&s.model, &cfg, &s.source)?;
        put(out, DemonTrajectory { trajectory })
    })
}

/// Number of recorded steps; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_steps(traj: *const DemonTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.trajectory.steps.len())
}

/// Reward queries spent; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_reward_queries(traj: *const DemonTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.trajectory.reward_queries)
}

/// Copies the final state into `out`, which must hold at least `len` values.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_final_state(
    traj: *const DemonTrajectory,
    out: *mut f64,
    len: usize,
) -> DemonStatus {
    guard(|| write_state(&handle(traj, "trajectory")?.trajectory.final_state, out, len))
}

/// Final reward, or NaN for sources without scalar rewards.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_final_reward(traj: *const DemonTrajectory, out: *mut f64) -> DemonStatus {
    guard(|| {
        let t = handle(traj, "trajectory")?;
        if out.is_null() {
            return Err(Failure::new(DemonStatus::NullArgument, "output pointer is null"));
        }
        *out = t.trajectory.final_reward.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// The full trajectory as JSON; release with [`demon_string_free`].
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_to_json(traj: *const DemonTrajectory, out: *mut *mut c_char) -> DemonStatus {
    guard(|| {
        let t = handle(traj, "trajectory")?;
        if out.is_null() {
            return Err(Failure::new(DemonStatus::NullArgument, "output pointer is null"));
        }
        let json =
            serde_json::to_string(&t.trajectory).map_err(|e| Failure::new(DemonStatus::Engine, e.to_string()))?;
        *out = CString::new(json).map_err(|e| Failure::new(DemonStatus::Engine, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Parses a trajectory written by [`demon_trajectory_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_from_json(
    json: *const c_char,
    out: *mut *mut DemonTrajectory,
) -> DemonStatus {
    guard(|| {
        let trajectory = serde_json::from_str(text(json, "json")?)
            .map_err(|e| Failure::new(DemonStatus::InvalidConfig, format!("trajectory: {e}")))?;
        put(out, DemonTrajectory { trajectory })
    })
}

/// Re-runs the recorded noises and writes the reproduced final state; fails
/// with `Engine` when the records do not reproduce the stored final state.
///
/// # Safety
/// Handles must be live; `out` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_replay(
    model: *const DemonModel,
    traj: *const DemonTrajectory,
    out: *mut f64,
    len: usize,
) -> DemonStatus {
    guard(|| {
        let x = replay(&handle(model, "model")?.model, &handle(traj, "trajectory")?.trajectory)?;
        write_state(&x, out, len)
    })
}

/// # Safety
/// `traj` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn demon_trajectory_free(traj: *mut DemonTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// `z* = sqrt(n) normalized(sum_k w_k z_k)` for `k` row-major noises of
/// length `n`, written to `out` (length `n`).
///
/// # Safety
/// `noises` must hold `k * n` values, `weights` `k`, and `out` `n`.
#[no_mangle]
pub unsafe extern "C" fn demon_synthesize_noise(
    noises: *const f64,
    k: usize,
    n: usize,
    weights: *const f64,
    out: *mut f64,
) -> DemonStatus {
    guard(|| {
        if noises.is_null() || weights.is_null() {
            return Err(Failure::new(DemonStatus::NullArgument, "noises or weights is null"));
        }
        if k == 0 || n == 0 {
            return Err(Failure::new(DemonStatus::InvalidConfig, "k and n must be positive"));
        }
        let flat = std::slice::from_raw_parts(noises, k * n);
        let zs: Vec<State> = flat.chunks(n).map(|c| State(c.to_vec())).collect();
        let z = synthesize_noise(&zs, std::slice::from_raw_parts(weights, k))?;
        write_state(&z, out, n)
    })
}
