//! C ABI over the anomaly-scoring model and the zero-trust policy engine.
//!
//! The surface follows the usual C conventions: opaque handles created and
//! destroyed by paired `_new`/`_free` calls, results delivered through out
//! pointers, and every fallible function returning a [`QztStatus`] code.
//! `include/qzt.h` is generated from this file by cbindgen at build time
//! and committed alongside the crate.
//!
//! All functions are safe to call from any thread as long as a handle is
//! not used concurrently with `_free` on itself; the handles share no
//! hidden state.

use std::collections::BTreeMap;
use std::ffi::{c_char, CStr};
use std::path::Path;

use qzt_core::policy::{
    self, SegmentId, SegmentPolicy, SegmentState, Thresholds, UserDeviceContext, Verdict,
    DEFAULT_RISK_WEIGHTS,
};
use qzt_core::encoding::EncoderKind;
use qzt_core::vqc::{classify, ThreatClass, VariationalModel, VqcError};

// --------------------------------------------------------------------------
// Status codes and C-visible enums
// --------------------------------------------------------------------------

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QztStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or inconsistent with the handle.
    InvalidArgument = 2,
    /// The filesystem refused a read or write.
    IoError = 3,
    /// A checkpoint file exists but could not be decoded.
    ParseError = 4,
    /// A computation produced a non-finite number.
    NumericError = 5,
}

/// Three-way traffic verdict of the anomaly score.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QztClass {
    Normal = 0,
    Suspicious = 1,
    Malicious = 2,
}

impl From<ThreatClass> for QztClass {
    fn from(c: ThreatClass) -> Self {
        match c {
            ThreatClass::Normal => QztClass::Normal,
            ThreatClass::Suspicious => QztClass::Suspicious,
            ThreatClass::Malicious => QztClass::Malicious,
        }
    }
}

/// Access verdict for one request.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QztVerdict {
    Granted = 0,
    Restricted = 1,
    Denied = 2,
}

impl From<Verdict> for QztVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Granted => QztVerdict::Granted,
            Verdict::Restricted => QztVerdict::Restricted,
            Verdict::Denied => QztVerdict::Denied,
        }
    }
}

/// A segment's isolation level.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QztPolicy {
    Open = 0,
    Restricted = 1,
    Isolated = 2,
}

impl From<SegmentPolicy> for QztPolicy {
    fn from(p: SegmentPolicy) -> Self {
        match p {
            SegmentPolicy::Open => QztPolicy::Open,
            SegmentPolicy::Restricted => QztPolicy::Restricted,
            SegmentPolicy::Isolated => QztPolicy::Isolated,
        }
    }
}

fn status_of(err: &VqcError) -> QztStatus {
    match err {
        VqcError::Io(_) => QztStatus::IoError,
        VqcError::Json(_) | VqcError::CheckpointVersion { .. } => QztStatus::ParseError,
        VqcError::NonFiniteCost => QztStatus::NumericError,
        _ => QztStatus::InvalidArgument,
    }
}

/// A static, human-readable description of a status code. Never null.
#[no_mangle]
pub extern "C" fn qzt_status_message(status: QztStatus) -> *const c_char {
    let msg: &'static CStr = match status {
        QztStatus::Ok => c"ok",
        QztStatus::NullPointer => c"a required pointer argument was null",
        QztStatus::InvalidArgument => c"an argument was out of range or inconsistent",
        QztStatus::IoError => c"the filesystem refused a read or write",
        QztStatus::ParseError => c"the checkpoint could not be decoded",
        QztStatus::NumericError => c"a computation produced a non-finite number",
    };
    msg.as_ptr()
}

/// The crate version as a static string. Never null.
#[no_mangle]
pub extern "C" fn qzt_version() -> *const c_char {
    const VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => unreachable!(),
    };
    VERSION.as_ptr()
}

// --------------------------------------------------------------------------
// Model handle
// --------------------------------------------------------------------------

/// Opaque handle to a trained (or freshly seeded) anomaly-scoring model.
pub struct QztModel(VariationalModel);

unsafe fn path_from(ptr: *const c_char) -> Result<&'static Path, QztStatus> {
    if ptr.is_null() {
        return Err(QztStatus::NullPointer);
    }
    let s = unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| QztStatus::InvalidArgument)?;
    Ok(Path::new(s))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> QztStatus {
    if out.is_null() {
        return QztStatus::NullPointer;
    }
    unsafe { out.write(value) };
    QztStatus::Ok
}

/// Creates an angle-encoded model with seeded random parameters.
///
/// On success `*out` owns the model; release it with [`qzt_model_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qzt_model_new(
    n_qubits: usize,
    layers: usize,
    seed: u64,
    init_scale: f64,
    out: *mut *mut QztModel,
) -> QztStatus {
    if out.is_null() {
        return QztStatus::NullPointer;
    }
    match VariationalModel::with_random_init(n_qubits, layers, EncoderKind::Angle, seed, init_scale)
    {
        Ok(model) => unsafe { write_out(out, Box::into_raw(Box::new(QztModel(model)))) },
        Err(e) => status_of(&e),
    }
}

/// Loads a model checkpoint written by [`qzt_model_save`] (or the `qzt`
/// command-line tool).
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer
/// to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qzt_model_load(path: *const c_char, out: *mut *mut QztModel) -> QztStatus {
    if out.is_null() {
        return QztStatus::NullPointer;
    }
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    match VariationalModel::load(path) {
        Ok(model) => unsafe { write_out(out, Box::into_raw(Box::new(QztModel(model)))) },
        Err(e) => status_of(&e),
    }
}

/// Writes the model as a checkpoint file.
///
/// # Safety
/// `model` must be a live handle and `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qzt_model_save(model: *const QztModel, path: *const c_char) -> QztStatus {
    let Some(model) = (unsafe { model.as_ref() }) else {
        return QztStatus::NullPointer;
    };
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    match model.0.save(path) {
        Ok(()) => QztStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Releases a model handle. A null handle is ignored.
///
/// # Safety
/// `model` must be a pointer returned by a `qzt_model_*` constructor that
/// has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn qzt_model_free(model: *mut QztModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Scores one feature vector; the score lands in [0, 1], higher meaning
/// more anomalous.
///
/// # Safety
/// `model` must be a live handle, `features` must point to `n_features`
/// readable doubles, and `score_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qzt_anomaly_score(
    model: *const QztModel,
    features: *const f64,
    n_features: usize,
    score_out: *mut f64,
) -> QztStatus {
    let Some(model) = (unsafe { model.as_ref() }) else {
        return QztStatus::NullPointer;
    };
    if features.is_null() && n_features > 0 {
        return QztStatus::NullPointer;
    }
    let features = unsafe { std::slice::from_raw_parts(features, n_features) };
    match model.0.anomaly_score(features) {
        Ok(score) => unsafe { write_out(score_out, score) },
        Err(e) => status_of(&e),
    }
}

// --------------------------------------------------------------------------
// Stateless decisions
// --------------------------------------------------------------------------

/// Buckets a score into a traffic class using thresholds
/// `0 <= gamma1 < gamma2 <= 1`.
///
/// # Safety
/// `class_out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qzt_classify(
    score: f64,
    gamma1: f64,
    gamma2: f64,
    class_out: *mut QztClass,
) -> QztStatus {
    match classify(score, gamma1, gamma2) {
        Ok(class) => unsafe { write_out(class_out, class.into()) },
        Err(_) => QztStatus::InvalidArgument,
    }
}

/// Blends an anomaly score with user and device trust signals (each in
/// [0, 1]) into a risk value, using the standard weights.
///
/// Either signal array may be empty; an empty array contributes zero.
///
/// # Safety
/// `user` and `device` must point to `n_user` and `n_device` readable
/// doubles respectively (null is allowed when the count is zero), and
/// `risk_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qzt_risk_score(
    score: f64,
    user: *const f64,
    n_user: usize,
    device: *const f64,
    n_device: usize,
    risk_out: *mut f64,
) -> QztStatus {
    if (user.is_null() && n_user > 0) || (device.is_null() && n_device > 0) {
        return QztStatus::NullPointer;
    }
    let user = if n_user == 0 {
        &[]
    } else {
        unsafe { std::slice::from_raw_parts(user, n_user) }
    };
    let device = if n_device == 0 {
        &[]
    } else {
        unsafe { std::slice::from_raw_parts(device, n_device) }
    };
    let ctx = UserDeviceContext {
        user: user.to_vec(),
        device: device.to_vec(),
    };
    match policy::risk_score(&ctx, score, DEFAULT_RISK_WEIGHTS) {
        Ok(risk) => unsafe { write_out(risk_out, risk) },
        Err(_) => QztStatus::InvalidArgument,
    }
}

/// Turns a risk value into an access verdict at thresholds
/// `0 <= tau_restrict < tau_deny <= 1`.
///
/// # Safety
/// `verdict_out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qzt_access_decide(
    risk: f64,
    tau_restrict: f64,
    tau_deny: f64,
    verdict_out: *mut QztVerdict,
) -> QztStatus {
    let thresholds = Thresholds {
        tau_restrict,
        tau_deny,
        ..Thresholds::default()
    };
    if thresholds.validate().is_err() {
        return QztStatus::InvalidArgument;
    }
    match policy::access_decide(risk, &thresholds, 0) {
        Ok(decision) => unsafe { write_out(verdict_out, decision.verdict.into()) },
        Err(_) => QztStatus::InvalidArgument,
    }
}

// --------------------------------------------------------------------------
// Policy engine handle
// --------------------------------------------------------------------------

/// Opaque handle to a segment policy engine: fixed thresholds plus the
/// isolation state of every segment seen so far.
pub struct QztEngine {
    thresholds: Thresholds,
    segments: BTreeMap<SegmentId, SegmentState>,
}

/// Creates a policy engine. `grace_ticks` is the number of consecutive
/// flagged ticks tolerated before one more isolates a segment.
///
/// On success `*out` owns the engine; release it with [`qzt_engine_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn qzt_engine_new(
    gamma1: f64,
    gamma2: f64,
    tau_restrict: f64,
    tau_deny: f64,
    grace_ticks: u32,
    out: *mut *mut QztEngine,
) -> QztStatus {
    if out.is_null() {
        return QztStatus::NullPointer;
    }
    let thresholds = Thresholds {
        gamma1,
        gamma2,
        tau_restrict,
        tau_deny,
        delta_t: grace_ticks,
        ..Thresholds::default()
    };
    if thresholds.validate().is_err() {
        return QztStatus::InvalidArgument;
    }
    let engine = QztEngine {
        thresholds,
        segments: BTreeMap::new(),
    };
    unsafe { write_out(out, Box::into_raw(Box::new(engine))) }
}

/// Feeds one scored flow for segment `(row, col)` through the isolation
/// state machine and reports the segment's resulting policy.
///
/// # Safety
/// `engine` must be a live handle and `policy_out` writable.
#[no_mangle]
pub unsafe extern "C" fn qzt_engine_step(
    engine: *mut QztEngine,
    row: u32,
    col: u32,
    score: f64,
    policy_out: *mut QztPolicy,
) -> QztStatus {
    let Some(engine) = (unsafe { engine.as_mut() }) else {
        return QztStatus::NullPointer;
    };
    let class = match classify(score, engine.thresholds.gamma1, engine.thresholds.gamma2) {
        Ok(c) => c,
        Err(_) => return QztStatus::InvalidArgument,
    };
    let segment = (row, col);
    let state = engine
        .segments
        .entry(segment)
        .or_insert_with(|| SegmentState::open(segment));
    *state = policy::policy_step(state, class, &engine.thresholds);
    unsafe { write_out(policy_out, state.policy.into()) }
}

/// Releases an engine handle. A null handle is ignored.
///
/// # Safety
/// `engine` must be a pointer returned by [`qzt_engine_new`] that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn qzt_engine_free(engine: *mut QztEngine) {
    if !engine.is_null() {
        drop(unsafe { Box::from_raw(engine) });
    }
}
