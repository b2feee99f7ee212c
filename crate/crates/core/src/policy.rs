//! Zero-trust decision engine: risk scoring, access verdicts, per-segment
//! isolation with grace periods and hysteresis, and closed-loop threshold
//! feedback.
//!
//! The engine consumes anomaly scores (from [`crate::vqc`]) together with
//! user/device context and answers three questions per flow event:
//!
//! * how risky is this request ([`risk_score`]),
//! * may it proceed ([`access_decide`]),
//! * what happens to the network segment it came from ([`policy_step`]).
//!
//! Two feedback rules adapt thresholds online: [`threshold_feedback`] steers
//! the observed false-positive rate toward a target by proportional control,
//! and [`adapt_gamma_for_risk`] tightens classification thresholds on
//! segments whose aggregated risk crosses the deny line.
//! [`run_simulation`] wires all of it into a deterministic event loop.

use crate::vqc::{classify, ThreatClass, VariationalModel, VqcError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

// --------------------------------------------------------------------------
// Errors
// --------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("risk weights must sum to 1, got {sum}")]
    BadWeights { sum: f64 },
    #[error("risk weights must be nonnegative and finite, got {0}")]
    BadWeight(f64),
    #[error("score must lie in [0, 1], got {0}")]
    ScoreOutOfRange(f64),
    #[error("context features must lie in [0, 1], got {0}")]
    ContextOutOfRange(f64),
    #[error("risk must lie in [0, 1], got {0}")]
    RiskOutOfRange(f64),
    #[error("invalid thresholds: {0}")]
    BadThresholds(&'static str),
    #[error("segment risk of an empty score list")]
    EmptySegment,
    #[error("malformed event at tick {tick}: {reason}")]
    MalformedEvent { tick: u64, reason: String },
    #[error(transparent)]
    Vqc(#[from] VqcError),
}

type Result<T> = std::result::Result<T, PolicyError>;

// --------------------------------------------------------------------------
// Domain types
// --------------------------------------------------------------------------

/// A network segment named by its grid coordinates `(r, c)`.
pub type SegmentId = (u32, u32);

/// All tunable decision thresholds, bundled so adaptation rules can return
/// updated copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Anomaly score above which a flow is at least suspicious.
    pub gamma1: f64,
    /// Anomaly score above which a flow is malicious.
    pub gamma2: f64,
    /// Risk at or above which access is restricted.
    pub tau_restrict: f64,
    /// Risk at or above which access is denied.
    pub tau_deny: f64,
    /// Grace period: consecutive malicious ticks tolerated before a segment
    /// is isolated.
    pub delta_t: u32,
    /// Closed interval the adaptation rules keep `gamma2` inside.
    pub gamma_bounds: (f64, f64),
    /// False-positive rate the feedback loop steers toward.
    pub fpr_target: f64,
    /// Proportional gain of the feedback loop.
    pub kappa: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            gamma1: 0.5,
            gamma2: 0.9,
            tau_restrict: 0.65,
            tau_deny: 0.8,
            delta_t: 2,
            gamma_bounds: (0.05, 0.99),
            fpr_target: 0.05,
            kappa: 0.5,
        }
    }
}

impl Thresholds {
    /// Checks every structural invariant: `0 <= gamma1 < gamma2 <= 1`,
    /// `0 <= tau_restrict < tau_deny <= 1`, well-formed gamma bounds, and
    /// finite, in-range feedback parameters.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma1,
            self.gamma2,
            self.tau_restrict,
            self.tau_deny,
            self.gamma_bounds.0,
            self.gamma_bounds.1,
            self.fpr_target,
            self.kappa,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::BadThresholds("all fields must be finite"));
        }
        if !(0.0 <= self.gamma1 && self.gamma1 < self.gamma2 && self.gamma2 <= 1.0) {
            return Err(PolicyError::BadThresholds(
                "gamma thresholds must satisfy 0 <= gamma1 < gamma2 <= 1",
            ));
        }
        if !(0.0 <= self.tau_restrict && self.tau_restrict < self.tau_deny && self.tau_deny <= 1.0)
        {
            return Err(PolicyError::BadThresholds(
                "risk cutoffs must satisfy 0 <= tau_restrict < tau_deny <= 1",
            ));
        }
        let (lo, hi) = self.gamma_bounds;
        if !(0.0 <= lo && lo < hi && hi <= 1.0 && hi - lo >= 1e-6) {
            return Err(PolicyError::BadThresholds(
                "gamma bounds must satisfy 0 <= lo < hi <= 1 with a usable gap",
            ));
        }
        if !(0.0..=1.0).contains(&self.fpr_target) {
            return Err(PolicyError::BadThresholds("fpr target must lie in [0, 1]"));
        }
        if self.kappa < 0.0 {
            return Err(PolicyError::BadThresholds("kappa must be nonnegative"));
        }
        Ok(())
    }
}

/// Per-request context: user features (role risk, privilege level, auth
/// recency, ...) and device features, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDeviceContext {
    pub user: Vec<f64>,
    pub device: Vec<f64>,
}

impl UserDeviceContext {
    pub fn validate(&self) -> Result<()> {
        for &v in self.user.iter().chain(&self.device) {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(PolicyError::ContextOutOfRange(v));
            }
        }
        Ok(())
    }
}

fn mean_or_zero(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// What a segment currently allows. Ordered by strictness.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum SegmentPolicy {
    Open,
    Restricted,
    Isolated,
}

impl SegmentPolicy {
    /// One step toward open; `Open` stays `Open`.
    fn de_escalated(self) -> Self {
        match self {
            SegmentPolicy::Isolated => SegmentPolicy::Restricted,
            SegmentPolicy::Restricted | SegmentPolicy::Open => SegmentPolicy::Open,
        }
    }
}

/// Mutable state of one segment in the isolation state machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentState {
    pub segment: SegmentId,
    pub policy: SegmentPolicy,
    /// Consecutive malicious-class ticks; any other class resets it.
    pub consecutive_flag_ticks: u32,
    /// Consecutive normal-class ticks; any other class resets it.
    pub consecutive_clean_ticks: u32,
    /// Running mean of the risk scores seen on this segment.
    pub risk: f64,
}

impl SegmentState {
    /// A fresh segment: open, zero counters, zero risk.
    pub fn open(segment: SegmentId) -> Self {
        Self {
            segment,
            policy: SegmentPolicy::Open,
            consecutive_flag_ticks: 0,
            consecutive_clean_ticks: 0,
            risk: 0.0,
        }
    }
}

/// Access verdict for one request. Ordered by strictness.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Granted,
    Restricted,
    Denied,
}

/// One access decision, stamped with the event tick that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessDecision {
    pub verdict: Verdict,
    pub risk: f64,
    pub tick: u64,
}

// --------------------------------------------------------------------------
// Risk and access
// --------------------------------------------------------------------------

/// Default blend: anomaly score 0.6, user context 0.2, device context 0.2.
pub const DEFAULT_RISK_WEIGHTS: (f64, f64, f64) = (0.6, 0.2, 0.2);

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Blends the anomaly score with the mean user and device context into one
/// risk value: `R = w_a*score + w_u*mean(user) + w_d*mean(device)`, clamped
/// to `[0, 1]`.
///
/// Weights must be nonnegative and sum to 1, the score must lie in `[0, 1]`,
/// and every context feature must lie in `[0, 1]`. An empty context vector
/// contributes 0. The result is monotone nondecreasing in the score and in
/// every context feature.
pub fn risk_score(
    ctx: &UserDeviceContext,
    score: f64,
    weights: (f64, f64, f64),
) -> Result<f64> {
    let (wa, wu, wd) = weights;
    for w in [wa, wu, wd] {
        if !(w.is_finite() && w >= 0.0) {
            return Err(PolicyError::BadWeight(w));
        }
    }
    let sum = wa + wu + wd;
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(PolicyError::BadWeights { sum });
    }
    if !(score.is_finite() && (0.0..=1.0).contains(&score)) {
        return Err(PolicyError::ScoreOutOfRange(score));
    }
    ctx.validate()?;
    let r = wa * score + wu * mean_or_zero(&ctx.user) + wd * mean_or_zero(&ctx.device);
    Ok(r.clamp(0.0, 1.0))
}

/// Turns a risk value into a verdict: `Granted` below `tau_restrict`,
/// `Restricted` from there up to (but excluding) `tau_deny`, `Denied` at or
/// above `tau_deny`.
pub fn access_decide(risk: f64, t: &Thresholds, tick: u64) -> Result<AccessDecision> {
    t.validate()?;
    if !(risk.is_finite() && (0.0..=1.0).contains(&risk)) {
        return Err(PolicyError::RiskOutOfRange(risk));
    }
    let verdict = if risk < t.tau_restrict {
        Verdict::Granted
    } else if risk < t.tau_deny {
        Verdict::Restricted
    } else {
        Verdict::Denied
    };
    Ok(AccessDecision {
        verdict,
        risk,
        tick,
    })
}

/// Aggregates per-flow risk scores of one segment into a single value (the
/// arithmetic mean). Errors on an empty list or out-of-range entries.
pub fn segment_risk(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(PolicyError::EmptySegment);
    }
    for &s in scores {
        if !(s.is_finite() && (0.0..=1.0).contains(&s)) {
            return Err(PolicyError::ScoreOutOfRange(s));
        }
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

// --------------------------------------------------------------------------
// Threshold adaptation
// --------------------------------------------------------------------------

/// Default multiplicative tightening applied when a segment's risk crosses
/// the deny line.
pub const DEFAULT_SHRINK: f64 = 0.8;

/// Minimal enforced separation between `gamma1` and `gamma2` after joint
/// clamping.
const MIN_GAMMA_GAP: f64 = 1e-9;

/// Tightens the classification thresholds of a high-risk segment: when
/// `segment_risk > tau_deny`, both gammas are multiplied by `shrink` and
/// jointly clamped into `gamma_bounds` so that `gamma1 < gamma2` survives.
/// Otherwise the thresholds come back unchanged.
///
/// # Panics
///
/// If `shrink` is outside `(0, 1)` or `segment_risk` is not finite; both
/// are caller contract violations.
pub fn adapt_gamma_for_risk(t: &Thresholds, segment_risk: f64, shrink: f64) -> Thresholds {
    assert!(
        shrink > 0.0 && shrink < 1.0,
        "shrink must lie strictly between 0 and 1, got {shrink}"
    );
    assert!(segment_risk.is_finite(), "segment risk must be finite");
    if segment_risk <= t.tau_deny {
        return *t;
    }
    let (lo, hi) = t.gamma_bounds;
    let mut g1 = (t.gamma1 * shrink).clamp(lo, hi);
    let mut g2 = (t.gamma2 * shrink).clamp(lo, hi);
    if g1 >= g2 {
        g2 = (g1 + MIN_GAMMA_GAP).min(hi);
        if g1 >= g2 {
            g1 = g2 - MIN_GAMMA_GAP;
        }
    }
    Thresholds {
        gamma1: g1,
        gamma2: g2,
        ..*t
    }
}

/// Proportional feedback steering the observed false-positive rate toward
/// `fpr_target`: `gamma2` moves by `kappa * (fpr_observed - fpr_target)`
/// (clamped into `gamma_bounds`), and `gamma1` is rescaled to keep its
/// ratio to `gamma2`, which preserves `gamma1 < gamma2` exactly.
///
/// `fpr_observed` is clamped into `[0, 1]`; the update is deterministic.
pub fn threshold_feedback(t: &Thresholds, fpr_observed: f64) -> Thresholds {
    assert!(fpr_observed.is_finite(), "observed FPR must be finite");
    let fpr = fpr_observed.clamp(0.0, 1.0);
    let (lo, hi) = t.gamma_bounds;
    let g2 = (t.gamma2 + t.kappa * (fpr - t.fpr_target)).clamp(lo, hi);
    let ratio = t.gamma1 / t.gamma2;
    Thresholds {
        gamma1: ratio * g2,
        gamma2: g2,
        ..*t
    }
}

// --------------------------------------------------------------------------
// Segment state machine
// --------------------------------------------------------------------------

/// Consecutive clean ticks required before a segment de-escalates one
/// level.
pub const DEESCALATE_HYSTERESIS: u32 = 5;

/// Advances one segment's isolation state by one classified flow.
///
/// * `Malicious` extends the flag streak and resets the clean streak; once
///   the streak exceeds the grace period `delta_t`, the segment is
///   isolated. With `delta_t = 2`, three consecutive malicious ticks
///   isolate on the third.
/// * `Suspicious` breaks both streaks and escalates to at least
///   `Restricted`; it never de-escalates within a step.
/// * `Normal` breaks the flag streak and extends the clean streak; after
///   [`DEESCALATE_HYSTERESIS`] consecutive clean ticks the segment
///   de-escalates one level and both streaks reset.
///
/// The transition is pure and deterministic; event ordering is the caller's
/// responsibility.
pub fn policy_step(state: &SegmentState, class: ThreatClass, t: &Thresholds) -> SegmentState {
    let mut next = *state;
    match class {
        ThreatClass::Malicious => {
            next.consecutive_flag_ticks += 1;
            next.consecutive_clean_ticks = 0;
            if next.consecutive_flag_ticks > t.delta_t {
                next.policy = SegmentPolicy::Isolated;
            }
        }
        ThreatClass::Suspicious => {
            next.consecutive_flag_ticks = 0;
            next.consecutive_clean_ticks = 0;
            next.policy = next.policy.max(SegmentPolicy::Restricted);
        }
        ThreatClass::Normal => {
            next.consecutive_flag_ticks = 0;
            next.consecutive_clean_ticks += 1;
            if next.consecutive_clean_ticks >= DEESCALATE_HYSTERESIS {
                next.policy = next.policy.de_escalated();
                next.consecutive_clean_ticks = 0;
            }
        }
    }
    next
}

// --------------------------------------------------------------------------
// Simulation
// --------------------------------------------------------------------------

/// One flow event entering the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEvent {
    pub tick: u64,
    pub segment: SegmentId,
    pub context: UserDeviceContext,
    pub features: Vec<f64>,
    /// Ground-truth class when known; enables threshold feedback.
    pub true_label: Option<u8>,
}

/// One line of the simulation's append-only event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLogEntry {
    pub tick: u64,
    pub segment: SegmentId,
    pub score: f64,
    pub class: ThreatClass,
    pub risk: f64,
    pub verdict: Verdict,
    pub policy: SegmentPolicy,
}

/// A segment's policy at one instant, for grid snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSnapshot {
    pub segment: SegmentId,
    pub policy: SegmentPolicy,
}

/// Everything a simulation run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    /// One entry per event, in tick order.
    pub log: Vec<SimLogEntry>,
    /// Segment policies before the first event (always `Open`), sorted by
    /// segment id.
    pub before: Vec<SegmentSnapshot>,
    /// Segment policies after the last event, sorted by segment id.
    pub after: Vec<SegmentSnapshot>,
    /// Thresholds after all feedback updates.
    pub thresholds: Thresholds,
}

/// Runs the full decision loop over an ordered event stream.
///
/// Per event: score the features with `model`, classify against the current
/// gammas, blend context into a risk value, decide access, and step the
/// segment's isolation state. When `feedback_window` is `Some(w)`, after
/// every `w`-th event the false-positive rate observed on that window's
/// ground-truth-benign events (true label 0, classified non-normal) feeds
/// [`threshold_feedback`]; windows without labeled benign events are
/// skipped.
///
/// Events must be sorted by tick. Scoring is deterministic, so a replay
/// with the same inputs produces an identical outcome, byte for byte.
pub fn run_simulation(
    stream: &[FlowEvent],
    model: &VariationalModel,
    t0: &Thresholds,
    feedback_window: Option<usize>,
) -> Result<SimulationOutcome> {
    t0.validate()?;
    if feedback_window == Some(0) {
        return Err(PolicyError::BadThresholds(
            "feedback window must be at least 1 event",
        ));
    }
    let mut last_tick = 0u64;
    for (i, event) in stream.iter().enumerate() {
        if i > 0 && event.tick < last_tick {
            return Err(PolicyError::MalformedEvent {
                tick: event.tick,
                reason: format!("ticks must be nondecreasing, previous was {last_tick}"),
            });
        }
        last_tick = event.tick;
        event.context.validate().map_err(|e| PolicyError::MalformedEvent {
            tick: event.tick,
            reason: e.to_string(),
        })?;
        if let Some(l) = event.true_label {
            if l > 2 {
                return Err(PolicyError::MalformedEvent {
                    tick: event.tick,
                    reason: format!("true label must be 0, 1, or 2, got {l}"),
                });
            }
        }
    }

    let mut thresholds = *t0;
    let mut states: BTreeMap<SegmentId, SegmentState> = BTreeMap::new();
    let mut risk_sums: BTreeMap<SegmentId, (f64, u64)> = BTreeMap::new();
    let mut log: Vec<SimLogEntry> = Vec::with_capacity(stream.len());
    let mut window_false_positives = 0usize;
    let mut window_benign = 0usize;

    let before: Vec<SegmentSnapshot> = {
        let mut ids: Vec<SegmentId> = stream.iter().map(|e| e.segment).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter()
            .map(|segment| SegmentSnapshot {
                segment,
                policy: SegmentPolicy::Open,
            })
            .collect()
    };

    for (i, event) in stream.iter().enumerate() {
        let score = model
            .anomaly_score(&event.features)
            .map_err(|e| PolicyError::MalformedEvent {
                tick: event.tick,
                reason: e.to_string(),
            })?;
        let class = classify(score, thresholds.gamma1, thresholds.gamma2)?;
        let risk = risk_score(&event.context, score, DEFAULT_RISK_WEIGHTS)?;
        let decision = access_decide(risk, &thresholds, event.tick)?;

        let state = states
            .entry(event.segment)
            .or_insert_with(|| SegmentState::open(event.segment));
        *state = policy_step(state, class, &thresholds);
        let (sum, n) = risk_sums.entry(event.segment).or_insert((0.0, 0));
        *sum += risk;
        *n += 1;
        state.risk = *sum / *n as f64;

        log.push(SimLogEntry {
            tick: event.tick,
            segment: event.segment,
            score,
            class,
            risk,
            verdict: decision.verdict,
            policy: state.policy,
        });

        if let Some(0) = event.true_label {
            window_benign += 1;
            if class != ThreatClass::Normal {
                window_false_positives += 1;
            }
        }
        if let Some(window) = feedback_window {
            if (i + 1) % window == 0 {
                if window_benign > 0 {
                    let fpr = window_false_positives as f64 / window_benign as f64;
                    thresholds = threshold_feedback(&thresholds, fpr);
                }
                window_false_positives = 0;
                window_benign = 0;
            }
        }
    }

    let after: Vec<SegmentSnapshot> = states
        .values()
        .map(|s| SegmentSnapshot {
            segment: s.segment,
            policy: s.policy,
        })
        .collect();

    Ok(SimulationOutcome {
        log,
        before,
        after,
        thresholds,
    })
}

// --------------------------------------------------------------------------
// Tests
// --------------------------------------------------------------------------
