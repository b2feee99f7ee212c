//! Variational quantum classifier: a layered rotation ansatz over an
//! encoded feature register, scored by the readout-qubit Z expectation.
//!
//! The anomaly score is `(1 - <Z_readout>) / 2`, so it lives in [0, 1]
//! with 0 meaning "readout surely |0>" and 1 meaning "readout surely |1>".
//! Two thresholds `gamma1 < gamma2` cut the score range into three verdict
//! classes. Training is plain mini-batch gradient descent on the mean
//! squared error against per-class target scores {0, 0.5, 1}, with exact
//! parameter-shift gradients (finite differences available as a
//! cross-check mode).

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{EncoderKind, EncodingError, FeatureVector};
use crate::metrics::{self, MetricsError};
use crate::qsim::{Gate, Observable, QsimError, QubitState, MAX_QUBITS};

/// Checkpoint schema version accepted by [`VariationalModel::load`].
pub const CHECKPOINT_VERSION: u32 = 1;

/// Finite-difference step used by [`GradientMode::FiniteDifference`].
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VqcError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    BadWidth(usize),
    #[error("theta has length {got}, model needs {want}")]
    ThetaLength { got: usize, want: usize },
    #[error("theta contains a non-finite entry")]
    ThetaNotFinite,
    #[error("{encoder} encoding of {n_features} features needs {want} qubits, model has {have}")]
    WidthMismatch {
        encoder: &'static str,
        n_features: usize,
        want: usize,
        have: usize,
    },
    #[error("readout qubit {index} outside register of {n_qubits}")]
    ReadoutOutOfRange { index: usize, n_qubits: usize },
    #[error("class label {0} outside 0..=2")]
    BadLabel(u8),
    #[error("thresholds must satisfy gamma1 < gamma2, got {gamma1} >= {gamma2}")]
    ThresholdOrder { gamma1: f64, gamma2: f64 },
    #[error("score {0} is not a number")]
    BadScore(f64),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("bad training config: {0}")]
    BadConfig(&'static str),
    #[error("cost became non-finite during training")]
    NonFiniteCost,
    #[error("checkpoint version {got} unsupported (expected {want})")]
    CheckpointVersion { got: u32, want: u32 },
    #[error("encoding error: {0}")]
    Encoding(#[from] EncodingError),
    #[error("simulator error: {0}")]
    Sim(#[from] QsimError),
    #[error("metrics error: {0}")]
    Metrics(#[from] MetricsError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error: {0}")]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, VqcError>;

// ---------------------------------------------------------------------------
// Verdict classes
// ---------------------------------------------------------------------------

/// Three-way verdict over the anomaly score range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatClass {
    /// Score at or below the lower threshold: ordinary traffic.
    Normal,
    /// Score between the thresholds: flagged for closer inspection.
    Suspicious,
    /// Score above the upper threshold: treated as hostile.
    Malicious,
}

impl ThreatClass {
    /// Stable index 0, 1, 2 used in confusion matrices and CSV columns.
    pub fn index(self) -> u8 {
        match self {
            ThreatClass::Normal => 0,
            ThreatClass::Suspicious => 1,
            ThreatClass::Malicious => 2,
        }
    }

    pub fn from_index(index: u8) -> Result<Self> {
        match index {
            0 => Ok(ThreatClass::Normal),
            1 => Ok(ThreatClass::Suspicious),
            2 => Ok(ThreatClass::Malicious),
            other => Err(VqcError::BadLabel(other)),
        }
    }

    /// Regression target for the squared-error cost: 0, 0.5, 1.
    pub fn target(self) -> f64 {
        self.index() as f64 / 2.0
    }

    pub fn label(self) -> &'static str {
        match self {
            ThreatClass::Normal => "normal",
            ThreatClass::Suspicious => "suspicious",
            ThreatClass::Malicious => "malicious",
        }
    }
}

/// Maps a score to its verdict class: `score <= gamma1` is Normal,
/// `score <= gamma2` is Suspicious, anything above is Malicious.
pub fn classify(score: f64, gamma1: f64, gamma2: f64) -> Result<ThreatClass> {
    if !(gamma1 < gamma2) {
        return Err(VqcError::ThresholdOrder { gamma1, gamma2 });
    }
    if score.is_nan() {
        return Err(VqcError::BadScore(score));
    }
    Ok(if score <= gamma1 {
        ThreatClass::Normal
    } else if score <= gamma2 {
        ThreatClass::Suspicious
    } else {
        ThreatClass::Malicious
    })
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// One training or scoring example: a feature row and its class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: u8) -> Self {
        Sample { features, label }
    }

    fn target(&self) -> Result<f64> {
        Ok(ThreatClass::from_index(self.label)?.target())
    }
}

/// Layered variational circuit over an encoded feature register.
///
/// Each layer applies an RY rotation and then an RZ rotation to every
/// qubit, followed by a CNOT ring `q -> (q+1) mod n` (omitted on a
/// single-qubit register). Parameters are stored layer-major: layer `l`
/// owns `theta[l*2n .. (l+1)*2n]`, the first `n` entries feeding the RY
/// gates and the next `n` the RZ gates, each indexed by qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalModel {
    n_qubits: usize,
    layers: usize,
    encoder: EncoderKind,
    readout_qubit: usize,
    theta: Vec<f64>,
}

/// Serialized form of a trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub n_qubits: usize,
    pub layers: usize,
    pub encoder: EncoderKind,
    pub readout_qubit: usize,
    pub theta: Vec<f64>,
}

impl VariationalModel {
    /// A model with all parameters at zero (the ansatz acts trivially on
    /// basis states, which makes zeroed models useful fixed points in
    /// tests).
    pub fn new(n_qubits: usize, layers: usize, encoder: EncoderKind) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(VqcError::BadWidth(n_qubits));
        }
        Ok(VariationalModel {
            n_qubits,
            layers,
            encoder,
            readout_qubit: 0,
            theta: vec![0.0; 2 * n_qubits * layers],
        })
    }

    /// A model with parameters drawn uniformly from `[-scale, scale]`.
    pub fn with_random_init(
        n_qubits: usize,
        layers: usize,
        encoder: EncoderKind,
        seed: u64,
        scale: f64,
    ) -> Result<Self> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(VqcError::BadConfig("init scale must be finite and >= 0"));
        }
        let mut model = Self::new(n_qubits, layers, encoder)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &mut model.theta {
            *t = if scale == 0.0 {
                0.0
            } else {
                rng.gen_range(-scale..scale)
            };
        }
        Ok(model)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn encoder(&self) -> EncoderKind {
        self.encoder
    }

    pub fn readout_qubit(&self) -> usize {
        self.readout_qubit
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(VqcError::ThetaLength {
                got: theta.len(),
                want: self.theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(VqcError::ThetaNotFinite);
        }
        self.theta = theta;
        Ok(())
    }

    pub fn set_readout_qubit(&mut self, index: usize) -> Result<()> {
        if index >= self.n_qubits {
            return Err(VqcError::ReadoutOutOfRange {
                index,
                n_qubits: self.n_qubits,
            });
        }
        self.readout_qubit = index;
        Ok(())
    }

    /// Encodes a feature row, checking that its encoded width matches the
    /// model register.
    fn encode(&self, features: &[f64]) -> Result<QubitState> {
        let fv = FeatureVector::new(features.to_vec())?;
        let want = self.encoder.width_for(fv.len());
        if want != self.n_qubits {
            return Err(VqcError::WidthMismatch {
                encoder: self.encoder.label(),
                n_features: fv.len(),
                want,
                have: self.n_qubits,
            });
        }
        Ok(self.encoder.encode(&fv)?)
    }

    fn ansatz_gates(&self, theta: &[f64]) -> Vec<Gate> {
        let n = self.n_qubits;
        let mut gates = Vec::with_capacity(self.layers * 3 * n);
        for l in 0..self.layers {
            let base = l * 2 * n;
            for q in 0..n {
                gates.push(Gate::Ry {
                    theta: theta[base + q],
                    target: q,
                });
            }
            for q in 0..n {
                gates.push(Gate::Rz {
                    theta: theta[base + n + q],
                    target: q,
                });
            }
            if n >= 2 {
                for q in 0..n {
                    gates.push(Gate::Cnot {
                        control: q,
                        target: (q + 1) % n,
                    });
                }
            }
        }
        gates
    }

    fn readout_with(&self, theta: &[f64], features: &[f64]) -> Result<f64> {
        let state = self.encode(features)?.apply_all(&self.ansatz_gates(theta))?;
        Ok(state.expectation(&Observable::pauli_z(self.readout_qubit))?)
    }

    /// The prepared state for a feature row (encoding plus ansatz).
    pub fn state_for(&self, features: &[f64]) -> Result<QubitState> {
        Ok(self.encode(features)?.apply_all(&self.ansatz_gates(&self.theta))?)
    }

    /// Readout-qubit Z expectation for a feature row.
    pub fn readout_expectation(&self, features: &[f64]) -> Result<f64> {
        self.readout_with(&self.theta, features)
    }

    /// Anomaly score in [0, 1]: `(1 - <Z_readout>) / 2`.
    pub fn anomaly_score(&self, features: &[f64]) -> Result<f64> {
        let e = self.readout_expectation(features)?;
        Ok(((1.0 - e) / 2.0).clamp(0.0, 1.0))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            n_qubits: self.n_qubits,
            layers: self.layers,
            encoder: self.encoder,
            readout_qubit: self.readout_qubit,
            theta: self.theta.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(VqcError::CheckpointVersion {
                got: ckpt.version,
                want: CHECKPOINT_VERSION,
            });
        }
        let mut model = Self::new(ckpt.n_qubits, ckpt.layers, ckpt.encoder)?;
        model.set_readout_qubit(ckpt.readout_qubit)?;
        model.set_theta(ckpt.theta)?;
        Ok(model)
    }

    /// Writes the model as pretty-printed JSON. The encoding is exact:
    /// floating-point parameters survive a save/load round trip bit for
    /// bit.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_checkpoint())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        Self::from_checkpoint(ckpt)
    }
}

// ---------------------------------------------------------------------------
// Cost and gradients
// ---------------------------------------------------------------------------

/// Anomaly scores for a batch, in input order.
pub fn scores_for(model: &VariationalModel, samples: &[Sample]) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| model.anomaly_score(&s.features))
        .collect()
}

/// Mean squared error of scores against per-class targets.
pub fn cost(model: &VariationalModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(VqcError::EmptyTrainingSet);
    }
    let residuals: Vec<f64> = samples
        .par_iter()
        .map(|s| -> Result<f64> {
            let score = model.anomaly_score(&s.features)?;
            let r = score - s.target()?;
            Ok(r * r)
        })
        .collect::<Result<_>>()?;
    // Summed sequentially so the result does not depend on thread timing.
    Ok(residuals.iter().sum::<f64>() / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Exact analytic gradient from the two-point parameter-shift rule
    /// (each rotation generator has eigenvalues +-1/2, so the shift is
    /// pi/2).
    ParameterShift,
    /// Central finite difference of the batch cost with step [`FD_STEP`];
    /// slower and only approximate, kept as an independent cross-check.
    FiniteDifference,
}

/// Gradient of [`cost`] with respect to every model parameter.
pub fn gradient(model: &VariationalModel, samples: &[Sample], mode: GradientMode) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(VqcError::EmptyTrainingSet);
    }
    match mode {
        GradientMode::ParameterShift => parameter_shift_gradient(model, samples),
        GradientMode::FiniteDifference => finite_difference_gradient(model, samples),
    }
}

/// Per-sample parameter-shift gradients, combined into the batch-cost
/// gradient.
///
/// With `s = (1 - E)/2` the chain rule gives
/// `dC/dtheta_k = mean_i (t_i - s_i) * dE_i/dtheta_k`, and each
/// `dE/dtheta_k` is `(E(theta_k + pi/2) - E(theta_k - pi/2)) / 2` exactly.
fn parameter_shift_gradient(model: &VariationalModel, samples: &[Sample]) -> Result<Vec<f64>> {
    let n_params = model.theta.len();
    let per_sample: Vec<(f64, Vec<f64>)> = samples
        .par_iter()
        .map(|s| -> Result<(f64, Vec<f64>)> {
            let e = model.readout_with(&model.theta, &s.features)?;
            let score = ((1.0 - e) / 2.0).clamp(0.0, 1.0);
            let factor = s.target()? - score;
            let mut de = vec![0.0; n_params];
            let mut shifted = model.theta.clone();
            for (k, slot) in de.iter_mut().enumerate() {
                let original = shifted[k];
                shifted[k] = original + std::f64::consts::FRAC_PI_2;
                let plus = model.readout_with(&shifted, &s.features)?;
                shifted[k] = original - std::f64::consts::FRAC_PI_2;
                let minus = model.readout_with(&shifted, &s.features)?;
                shifted[k] = original;
                *slot = (plus - minus) / 2.0;
            }
            Ok((factor, de))
        })
        .collect::<Result<_>>()?;
    // Deterministic sequential reduction over the collected per-sample terms.
    let mut grad = vec![0.0; n_params];
    for (factor, de) in &per_sample {
        for (g, d) in grad.iter_mut().zip(de) {
            *g += factor * d;
        }
    }
    let m = samples.len() as f64;
    for g in &mut grad {
        *g /= m;
    }
    Ok(grad)
}

fn finite_difference_gradient(model: &VariationalModel, samples: &[Sample]) -> Result<Vec<f64>> {
    let mut probe = model.clone();
    let mut grad = vec![0.0; model.theta.len()];
    for (k, slot) in grad.iter_mut().enumerate() {
        let original = model.theta[k];
        probe.theta[k] = original + FD_STEP;
        let plus = cost(&probe, samples)?;
        probe.theta[k] = original - FD_STEP;
        let minus = cost(&probe, samples)?;
        probe.theta[k] = original;
        *slot = (plus - minus) / (2.0 * FD_STEP);
    }
    Ok(grad)
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub gradient: GradientMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 128,
            epochs: 12,
            seed: 0,
            gradient: GradientMode::ParameterShift,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(VqcError::BadConfig("learning rate must be finite and > 0"));
        }
        if self.batch_size == 0 {
            return Err(VqcError::BadConfig("batch size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(VqcError::BadConfig("epochs must be >= 1"));
        }
        Ok(())
    }
}

/// Per-epoch training record. `val_accuracy` is NaN when no validation
/// split was supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_cost: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

/// Result of a training run. Wall-clock time is reported for operator
/// feedback only and is never written into run artifacts, which must stay
/// byte-identical across reruns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochStats>,
    pub wall_seconds: f64,
}

fn accuracy_at(scores: &[f64], labels: &[u8], gammas: (f64, f64)) -> Result<f64> {
    let mut preds = Vec::with_capacity(scores.len());
    for &s in scores {
        preds.push(classify(s, gammas.0, gammas.1)?.index());
    }
    Ok(metrics::confusion(&preds, labels)?.accuracy)
}

/// Classification accuracy of a model over a split, at thresholds chosen
/// optimally from that split's own score distribution. Falls back to the
/// fixed pair (0.5, 0.9) when the split is too one-sided for ROC analysis.
pub fn best_threshold_accuracy(model: &VariationalModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let scores = scores_for(model, samples)?;
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let gammas = metrics::three_class_thresholds(&scores, &labels).unwrap_or((0.5, 0.9));
    accuracy_at(&scores, &labels, gammas)
}

/// Mini-batch gradient descent over shuffled epochs. The shuffle stream is
/// seeded from the config, so a fixed (model, data, config) triple yields
/// bit-identical parameters on every run.
pub fn train(
    model: &mut VariationalModel,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(VqcError::EmptyTrainingSet);
    }
    for s in train_set.iter().chain(val_set) {
        ThreatClass::from_index(s.label)?;
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut batch_costs = Vec::new();
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let c = cost(model, &batch)?;
            if !c.is_finite() {
                return Err(VqcError::NonFiniteCost);
            }
            let grad = gradient(model, &batch, cfg.gradient)?;
            for (t, g) in model.theta.iter_mut().zip(&grad) {
                *t -= cfg.learning_rate * g;
            }
            batch_costs.push(c);
        }
        let mean_cost = batch_costs.iter().sum::<f64>() / batch_costs.len() as f64;
        history.push(EpochStats {
            epoch: epoch + 1,
            mean_cost,
            train_accuracy: best_threshold_accuracy(model, train_set)?,
            val_accuracy: best_threshold_accuracy(model, val_set)?,
        });
    }
    Ok(TrainOutcome {
        history,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Continues gradient descent from the model's current parameters on a
/// feedback set (e.g. flows whose verdicts were corrected downstream).
pub fn retrain(
    model: &mut VariationalModel,
    feedback: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train(model, feedback, &[], cfg)
}

// ---------------------------------------------------------------------------
