//! TOML run configuration for the `qzt` command-line pipeline.
//!
//! One [`RunConfig`] drives every command. A single master `seed` at the top
//! level is stretched into independent per-purpose seeds via
//! [`derived_seed`], so changing the master seed changes every stochastic
//! choice coherently while two runs with the same file stay byte-identical.
//!
//! The format is strict: unknown keys are rejected (catching typos at parse
//! time), every section is optional and falls back to documented defaults,
//! and [`RunConfig::validate`] checks all cross-field invariants before any
//! command touches the filesystem.

use crate::encoding::EncoderKind;
use crate::policy::Thresholds;
use crate::qsim::MAX_QUBITS;
use crate::vqc::{GradientMode, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

// --------------------------------------------------------------------------
// Errors
// --------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path:?}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

// --------------------------------------------------------------------------
// Seed derivation
// --------------------------------------------------------------------------

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    TrainCorpus = 1,
    EvalCorpus = 2,
    ModelInit = 3,
    Shuffle = 4,
    Split = 5,
    Simulation = 6,
}

/// Stretches the master seed into a per-purpose seed with a splitmix64
/// finalizer, so the streams are decorrelated even for adjacent masters.
pub fn derived_seed(master: u64, stream: SeedStream) -> u64 {
    let mut z = master ^ (stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// --------------------------------------------------------------------------
// Sections
// --------------------------------------------------------------------------

/// Where flow records come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Seeded generator profiles from [`crate::flows`].
    Synthetic,
    /// CSV files matched by `glob`.
    Files,
}

/// Which synthetic corpus pair to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Train/eval corpus pair with planted missing cells, planted outlier
    /// rows, and calibrated intensity bands.
    Calibrated,
    /// One benign corpus, split into train/eval by `eval_fraction`.
    Benign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    /// Glob pattern for `source = "files"`.
    pub glob: String,
    /// Corpus profile for `source = "synthetic"`.
    pub profile: ProfileKind,
    /// Feature columns for synthetic corpora.
    pub n_cols: usize,
    /// Rows of the benign synthetic corpus.
    pub benign_rows: usize,
    /// Eval share for sources that are split (files, benign profile).
    pub eval_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            glob: String::new(),
            profile: ProfileKind::Calibrated,
            n_cols: 13,
            benign_rows: 1000,
            eval_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n_qubits: usize,
    pub layers: usize,
    pub encoder: EncoderKind,
    pub readout_qubit: usize,
    /// Dataset columns fed to the encoder, in order. Omitted: the first
    /// columns the encoder can hold on `n_qubits` qubits.
    pub feature_indices: Option<Vec<usize>>,
    /// Initial parameters are drawn uniformly from `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            layers: 2,
            encoder: EncoderKind::Angle,
            readout_qubit: 0,
            feature_indices: None,
            init_scale: 0.1,
        }
    }
}

impl ModelConfig {
    /// Columns the encoder will read, resolving the default projection.
    pub fn resolved_feature_indices(&self) -> Vec<usize> {
        match &self.feature_indices {
            Some(indices) => indices.clone(),
            None => {
                let width = match self.encoder {
                    EncoderKind::Angle | EncoderKind::Basis => self.n_qubits,
                    EncoderKind::Amplitude => 1usize << self.n_qubits,
                };
                (0..width).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub gradient: GradientMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 128,
            epochs: 12,
            gradient: GradientMode::ParameterShift,
        }
    }
}

impl TrainingConfig {
    /// Expands into the trainer's config, seeding the shuffle stream from
    /// the master seed.
    pub fn to_train_config(&self, master_seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: derived_seed(master_seed, SeedStream::Shuffle),
            gradient: self.gradient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Segment grid shape: segments are named `(r, c)`.
    pub grid_rows: u32,
    pub grid_cols: u32,
    /// Event rounds; each round sends one flow to every segment.
    pub rounds: u32,
    /// Whether one segment receives attack flows.
    pub attack: bool,
    /// The segment under attack when `attack` is set.
    pub attack_segment: (u32, u32),
    /// First round in which the attack segment turns malicious.
    pub attack_from_round: u32,
    /// Events per threshold-feedback window; omitted disables feedback.
    pub feedback_window: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            grid_rows: 3,
            grid_cols: 3,
            rounds: 8,
            attack: true,
            attack_segment: (1, 1),
            attack_from_round: 2,
            feedback_window: None,
        }
    }
}

// --------------------------------------------------------------------------
// RunConfig
// --------------------------------------------------------------------------

/// The complete, validated description of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; every stochastic component derives from it.
    pub seed: u64,
    /// Directory all artifacts are written to.
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub training: TrainingConfig,
    pub thresholds: Thresholds,
    pub simulation: SimulationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("qzt-out"),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
            thresholds: Thresholds::default(),
            simulation: SimulationConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML string. Unknown keys are errors.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads and parses a TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Serializes back to TOML (round-trips through [`Self::from_toml_str`]).
    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Applies command-line overrides; `None` keeps the file's value.
    pub fn with_overrides(mut self, seed: Option<u64>, out_dir: Option<PathBuf>) -> Self {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(out_dir) = out_dir {
            self.out_dir = out_dir;
        }
        self
    }

    /// Checks every invariant the pipeline relies on. Runs before any side
    /// effect, so a bad config never leaves partial artifacts behind.
    pub fn validate(&self) -> Result<()> {
        if self.out_dir.as_os_str().is_empty() {
            return Err(invalid("out_dir must not be empty"));
        }

        match self.data.source {
            DataSource::Files => {
                if self.data.glob.is_empty() {
                    return Err(invalid("data.glob is required when data.source = \"files\""));
                }
                glob::Pattern::new(&self.data.glob)
                    .map_err(|e| invalid(format!("data.glob is not a valid pattern: {e}")))?;
            }
            DataSource::Synthetic => {
                if self.data.n_cols < 2 {
                    return Err(invalid("data.n_cols must be at least 2"));
                }
                if self.data.profile == ProfileKind::Benign && self.data.benign_rows < 100 {
                    return Err(invalid("data.benign_rows must be at least 100"));
                }
            }
        }
        if !(self.data.eval_fraction > 0.0 && self.data.eval_fraction < 1.0) {
            return Err(invalid(
                "data.eval_fraction must lie strictly between 0 and 1",
            ));
        }

        let m = &self.model;
        if m.n_qubits == 0 || m.n_qubits > MAX_QUBITS {
            return Err(invalid(format!(
                "model.n_qubits must lie in 1..={MAX_QUBITS}"
            )));
        }
        if m.readout_qubit >= m.n_qubits {
            return Err(invalid("model.readout_qubit must name an existing qubit"));
        }
        if !(m.init_scale.is_finite() && m.init_scale >= 0.0) {
            return Err(invalid("model.init_scale must be finite and >= 0"));
        }
        let indices = m.resolved_feature_indices();
        if indices.is_empty() {
            return Err(invalid("model.feature_indices must not be empty"));
        }
        if m.encoder.width_for(indices.len()) != m.n_qubits {
            return Err(invalid(format!(
                "model.feature_indices selects {} features, which a {:?} encoder cannot place on {} qubits",
                indices.len(),
                m.encoder,
                m.n_qubits
            )));
        }

        let t = &self.training;
        if !(t.learning_rate.is_finite() && t.learning_rate > 0.0) {
            return Err(invalid("training.learning_rate must be finite and > 0"));
        }
        if t.batch_size == 0 {
            return Err(invalid("training.batch_size must be at least 1"));
        }
        if t.epochs == 0 {
            return Err(invalid("training.epochs must be at least 1"));
        }

        self.thresholds
            .validate()
            .map_err(|e| invalid(e.to_string()))?;

        let s = &self.simulation;
        if s.grid_rows == 0 || s.grid_cols == 0 {
            return Err(invalid("simulation grid must be at least 1x1"));
        }
        if s.rounds == 0 {
            return Err(invalid("simulation.rounds must be at least 1"));
        }
        let (r, c) = s.attack_segment;
        if s.attack && (r >= s.grid_rows || c >= s.grid_cols) {
            return Err(invalid(format!(
                "simulation.attack_segment ({r}, {c}) lies outside the {}x{} grid",
                s.grid_rows, s.grid_cols
            )));
        }
        if s.feedback_window == Some(0) {
            return Err(invalid(
                "simulation.feedback_window must be at least 1 when set",
            ));
        }
        Ok(())
    }
}

// --------------------------------------------------------------------------
// Tests
// --------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trips_exactly() {
        let config = RunConfig::default();
        let text = config.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(config, back);

        // A customized config round-trips too.
        let mut custom = RunConfig::default();
        custom.seed = 7;
        custom.data.source = DataSource::Files;
        custom.data.glob = "data/*.csv".to_string();
        custom.model.feature_indices = Some(vec![0, 3, 7, 12]);
        custom.simulation.attack = false;
        custom.simulation.feedback_window = Some(25);
        custom.thresholds.gamma1 = 0.4;
        let text = custom.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), custom);
    }

    #[test]
    fn minimal_and_partial_toml_take_defaults() {
        let config = RunConfig::from_toml_str("").unwrap();
        assert_eq!(config, RunConfig::default());

        let config = RunConfig::from_toml_str(
            "seed = 9\n[model]\nn_qubits = 3\n[thresholds]\ngamma1 = 0.3\n",
        )
        .unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.model.n_qubits, 3);
        assert_eq!(config.model.layers, 2);
        assert_eq!(config.thresholds.gamma1, 0.3);
        assert_eq!(config.thresholds.gamma2, 0.9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("sead = 3\n").is_err());
        assert!(RunConfig::from_toml_str("[model]\nqubits = 4\n").is_err());
    }

    #[test]
    fn validation_catches_each_section() {
        let mut c = RunConfig::default();
        c.out_dir = PathBuf::new();
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.data.source = DataSource::Files;
        assert!(c.validate().is_err()); // glob missing

        let mut c = RunConfig::default();
        c.data.eval_fraction = 1.0;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.model.n_qubits = 0;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.model.readout_qubit = 4;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.model.feature_indices = Some(vec![0, 1, 2]);
        assert!(c.validate().is_err()); // 3 features on 4 qubits

        let mut c = RunConfig::default();
        c.training.epochs = 0;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.thresholds.gamma1 = 0.95;
        assert!(c.validate().is_err());

        let mut c = RunConfig::default();
        c.simulation.attack_segment = (5, 0);
        assert!(c.validate().is_err());
        c.simulation.attack = false;
        c.validate().unwrap(); // out-of-grid target is fine when no attack runs

        let mut c = RunConfig::default();
        c.simulation.feedback_window = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn amplitude_encoder_feature_width_is_checked() {
        let mut c = RunConfig::default();
        c.model.encoder = EncoderKind::Amplitude;
        c.model.n_qubits = 3;
        c.model.feature_indices = Some((0..8).collect());
        c.validate().unwrap();
        c.model.feature_indices = Some((0..9).collect());
        assert!(c.validate().is_err());
        // Default projection for amplitude encoding fills the register.
        c.model.feature_indices = None;
        assert_eq!(c.model.resolved_feature_indices().len(), 8);
    }

    #[test]
    fn seed_streams_are_distinct_and_deterministic() {
        let streams = [
            SeedStream::TrainCorpus,
            SeedStream::EvalCorpus,
            SeedStream::ModelInit,
            SeedStream::Shuffle,
            SeedStream::Split,
            SeedStream::Simulation,
        ];
        let mut seen = std::collections::HashSet::new();
        for &s in &streams {
            let a = derived_seed(42, s);
            assert_eq!(a, derived_seed(42, s));
            assert!(seen.insert(a), "stream collision");
            assert_ne!(a, derived_seed(43, s));
        }
    }

    #[test]
    fn overrides_replace_only_given_fields() {
        let base = RunConfig::default();
        let same = base.clone().with_overrides(None, None);
        assert_eq!(same, base);
        let changed = base
            .clone()
            .with_overrides(Some(7), Some(PathBuf::from("elsewhere")));
        assert_eq!(changed.seed, 7);
        assert_eq!(changed.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(changed.model, base.model);
    }
}
