//! Pipeline stages behind the `qzt` command-line tool.
//!
//! Each stage is a library function taking a validated [`RunConfig`]: ingest
//! writes cleaned datasets, train writes a model checkpoint and its history,
//! evaluate writes the metrics bundle, simulate writes the policy event log
//! and segmentation snapshots, and report consolidates whatever exists into
//! one text file. Stages communicate only through files in the run's output
//! directory, so any stage can be rerun or resumed independently.
//!
//! Every stage validates the whole configuration before touching the
//! filesystem — a configuration error never leaves partial artifacts — and
//! all writes are deterministic under the master seed: rerunning a stage
//! with the same config produces byte-identical files.
//!
//! Every emitted artifact states its schema version up front: line-oriented
//! files (CSV, key=value text) begin with the [`SCHEMA_LINE`] comment, the
//! event log's first record is a schema marker, and the checkpoint carries a
//! version field inside its JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, DataSource, ProfileKind, RunConfig, SeedStream, derived_seed};
use crate::flows::{self, CleaningReport, FlowsError, LabeledDataset, RawTable, SynthProfile};
use crate::metrics::{self, MetricsError, RocCurve};
use crate::policy::{
    FlowEvent, PolicyError, SegmentSnapshot, SimulationOutcome, UserDeviceContext,
};
use crate::vqc::{self, Sample, VariationalModel, VqcError, classify};

// --------------------------------------------------------------------------
// Errors and exit codes
// --------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("data error: {0}")]
    Flows(#[from] FlowsError),
    #[error("model error: {0}")]
    Vqc(#[from] VqcError),
    #[error("metrics error: {0}")]
    Metrics(#[from] MetricsError),
    #[error("policy error: {0}")]
    Policy(#[from] PolicyError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing artifact {path} ({hint})")]
    MissingArtifact { path: PathBuf, hint: &'static str },
    #[error("data error: {0}")]
    Data(String),
}

type Result<T> = std::result::Result<T, PipelineError>;

impl PipelineError {
    /// Process exit code: 2 for configuration errors, 4 for numeric
    /// failures (training cost went non-finite), 3 for everything else
    /// (data, artifacts, i/o).
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Vqc(VqcError::NonFiniteCost) => 4,
            _ => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// --------------------------------------------------------------------------
// Artifact layout
// --------------------------------------------------------------------------

/// First line of every line-oriented artifact.
pub const SCHEMA_LINE: &str = "# qzt-schema: v1";
/// First record of the event log.
pub const EVENTS_SCHEMA: &str = r#"{"schema":"qzt-events-v1"}"#;

pub const TRAIN_DATA_FILE: &str = "train_clean.csv";
pub const EVAL_DATA_FILE: &str = "eval_clean.csv";
pub const CLEANING_REPORT_FILE: &str = "cleaning_report.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const ROC_ANOMALOUS_FILE: &str = "roc_anomalous.csv";
pub const ROC_MALICIOUS_FILE: &str = "roc_malicious.csv";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_BEFORE_FILE: &str = "snapshot_before.csv";
pub const SNAPSHOT_AFTER_FILE: &str = "snapshot_after.csv";
pub const SIMULATION_FILE: &str = "simulation.txt";
pub const REPORT_FILE: &str = "report.txt";

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn read_text(path: &Path, hint: &'static str) -> Result<String> {
    if !path.exists() {
        return Err(PipelineError::MissingArtifact {
            path: path.to_path_buf(),
            hint,
        });
    }
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes a [`RawTable`] with labels as CSV behind the schema comment line.
fn write_dataset(path: &Path, table: &RawTable, labels: &[u8]) -> Result<()> {
    let mut buf: Vec<u8> = format!("{SCHEMA_LINE}\n").into_bytes();
    table.write_csv(Some(labels), &mut buf)?;
    fs::write(path, buf).map_err(io_err(path))
}

/// Reloads a dataset CSV written by [`write_dataset`]. The schema comment is
/// skipped and the trailing label column stripped by the flow loader; labels
/// are rederived downstream from the cell values, which round-trip exactly.
fn read_dataset(dir: &Path, file: &str, hint: &'static str) -> Result<RawTable> {
    let path = dir.join(file);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact { path, hint });
    }
    Ok(flows::load_flows(&path.to_string_lossy())?)
}

// --------------------------------------------------------------------------
// Ingest
// --------------------------------------------------------------------------

/// What `ingest` produced, echoed to the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub train_report: CleaningReport,
    pub eval_report: CleaningReport,
    /// Rows per class (normal, suspicious, malicious) on each side.
    pub train_label_counts: [usize; 3],
    pub eval_label_counts: [usize; 3],
}

fn labeled_pair(cfg: &RunConfig) -> Result<(LabeledDataset, LabeledDataset, CleaningReport, CleaningReport)> {
    match cfg.data.source {
        DataSource::Synthetic => match cfg.data.profile {
            ProfileKind::Calibrated => {
                let train_profile = SynthProfile::train_corpus();
                let eval_profile = SynthProfile::eval_corpus();
                let train_raw = flows::synth_generate(
                    train_profile.total_rows().expect("calibrated profile pins its row count"),
                    cfg.data.n_cols,
                    derived_seed(cfg.seed, SeedStream::TrainCorpus),
                    &train_profile,
                )?;
                let eval_raw = flows::synth_generate(
                    eval_profile.total_rows().expect("calibrated profile pins its row count"),
                    cfg.data.n_cols,
                    derived_seed(cfg.seed, SeedStream::EvalCorpus),
                    &eval_profile,
                )?;
                let (train_clean, train_report) = flows::clean(&train_raw, flows::DEFAULT_IQR_FACTOR)?;
                let (eval_clean, eval_report) = flows::clean(&eval_raw, flows::DEFAULT_IQR_FACTOR)?;
                let train_ds = flows::label(&train_clean)?;
                let eval_ds = flows::label_with(&eval_clean, &train_ds.thresholds, &train_ds.scaler)?;
                Ok((train_ds, eval_ds, train_report, eval_report))
            }
            ProfileKind::Benign => {
                let profile = SynthProfile::benign();
                let raw = flows::synth_generate(
                    cfg.data.benign_rows,
                    cfg.data.n_cols,
                    derived_seed(cfg.seed, SeedStream::TrainCorpus),
                    &profile,
                )?;
                split_cleaned(cfg, &raw)
            }
        },
        DataSource::Files => {
            let raw = flows::load_flows(&cfg.data.glob)?;
            split_cleaned(cfg, &raw)
        }
    }
}

fn split_cleaned(
    cfg: &RunConfig,
    raw: &RawTable,
) -> Result<(LabeledDataset, LabeledDataset, CleaningReport, CleaningReport)> {
    let (clean, report) = flows::clean(raw, flows::DEFAULT_IQR_FACTOR)?;
    let ds = flows::label(&clean)?;
    let (train_ds, eval_ds) = flows::split(&ds, cfg.data.eval_fraction, derived_seed(cfg.seed, SeedStream::Split))?;
    // One corpus was cleaned; attribute the cleaning to the train side and
    // report the eval side as already clean.
    let train_report = CleaningReport {
        missing_imputed: report.missing_imputed,
        outliers_removed: report.outliers_removed,
        rows_remaining: train_ds.n_rows(),
    };
    let eval_report = CleaningReport {
        missing_imputed: 0,
        outliers_removed: 0,
        rows_remaining: eval_ds.n_rows(),
    };
    Ok((train_ds, eval_ds, train_report, eval_report))
}

fn cleaning_report_text(summary: &IngestSummary) -> String {
    let mut out = format!("{SCHEMA_LINE}\n");
    for (side, report, counts) in [
        ("train", &summary.train_report, &summary.train_label_counts),
        ("eval", &summary.eval_report, &summary.eval_label_counts),
    ] {
        for line in report.to_key_value().lines() {
            let _ = writeln!(out, "{side}_{line}");
        }
        let _ = writeln!(out, "{side}_label_normal={}", counts[0]);
        let _ = writeln!(out, "{side}_label_suspicious={}", counts[1]);
        let _ = writeln!(out, "{side}_label_malicious={}", counts[2]);
    }
    out
}

/// Builds (or loads), cleans, labels and splits the corpus, then writes both
/// cleaned datasets and the cleaning report.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestSummary> {
    cfg.validate()?;
    let (train_ds, eval_ds, train_report, eval_report) = labeled_pair(cfg)?;
    let summary = IngestSummary {
        train_report,
        eval_report,
        train_label_counts: train_ds.label_counts(),
        eval_label_counts: eval_ds.label_counts(),
    };

    ensure_out_dir(cfg)?;
    write_dataset(
        &cfg.out_dir.join(TRAIN_DATA_FILE),
        &train_ds.to_raw_table("ingest:train"),
        &train_ds.labels,
    )?;
    write_dataset(
        &cfg.out_dir.join(EVAL_DATA_FILE),
        &eval_ds.to_raw_table("ingest:eval"),
        &eval_ds.labels,
    )?;
    write_text(&cfg.out_dir.join(CLEANING_REPORT_FILE), &cleaning_report_text(&summary))?;
    Ok(summary)
}

// --------------------------------------------------------------------------
// Shared dataset recovery
// --------------------------------------------------------------------------

/// Reloads both cleaned datasets and refits labels and scaling exactly as
/// ingest did: the train side is fitted from its own values, the eval side
/// labeled and scaled with the train fit. Cell values round-trip through the
/// CSVs bit for bit, so the recovered datasets equal the ingested ones.
fn recover_datasets(cfg: &RunConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    const HINT: &str = "run `qzt ingest` first";
    let train_table = read_dataset(&cfg.out_dir, TRAIN_DATA_FILE, HINT)?;
    let eval_table = read_dataset(&cfg.out_dir, EVAL_DATA_FILE, HINT)?;
    let train_ds = flows::label(&train_table)?;
    let eval_ds = flows::label_with(&eval_table, &train_ds.thresholds, &train_ds.scaler)?;
    Ok((train_ds, eval_ds))
}

/// Projects dataset rows onto the model's feature columns.
fn project(cfg: &RunConfig, ds: &LabeledDataset) -> Result<Vec<Sample>> {
    let indices = cfg.model.resolved_feature_indices();
    if let Some(&bad) = indices.iter().find(|&&j| j >= ds.n_cols()) {
        return Err(PipelineError::Data(format!(
            "feature index {bad} outside the dataset's {} columns",
            ds.n_cols()
        )));
    }
    Ok(ds
        .samples()
        .into_iter()
        .map(|s| Sample {
            features: indices.iter().map(|&j| s.features[j]).collect(),
            label: s.label,
        })
        .collect())
}

// --------------------------------------------------------------------------
// Train
// --------------------------------------------------------------------------

/// What `train` produced, echoed to the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_cost: f64,
    pub final_train_accuracy: f64,
    pub final_val_accuracy: f64,
    /// Operator feedback only; never written into artifacts.
    pub wall_seconds: f64,
}

fn history_csv(history: &[vqc::EpochStats]) -> String {
    let mut out = format!("{SCHEMA_LINE}\nepoch,mean_cost,train_accuracy,val_accuracy\n");
    for e in history {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.epoch, e.mean_cost, e.train_accuracy, e.val_accuracy
        );
    }
    out
}

/// Trains a freshly seeded model on the ingested train split and writes the
/// checkpoint and epoch history.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let (train_ds, eval_ds) = recover_datasets(cfg)?;
    let train_samples = project(cfg, &train_ds)?;
    let eval_samples = project(cfg, &eval_ds)?;

    let mut model = VariationalModel::with_random_init(
        cfg.model.n_qubits,
        cfg.model.layers,
        cfg.model.encoder,
        derived_seed(cfg.seed, SeedStream::ModelInit),
        cfg.model.init_scale,
    )?;
    model.set_readout_qubit(cfg.model.readout_qubit)?;

    let outcome = vqc::train(
        &mut model,
        &train_samples,
        &eval_samples,
        &cfg.training.to_train_config(cfg.seed),
    )?;

    ensure_out_dir(cfg)?;
    model.save(&cfg.out_dir.join(CHECKPOINT_FILE))?;
    write_text(&cfg.out_dir.join(HISTORY_FILE), &history_csv(&outcome.history))?;

    let last = outcome.history.last().expect("training always records at least one epoch");
    Ok(TrainSummary {
        epochs: outcome.history.len(),
        final_cost: last.mean_cost,
        final_train_accuracy: last.train_accuracy,
        final_val_accuracy: last.val_accuracy,
        wall_seconds: outcome.wall_seconds,
    })
}

fn load_checkpoint(cfg: &RunConfig) -> Result<VariationalModel> {
    let path = cfg.out_dir.join(CHECKPOINT_FILE);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact {
            path,
            hint: "run `qzt train` first",
        });
    }
    Ok(VariationalModel::load(&path)?)
}

// --------------------------------------------------------------------------
// Evaluate
// --------------------------------------------------------------------------

/// What `evaluate` produced, echoed to the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub auc_anomalous: f64,
    pub auc_malicious: f64,
    pub gamma1_star: f64,
    pub gamma2_star: f64,
    pub accuracy: f64,
    pub n_eval: usize,
}

fn roc_csv(curve: &RocCurve) -> String {
    let mut out = format!("{SCHEMA_LINE}\ngamma,tpr,fpr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.gamma, p.tpr, p.fpr);
    }
    out
}

/// Probe thresholds for the sensitivity sweep: 0.02 to 0.98 in steps of
/// 0.02, keeping the central-difference stencil inside [0, 1].
const SENSITIVITY_STEPS: usize = 49;
const SENSITIVITY_H: f64 = 0.01;

fn sensitivity_csv(curve: &RocCurve) -> Result<String> {
    let mut out = format!("{SCHEMA_LINE}\ngamma,dj_dgamma\n");
    for k in 1..=SENSITIVITY_STEPS {
        let gamma = 0.02 * k as f64;
        let s = metrics::sensitivity(curve, gamma, SENSITIVITY_H)?;
        let _ = writeln!(out, "{gamma},{s}");
    }
    Ok(out)
}

/// Scores the eval split with the trained checkpoint and writes the metrics
/// bundle: both one-vs-rest ROC curves, their AUCs, fitted thresholds, the
/// threshold sensitivity sweep, and the confusion summary.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluateSummary> {
    cfg.validate()?;
    let (_, eval_ds) = recover_datasets(cfg)?;
    let model = load_checkpoint(cfg)?;
    let eval_samples = project(cfg, &eval_ds)?;

    let scores = vqc::scores_for(&model, &eval_samples)?;
    let labels: Vec<u8> = eval_samples.iter().map(|s| s.label).collect();

    let roc_anomalous = metrics::roc(&scores, &metrics::anomalous_positives(&labels))?;
    let roc_malicious = metrics::roc(&scores, &metrics::malicious_positives(&labels))?;
    let auc_anomalous = metrics::auc(&roc_anomalous);
    let auc_malicious = metrics::auc(&roc_malicious);
    let (gamma1, gamma2) = metrics::three_class_thresholds(&scores, &labels)?;

    let predicted: Vec<u8> = scores
        .iter()
        .map(|&s| classify(s, gamma1, gamma2).map(|c| c.index()))
        .collect::<std::result::Result<_, _>>()?;
    let confusion = metrics::confusion(&predicted, &labels)?;

    let summary = EvaluateSummary {
        auc_anomalous,
        auc_malicious,
        gamma1_star: gamma1,
        gamma2_star: gamma2,
        accuracy: confusion.accuracy,
        n_eval: eval_samples.len(),
    };

    let mut metrics_text = format!("{SCHEMA_LINE}\n");
    let _ = writeln!(metrics_text, "auc_anomalous={auc_anomalous}");
    let _ = writeln!(metrics_text, "auc_malicious={auc_malicious}");
    let _ = writeln!(metrics_text, "gamma1_star={gamma1}");
    let _ = writeln!(metrics_text, "gamma2_star={gamma2}");
    let _ = writeln!(metrics_text, "accuracy={}", confusion.accuracy);
    let _ = writeln!(metrics_text, "n_eval={}", summary.n_eval);
    let _ = writeln!(metrics_text, "clamped_cells={}", eval_ds.clamped);
    for (t, row) in confusion.counts.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            let _ = writeln!(metrics_text, "confusion_{t}{p}={n}");
        }
    }

    ensure_out_dir(cfg)?;
    write_text(&cfg.out_dir.join(ROC_ANOMALOUS_FILE), &roc_csv(&roc_anomalous))?;
    write_text(&cfg.out_dir.join(ROC_MALICIOUS_FILE), &roc_csv(&roc_malicious))?;
    write_text(&cfg.out_dir.join(SENSITIVITY_FILE), &sensitivity_csv(&roc_anomalous)?)?;
    write_text(&cfg.out_dir.join(METRICS_FILE), &metrics_text)?;
    Ok(summary)
}

// --------------------------------------------------------------------------
// Simulate
// --------------------------------------------------------------------------

/// What `simulate` produced, echoed to the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub n_events: usize,
    pub n_segments: usize,
    pub isolated_segments: Vec<(u32, u32)>,
    pub final_gamma1: f64,
    pub final_gamma2: f64,
}

/// Benign flows carry quiet user/device signals; attack flows noisy ones.
const BENIGN_CONTEXT: f64 = 0.2;
const ATTACK_CONTEXT: f64 = 0.8;

/// Builds the scripted event stream: every round sends one flow to every
/// segment (ticks are round numbers, segments in row-major order). Benign
/// flows sample ground-truth-normal eval rows; from `attack_from_round` on,
/// the attacked segment receives ground-truth-malicious rows instead.
fn build_stream(cfg: &RunConfig, eval_ds: &LabeledDataset) -> Result<Vec<FlowEvent>> {
    let indices = cfg.model.resolved_feature_indices();
    let rows = |class: u8| -> Vec<Vec<f64>> {
        eval_ds
            .features
            .iter()
            .zip(&eval_ds.labels)
            .filter(|&(_, &l)| l == class)
            .map(|(row, _)| indices.iter().map(|&j| row[j]).collect())
            .collect()
    };
    let benign_pool = rows(0);
    if benign_pool.is_empty() {
        return Err(PipelineError::Data(
            "evaluation split has no ground-truth-normal rows to drive benign traffic".into(),
        ));
    }
    let attack_pool = rows(2);
    if cfg.simulation.attack && attack_pool.is_empty() {
        return Err(PipelineError::Data(
            "evaluation split has no ground-truth-malicious rows to drive the attack".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, SeedStream::Simulation));
    let sim = &cfg.simulation;
    let mut stream = Vec::with_capacity((sim.rounds * sim.grid_rows * sim.grid_cols) as usize);
    for round in 0..sim.rounds {
        for r in 0..sim.grid_rows {
            for c in 0..sim.grid_cols {
                let attacking =
                    sim.attack && (r, c) == sim.attack_segment && round >= sim.attack_from_round;
                let (pool, level, label) = if attacking {
                    (&attack_pool, ATTACK_CONTEXT, 2)
                } else {
                    (&benign_pool, BENIGN_CONTEXT, 0)
                };
                let features = pool[rng.gen_range(0..pool.len())].clone();
                stream.push(FlowEvent {
                    tick: u64::from(round),
                    segment: (r, c),
                    context: UserDeviceContext {
                        user: vec![level],
                        device: vec![level],
                    },
                    features,
                    true_label: Some(label),
                });
            }
        }
    }
    Ok(stream)
}

fn snapshot_csv(snapshots: &[SegmentSnapshot]) -> String {
    let mut out = format!("{SCHEMA_LINE}\nsegment_row,segment_col,policy\n");
    for s in snapshots {
        let policy = serde_json::to_value(s.policy)
            .expect("policy serializes")
            .as_str()
            .expect("policy serializes to a string")
            .to_string();
        let _ = writeln!(out, "{},{},{}", s.segment.0, s.segment.1, policy);
    }
    out
}

fn events_jsonl(outcome: &SimulationOutcome) -> String {
    let mut out = format!("{EVENTS_SCHEMA}\n");
    for entry in &outcome.log {
        let line = serde_json::to_string(entry).expect("log entries serialize");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Replays the scripted attack scenario through the policy engine and
/// writes the event log, both grid snapshots, and the closing summary.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateSummary> {
    cfg.validate()?;
    let (_, eval_ds) = recover_datasets(cfg)?;
    let model = load_checkpoint(cfg)?;
    let stream = build_stream(cfg, &eval_ds)?;

    let outcome = crate::policy::run_simulation(
        &stream,
        &model,
        &cfg.thresholds,
        cfg.simulation.feedback_window,
    )?;

    let isolated: Vec<(u32, u32)> = outcome
        .after
        .iter()
        .filter(|s| s.policy == crate::policy::SegmentPolicy::Isolated)
        .map(|s| s.segment)
        .collect();

    let mut sim_text = format!("{SCHEMA_LINE}\n");
    let _ = writeln!(sim_text, "n_events={}", outcome.log.len());
    let _ = writeln!(sim_text, "n_segments={}", outcome.after.len());
    let _ = writeln!(sim_text, "isolated_segments={}", isolated.len());
    let _ = writeln!(sim_text, "final_gamma1={}", outcome.thresholds.gamma1);
    let _ = writeln!(sim_text, "final_gamma2={}", outcome.thresholds.gamma2);

    ensure_out_dir(cfg)?;
    write_text(&cfg.out_dir.join(EVENTS_FILE), &events_jsonl(&outcome))?;
    write_text(&cfg.out_dir.join(SNAPSHOT_BEFORE_FILE), &snapshot_csv(&outcome.before))?;
    write_text(&cfg.out_dir.join(SNAPSHOT_AFTER_FILE), &snapshot_csv(&outcome.after))?;
    write_text(&cfg.out_dir.join(SIMULATION_FILE), &sim_text)?;

    Ok(SimulateSummary {
        n_events: outcome.log.len(),
        n_segments: outcome.after.len(),
        isolated_segments: isolated,
        final_gamma1: outcome.thresholds.gamma1,
        final_gamma2: outcome.thresholds.gamma2,
    })
}

// --------------------------------------------------------------------------
// Report
// --------------------------------------------------------------------------

/// What `report` produced, echoed to the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub present_stages: Vec<&'static str>,
    pub missing_stages: Vec<&'static str>,
}

/// Key=value lines of a text artifact, schema and comment lines skipped.
fn key_value_lines(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .filter_map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
        })
        .collect()
}

/// Consolidates every artifact the previous stages left in the output
/// directory into one deterministic text report. Completed stages are
/// summarised with their key figures; stages that have not run are listed
/// as missing. Errors only when no stage has run at all.
pub fn cmd_report(cfg: &RunConfig) -> Result<ReportSummary> {
    cfg.validate()?;
    let dir = &cfg.out_dir;

    struct Stage {
        name: &'static str,
        files: &'static [&'static str],
    }
    let stages = [
        Stage {
            name: "ingest",
            files: &[TRAIN_DATA_FILE, EVAL_DATA_FILE, CLEANING_REPORT_FILE],
        },
        Stage {
            name: "train",
            files: &[CHECKPOINT_FILE, HISTORY_FILE],
        },
        Stage {
            name: "evaluate",
            files: &[
                ROC_ANOMALOUS_FILE,
                ROC_MALICIOUS_FILE,
                SENSITIVITY_FILE,
                METRICS_FILE,
            ],
        },
        Stage {
            name: "simulate",
            files: &[
                EVENTS_FILE,
                SNAPSHOT_BEFORE_FILE,
                SNAPSHOT_AFTER_FILE,
                SIMULATION_FILE,
            ],
        },
    ];

    let mut present: Vec<&'static str> = Vec::new();
    let mut missing: Vec<&'static str> = Vec::new();
    let mut body = String::new();

    for stage in &stages {
        let absent: Vec<&&str> = stage.files.iter().filter(|f| !dir.join(f).exists()).collect();
        if !absent.is_empty() {
            missing.push(stage.name);
            let _ = writeln!(body, "[{}] missing — artifacts not found:", stage.name);
            for f in absent {
                let _ = writeln!(body, "  {f}");
            }
            body.push('\n');
            continue;
        }
        present.push(stage.name);
        let _ = writeln!(body, "[{}] complete", stage.name);
        for f in stage.files {
            let _ = writeln!(body, "  {f}");
        }
        match stage.name {
            "ingest" => {
                let text = read_text(&dir.join(CLEANING_REPORT_FILE), "")?;
                for (k, v) in key_value_lines(&text) {
                    let _ = writeln!(body, "  {k} = {v}");
                }
            }
            "train" => {
                let text = read_text(&dir.join(HISTORY_FILE), "")?;
                let rows: Vec<&str> = text
                    .lines()
                    .filter(|l| !l.starts_with('#') && !l.starts_with("epoch,"))
                    .collect();
                let _ = writeln!(body, "  epochs = {}", rows.len());
                if let Some(last) = rows.last() {
                    let _ = writeln!(body, "  final epoch = {last}");
                }
            }
            "evaluate" => {
                let text = read_text(&dir.join(METRICS_FILE), "")?;
                for (k, v) in key_value_lines(&text) {
                    if !k.starts_with("confusion_") {
                        let _ = writeln!(body, "  {k} = {v}");
                    }
                }
            }
            "simulate" => {
                let text = read_text(&dir.join(SIMULATION_FILE), "")?;
                for (k, v) in key_value_lines(&text) {
                    let _ = writeln!(body, "  {k} = {v}");
                }
            }
            _ => unreachable!(),
        }
        body.push('\n');
    }

    if present.is_empty() {
        return Err(PipelineError::MissingArtifact {
            path: dir.join(TRAIN_DATA_FILE),
            hint: "no stage has run yet; run `qzt ingest` first",
        });
    }

    let mut text = format!("{SCHEMA_LINE}\n");
    let _ = writeln!(text, "run report (seed {})\n", cfg.seed);
    text.push_str(&body);
    ensure_out_dir(cfg)?;
    write_text(&dir.join(REPORT_FILE), &text)?;
    Ok(ReportSummary {
        present_stages: present,
        missing_stages: missing,
    })
}

// --------------------------------------------------------------------------
