//! `qzt` — deterministic anomaly-scoring and zero-trust policy pipeline.
//!
//! Five verbs cover the run lifecycle: `ingest` builds the cleaned and
//! labeled datasets, `train` fits the variational model, `evaluate` writes
//! the metrics bundle, `simulate` replays a scripted attack through the
//! policy engine, and `report` consolidates whatever the other stages left
//! behind. All stages read one config file and write into one output
//! directory; a fixed master seed makes every artifact byte-reproducible.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data or artifact error,
//! 4 numeric failure during training.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qzt_core::config::RunConfig;
use qzt_core::pipeline::{
    self, EvaluateSummary, IngestSummary, ReportSummary, SimulateSummary, TrainSummary,
};

#[derive(Parser)]
#[command(
    name = "qzt",
    version,
    about = "Quantum-style anomaly scoring with zero-trust segmentation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the run configuration (TOML). Omitted: built-in defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed override; every stochastic component derives from it.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory override for all artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load), clean, label and split the flow corpus.
    Ingest(CommonArgs),
    /// Train the variational model on the ingested datasets.
    Train(CommonArgs),
    /// Score the evaluation split and write the metrics bundle.
    Evaluate(CommonArgs),
    /// Replay a scripted attack stream through the policy engine.
    Simulate(CommonArgs),
    /// Consolidate all artifacts into one run report.
    Report(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Ingest(c)
            | Command::Train(c)
            | Command::Evaluate(c)
            | Command::Simulate(c)
            | Command::Report(c) => c,
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, pipeline::PipelineError> {
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Ok(cfg.with_overrides(args.seed, args.out.clone()))
}

fn print_ingest(s: &IngestSummary) {
    println!(
        "ingest: train {} rows ({} missing imputed, {} outlier rows removed), labels {}/{}/{}",
        s.train_report.rows_remaining,
        s.train_report.missing_imputed,
        s.train_report.outliers_removed,
        s.train_label_counts[0],
        s.train_label_counts[1],
        s.train_label_counts[2],
    );
    println!(
        "ingest: eval  {} rows ({} missing imputed, {} outlier rows removed), labels {}/{}/{}",
        s.eval_report.rows_remaining,
        s.eval_report.missing_imputed,
        s.eval_report.outliers_removed,
        s.eval_label_counts[0],
        s.eval_label_counts[1],
        s.eval_label_counts[2],
    );
}

fn print_train(s: &TrainSummary) {
    println!(
        "train: {} epochs in {:.1}s, final cost {:.6}, accuracy train {:.4} / val {:.4}",
        s.epochs, s.wall_seconds, s.final_cost, s.final_train_accuracy, s.final_val_accuracy
    );
}

fn print_evaluate(s: &EvaluateSummary) {
    println!(
        "evaluate: {} rows, AUC anomalous {:.4} / malicious {:.4}, gamma* ({:.4}, {:.4}), accuracy {:.4}",
        s.n_eval, s.auc_anomalous, s.auc_malicious, s.gamma1_star, s.gamma2_star, s.accuracy
    );
}

fn print_simulate(s: &SimulateSummary) {
    let isolated: Vec<String> = s
        .isolated_segments
        .iter()
        .map(|(r, c)| format!("({r},{c})"))
        .collect();
    println!(
        "simulate: {} events over {} segments, isolated [{}], final gamma ({:.4}, {:.4})",
        s.n_events,
        s.n_segments,
        isolated.join(" "),
        s.final_gamma1,
        s.final_gamma2
    );
}

fn print_report(s: &ReportSummary) {
    println!(
        "report: stages complete [{}], missing [{}]",
        s.present_stages.join(" "),
        s.missing_stages.join(" ")
    );
}

fn run(cli: &Cli) -> Result<(), pipeline::PipelineError> {
    let cfg = load_config(cli.command.common())?;
    match &cli.command {
        Command::Ingest(_) => print_ingest(&pipeline::cmd_ingest(&cfg)?),
        Command::Train(_) => print_train(&pipeline::cmd_train(&cfg)?),
        Command::Evaluate(_) => print_evaluate(&pipeline::cmd_evaluate(&cfg)?),
        Command::Simulate(_) => print_simulate(&pipeline::cmd_simulate(&cfg)?),
        Command::Report(_) => print_report(&pipeline::cmd_report(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qzt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
