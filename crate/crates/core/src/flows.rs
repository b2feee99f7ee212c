//! Flow-record ingestion, cleaning, quantile labeling, splitting, and a
//! seeded synthetic traffic generator.
//!
//! The module owns the tabular side of the pipeline:
//!
//! * [`load_flows`] concatenates CSV files matched by a glob pattern into a
//!   [`RawTable`], marking non-numeric cells as missing.
//! * [`clean`] zero-imputes missing cells and drops rows containing
//!   interquartile-range outliers, reporting exact counts.
//! * [`label`] derives a three-way class per row from per-column 95th/99th
//!   percentiles and min-max scales features to `[0, 1]`.
//! * [`label_with`] reapplies a previously fitted scaler and thresholds to a
//!   second table (clamping features and counting the clamps), so evaluation
//!   data never leaks into the fit.
//! * [`split`] produces a stratified train/eval partition and refits the
//!   scaler and thresholds on the train side only.
//! * [`synth_generate`] produces seeded traffic tables with planted missing
//!   cells, planted outlier rows, and configurable high-intensity bands.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use std::io::Write;
use std::path::PathBuf;
use thiserror::Error;

// --------------------------------------------------------------------------
// Errors
// --------------------------------------------------------------------------

/// Failure modes of the tabular pipeline.
#[derive(Debug, Error)]
pub enum FlowsError {
    #[error("glob pattern is invalid: {0}")]
    Pattern(#[from] glob::PatternError),
    #[error("failed to read a path matched by the glob: {0}")]
    Glob(#[from] glob::GlobError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("no files matched pattern {pattern:?}")]
    NoFilesMatched { pattern: String },
    #[error("file {path:?} has no header row")]
    EmptyFile { path: String },
    #[error("file {path:?} header differs from the first file's header")]
    HeaderMismatch { path: String },
    #[error("table has no rows")]
    EmptyTable,
    #[error("iqr factor must be finite and positive, got {0}")]
    BadIqrFactor(f64),
    #[error("labeling needs at least {min} rows, got {rows}")]
    NotEnoughRows { rows: usize, min: usize },
    #[error("table still contains missing cells; clean it first")]
    MissingCells,
    #[error("expected {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("eval fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("label column length {labels} does not match row count {rows}")]
    LabelLength { labels: usize, rows: usize },
    #[error("invalid synthesis profile: {0}")]
    InvalidProfile(String),
}

// --------------------------------------------------------------------------
// Domain types
// --------------------------------------------------------------------------

/// A rectangular table of real-valued cells, some possibly missing, plus the
/// provenance of every file that contributed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    /// Feature column names, in order.
    pub columns: Vec<String>,
    /// Row-major cells; `None` marks a missing value.
    pub rows: Vec<Vec<Option<f64>>>,
    /// Where the rows came from (file paths or a generator tag).
    pub sources: Vec<String>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Writes the table as CSV: a header row, one record per row, missing
    /// cells as empty fields. With `labels` given, appends a trailing
    /// integer `label` column (accepted back by [`load_flows`], which strips
    /// it). Floats are written in shortest round-trip form, so a write/load
    /// cycle reproduces the cells bit for bit.
    pub fn write_csv<W: Write>(&self, labels: Option<&[u8]>, writer: W) -> Result<(), FlowsError> {
        if let Some(labels) = labels {
            if labels.len() != self.rows.len() {
                return Err(FlowsError::LabelLength {
                    labels: labels.len(),
                    rows: self.rows.len(),
                });
            }
        }
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = self.columns.clone();
        if labels.is_some() {
            header.push("label".to_string());
        }
        out.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for (i, row) in self.rows.iter().enumerate() {
            record.clear();
            for cell in row {
                record.push(match cell {
                    Some(v) => v.to_string(),
                    None => String::new(),
                });
            }
            if let Some(labels) = labels {
                record.push(labels[i].to_string());
            }
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Exact bookkeeping of one [`clean`] pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleaningReport {
    /// Missing cells replaced by zero.
    pub missing_imputed: usize,
    /// Rows dropped because some cell fell outside its column's fences.
    pub outliers_removed: usize,
    /// Rows surviving the pass; always `input rows - outliers_removed`.
    pub rows_remaining: usize,
}

impl CleaningReport {
    /// Renders the report as `key=value` lines, one per field.
    pub fn to_key_value(&self) -> String {
        format!(
            "missing_imputed={}\noutliers_removed={}\nrows_remaining={}\n",
            self.missing_imputed, self.outliers_removed, self.rows_remaining
        )
    }
}

/// A fully numeric, scaled, and labeled dataset, carrying the fit that
/// produced it so the same fit can be reapplied elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// Feature column names, in order.
    pub columns: Vec<String>,
    /// Min-max scaled features; every value lies in `[0, 1]`.
    pub features: Vec<Vec<f64>>,
    /// Per-row class in `{0, 1, 2}`.
    pub labels: Vec<u8>,
    /// Per-column `(min, max)` of the fitting table.
    pub scaler: Vec<(f64, f64)>,
    /// Per-column `(q95, q99)` of the fitting table.
    pub thresholds: Vec<(f64, f64)>,
    /// Unscaled cell values, retained so a later fit can start from them.
    pub raw: Vec<Vec<f64>>,
    /// Cells clamped into `[0, 1]` because they fell outside the fitted
    /// scaler's range; zero when the scaler was fitted on this very table.
    pub clamped: usize,
}

impl LabeledDataset {
    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Rows per class, indexed by label.
    pub fn label_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// View of the rows as (features, label) pairs for training.
    pub fn samples(&self) -> Vec<crate::vqc::Sample> {
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(f, &l)| crate::vqc::Sample {
                features: f.clone(),
                label: l,
            })
            .collect()
    }

    /// The underlying unscaled cells as a [`RawTable`] (no missing values).
    pub fn to_raw_table(&self, source: &str) -> RawTable {
        RawTable {
            columns: self.columns.clone(),
            rows: self
                .raw
                .iter()
                .map(|row| row.iter().copied().map(Some).collect())
                .collect(),
            sources: vec![source.to_string()],
        }
    }
}

// --------------------------------------------------------------------------
// Quantiles
// --------------------------------------------------------------------------

/// Quantile by linear interpolation between order statistics: for `n` sorted
/// values the quantile at probability `p` sits at fractional rank
/// `h = (n - 1) * p` and interpolates between the surrounding values.
///
/// `values` must be sorted ascending and nonempty; `p` must lie in `[0, 1]`.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty slice");
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    let n = values.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    values[lo] + (h - lo as f64) * (values[hi] - values[lo])
}

fn column_sorted(dense: &[Vec<f64>], j: usize) -> Vec<f64> {
    let mut col: Vec<f64> = dense.iter().map(|row| row[j]).collect();
    col.sort_by(f64::total_cmp);
    col
}

// --------------------------------------------------------------------------
// Loading
// --------------------------------------------------------------------------

/// Loads every CSV file matched by `pattern` (sorted by path) into one
/// [`RawTable`].
///
/// Files must share an identical header. Lines starting with `#` are
/// skipped. Cells that do not parse as finite numbers (including empty
/// cells) are marked missing. A trailing column named `label` is accepted
/// and stripped: labels are always rederived from quantiles downstream, so
/// nothing is lost.
pub fn load_flows(pattern: &str) -> Result<RawTable, FlowsError> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)?.collect::<Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        return Err(FlowsError::NoFilesMatched {
            pattern: pattern.to_string(),
        });
    }

    let mut reference_header: Vec<String> = Vec::new();
    let mut columns: Vec<String> = Vec::new();
    let mut feature_cols = 0usize;
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut sources: Vec<String> = Vec::new();

    for path in &paths {
        let display = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(FlowsError::EmptyFile { path: display });
        }
        if reference_header.is_empty() {
            reference_header = header.clone();
            feature_cols = if header.last().map(String::as_str) == Some("label") {
                header.len() - 1
            } else {
                header.len()
            };
            columns = header[..feature_cols].to_vec();
        } else if header != reference_header {
            return Err(FlowsError::HeaderMismatch { path: display });
        }
        for record in reader.records() {
            let record = record?;
            let row: Vec<Option<f64>> = record
                .iter()
                .take(feature_cols)
                .map(|cell| match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => None,
                })
                .collect();
            rows.push(row);
        }
        sources.push(display);
    }

    Ok(RawTable {
        columns,
        rows,
        sources,
    })
}

// --------------------------------------------------------------------------
// Cleaning
// --------------------------------------------------------------------------

/// Conventional fence multiplier for interquartile-range outlier detection.
pub const DEFAULT_IQR_FACTOR: f64 = 1.5;

/// Zero-imputes missing cells, then drops every row with a cell strictly
/// outside its column's fences `[Q1 - f*IQR, Q3 + f*IQR]`.
///
/// Imputation happens first, so imputed zeros participate in the quartiles
/// and can themselves be flagged as outliers. Fences are inclusive: a cell
/// exactly on a fence survives, and a constant column (`IQR = 0`) never
/// drops anything. The report satisfies
/// `rows_remaining = input rows - outliers_removed` exactly.
pub fn clean(table: &RawTable, iqr_factor: f64) -> Result<(RawTable, CleaningReport), FlowsError> {
    if table.rows.is_empty() {
        return Err(FlowsError::EmptyTable);
    }
    if !(iqr_factor.is_finite() && iqr_factor > 0.0) {
        return Err(FlowsError::BadIqrFactor(iqr_factor));
    }

    let n_cols = table.columns.len();
    let mut missing_imputed = 0usize;
    let dense: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|cell| {
                    cell.unwrap_or_else(|| {
                        missing_imputed += 1;
                        0.0
                    })
                })
                .collect()
        })
        .collect();

    let fences: Vec<(f64, f64)> = (0..n_cols)
        .map(|j| {
            let col = column_sorted(&dense, j);
            let q1 = quantile(&col, 0.25);
            let q3 = quantile(&col, 0.75);
            let iqr = q3 - q1;
            (q1 - iqr_factor * iqr, q3 + iqr_factor * iqr)
        })
        .collect();

    let kept: Vec<Vec<Option<f64>>> = dense
        .iter()
        .filter(|row| {
            row.iter()
                .zip(&fences)
                .all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
        })
        .map(|row| row.iter().copied().map(Some).collect())
        .collect();

    let outliers_removed = table.rows.len() - kept.len();
    let report = CleaningReport {
        missing_imputed,
        outliers_removed,
        rows_remaining: kept.len(),
    };
    let cleaned = RawTable {
        columns: table.columns.clone(),
        rows: kept,
        sources: table.sources.clone(),
    };
    Ok((cleaned, report))
}

// --------------------------------------------------------------------------
// Labeling
// --------------------------------------------------------------------------

/// Minimum rows for a stable quantile fit.
pub const MIN_LABEL_ROWS: usize = 20;

fn dense_rows(table: &RawTable) -> Result<Vec<Vec<f64>>, FlowsError> {
    table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|cell| cell.ok_or(FlowsError::MissingCells))
                .collect()
        })
        .collect()
}

fn quantile_labels(dense: &[Vec<f64>], thresholds: &[(f64, f64)]) -> Vec<u8> {
    dense
        .iter()
        .map(|row| {
            let mut label = 0u8;
            for (v, &(q95, q99)) in row.iter().zip(thresholds) {
                if *v > q99 {
                    return 2;
                }
                if *v > q95 {
                    label = 1;
                }
            }
            label
        })
        .collect()
}

/// Fits per-column quantile thresholds and a min-max scaler on `table`, then
/// labels and scales it.
///
/// A row is class 2 if any cell strictly exceeds its column's 99th
/// percentile, else class 1 if any cell strictly exceeds the 95th, else
/// class 0. Features are scaled so each column of the fitting table spans
/// exactly `[0, 1]`; a constant column maps to all zeros. Requires a
/// cleaned table (no missing cells) with at least [`MIN_LABEL_ROWS`] rows.
pub fn label(table: &RawTable) -> Result<LabeledDataset, FlowsError> {
    if table.rows.len() < MIN_LABEL_ROWS {
        return Err(FlowsError::NotEnoughRows {
            rows: table.rows.len(),
            min: MIN_LABEL_ROWS,
        });
    }
    let dense = dense_rows(table)?;
    let n_cols = table.columns.len();

    let mut scaler = Vec::with_capacity(n_cols);
    let mut thresholds = Vec::with_capacity(n_cols);
    for j in 0..n_cols {
        let col = column_sorted(&dense, j);
        scaler.push((col[0], col[col.len() - 1]));
        thresholds.push((quantile(&col, 0.95), quantile(&col, 0.99)));
    }

    let labels = quantile_labels(&dense, &thresholds);
    let features = dense
        .iter()
        .map(|row| {
            row.iter()
                .zip(&scaler)
                .map(|(v, &(min, max))| if max > min { (v - min) / (max - min) } else { 0.0 })
                .collect()
        })
        .collect();

    Ok(LabeledDataset {
        columns: table.columns.clone(),
        features,
        labels,
        scaler,
        thresholds,
        raw: dense,
        clamped: 0,
    })
}

/// Labels and scales `table` using thresholds and a scaler fitted elsewhere.
///
/// Labels use the given `(q95, q99)` pairs; features use the given
/// `(min, max)` pairs and are clamped into `[0, 1]`, with every clamped cell
/// counted. Nothing in `table` influences the fit, so fitting data and
/// evaluation data stay strictly separated.
pub fn label_with(
    table: &RawTable,
    thresholds: &[(f64, f64)],
    scaler: &[(f64, f64)],
) -> Result<LabeledDataset, FlowsError> {
    let n_cols = table.columns.len();
    if thresholds.len() != n_cols {
        return Err(FlowsError::ColumnMismatch {
            expected: n_cols,
            got: thresholds.len(),
        });
    }
    if scaler.len() != n_cols {
        return Err(FlowsError::ColumnMismatch {
            expected: n_cols,
            got: scaler.len(),
        });
    }
    if table.rows.is_empty() {
        return Err(FlowsError::EmptyTable);
    }
    let dense = dense_rows(table)?;

    let labels = quantile_labels(&dense, thresholds);
    let mut clamped = 0usize;
    let features: Vec<Vec<f64>> = dense
        .iter()
        .map(|row| {
            row.iter()
                .zip(scaler)
                .map(|(v, &(min, max))| {
                    let scaled = if max > min { (v - min) / (max - min) } else { 0.0 };
                    if !(0.0..=1.0).contains(&scaled) {
                        clamped += 1;
                    }
                    scaled.clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();

    Ok(LabeledDataset {
        columns: table.columns.clone(),
        features,
        labels,
        scaler: scaler.to_vec(),
        thresholds: thresholds.to_vec(),
        raw: dense,
        clamped,
    })
}

// --------------------------------------------------------------------------
// Splitting
// --------------------------------------------------------------------------

/// Stratified train/eval split with the fit redone on the train side only.
///
/// Rows are grouped by label, each group is shuffled with a seeded
/// generator, and `round(eval_fraction * group size)` rows per group go to
/// the eval side. The train side is then refitted from its unscaled values
/// ([`label`]) and the eval side is labeled and scaled with that fit
/// ([`label_with`]), so eval rows never influence thresholds or scaling.
/// Labels on both sides come from the refitted thresholds.
pub fn split(
    ds: &LabeledDataset,
    eval_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), FlowsError> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(FlowsError::BadFraction(eval_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx: Vec<usize> = Vec::new();
    let mut eval_idx: Vec<usize> = Vec::new();
    for class in 0..3u8 {
        let mut group: Vec<usize> = (0..ds.labels.len())
            .filter(|&i| ds.labels[i] == class)
            .collect();
        group.shuffle(&mut rng);
        let n_eval = ((eval_fraction * group.len() as f64).round() as usize).min(group.len());
        eval_idx.extend_from_slice(&group[..n_eval]);
        train_idx.extend_from_slice(&group[n_eval..]);
    }
    train_idx.sort_unstable();
    eval_idx.sort_unstable();

    let subtable = |idx: &[usize], tag: &str| RawTable {
        columns: ds.columns.clone(),
        rows: idx
            .iter()
            .map(|&i| ds.raw[i].iter().copied().map(Some).collect())
            .collect(),
        sources: vec![tag.to_string()],
    };
    let train_ds = label(&subtable(&train_idx, "split:train"))?;
    let eval_ds = label_with(
        &subtable(&eval_idx, "split:eval"),
        &train_ds.thresholds,
        &train_ds.scaler,
    )?;
    Ok((train_ds, eval_ds))
}

// --------------------------------------------------------------------------
// Synthetic generation
// --------------------------------------------------------------------------

/// Planted cell value for outlier rows; far beyond any fence the base
/// traffic can produce.
pub const DEFAULT_OUTLIER_VALUE: f64 = 6.0;

/// Column-parameter seed shared by the stock profiles, so corpora generated
/// with different row seeds still describe the same columns.
pub const DEFAULT_COLUMN_SEED: u64 = 424_242;

/// Latent-intensity truncation: the base traffic draws a standard normal
/// restricted to `[Z_LO, Z_HI]`.
const TRUNC_Z_LO: f64 = -3.0;
const TRUNC_Z_HI: f64 = 1.2;

/// Per-column log-scale shape range.
const SIGMA_LO: f64 = 0.48;
const SIGMA_HI: f64 = 0.58;
/// Per-column magnitude range.
const SCALE_LO: f64 = 0.8;
const SCALE_HI: f64 = 1.25;

/// A contiguous block of rows whose latent intensity `u` is drawn uniformly
/// from `[lo, hi)`; high bands model injected attack traffic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityBand {
    pub rows: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Everything [`synth_generate`] needs besides shape and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthProfile {
    /// Row blocks by latent intensity; empty means one full-range band.
    /// When nonempty, band sizes must sum to the requested row count.
    pub bands: Vec<IntensityBand>,
    /// Seed for per-column shape/magnitude parameters. Corpora meant to be
    /// labeled against each other must share it.
    pub column_seed: u64,
    /// Cells to blank out, planted in the lowest-intensity rows.
    pub missing_cells: usize,
    /// Rows to spike with one far-out cell, planted in the first band.
    pub outlier_rows: usize,
    /// The spike value.
    pub outlier_value: f64,
}

impl SynthProfile {
    /// Benign traffic: one full-range intensity band, nothing planted.
    pub fn benign() -> Self {
        Self {
            bands: Vec::new(),
            column_seed: DEFAULT_COLUMN_SEED,
            missing_cells: 0,
            outlier_rows: 0,
            outlier_value: DEFAULT_OUTLIER_VALUE,
        }
    }

    /// Training corpus: 3953 benign rows with 47 missing cells and 54
    /// planted outlier rows, so cleaning reports exactly (47, 54, 3899).
    pub fn train_corpus() -> Self {
        Self {
            bands: vec![IntensityBand {
                rows: 3953,
                lo: 0.0,
                hi: 1.0,
            }],
            column_seed: DEFAULT_COLUMN_SEED,
            missing_cells: 47,
            outlier_rows: 54,
            outlier_value: DEFAULT_OUTLIER_VALUE,
        }
    }

    /// Evaluation corpus: 987 rows in three intensity bands (benign,
    /// elevated, extreme) with 13 missing cells and 11 planted outlier
    /// rows, so cleaning reports exactly (13, 11, 976). Labeled against the
    /// training corpus' thresholds, the bands land near (389, 293, 292)
    /// rows per class.
    pub fn eval_corpus() -> Self {
        Self {
            bands: vec![
                IntensityBand {
                    rows: 402,
                    lo: 0.0,
                    hi: 0.935,
                },
                IntensityBand {
                    rows: 293,
                    lo: 0.965,
                    hi: 0.982,
                },
                IntensityBand {
                    rows: 292,
                    lo: 0.9965,
                    hi: 1.0,
                },
            ],
            column_seed: DEFAULT_COLUMN_SEED,
            missing_cells: 13,
            outlier_rows: 11,
            outlier_value: DEFAULT_OUTLIER_VALUE,
        }
    }

    /// Total rows implied by the bands, when they pin a row count.
    pub fn total_rows(&self) -> Option<usize> {
        if self.bands.is_empty() {
            None
        } else {
            Some(self.bands.iter().map(|b| b.rows).sum())
        }
    }
}

/// Stock column names for 13-feature flow tables.
fn flow_column_names(n_cols: usize) -> Vec<String> {
    const NAMES: [&str; 13] = [
        "duration",
        "bytes_in",
        "bytes_out",
        "pkts_in",
        "pkts_out",
        "flow_count",
        "syn_rate",
        "fin_rate",
        "rst_rate",
        "uniq_dst",
        "uniq_ports",
        "avg_pkt_len",
        "burstiness",
    ];
    if n_cols == NAMES.len() {
        NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..n_cols).map(|j| format!("f{j:02}")).collect()
    }
}

/// Generates a seeded traffic table.
///
/// Each row draws one latent intensity `u` from its band; every column maps
/// `u` through a right-truncated log-normal `scale_j * exp(sigma_j * z(u))`
/// where `z` is the standard normal quantile restricted to
/// `[-3, 1.2]`. Sharing `u` across columns makes row ranks agree in every
/// column, so quantile labels are driven by `u` alone; the right truncation
/// keeps natural values inside the interquartile fences, so the only
/// outliers are the planted ones. Missing cells go to the lowest-intensity
/// rows (their zero imputations stay below every upper quantile), and
/// outlier spikes go to evenly spaced rows of the first band.
///
/// Same arguments, same table, bit for bit.
pub fn synth_generate(
    n_rows: usize,
    n_cols: usize,
    seed: u64,
    profile: &SynthProfile,
) -> Result<RawTable, FlowsError> {
    if n_rows < 100 {
        return Err(FlowsError::InvalidProfile(format!(
            "need at least 100 rows, got {n_rows}"
        )));
    }
    if n_cols < 2 {
        return Err(FlowsError::InvalidProfile(format!(
            "need at least 2 columns, got {n_cols}"
        )));
    }
    let bands: Vec<IntensityBand> = if profile.bands.is_empty() {
        vec![IntensityBand {
            rows: n_rows,
            lo: 0.0,
            hi: 1.0,
        }]
    } else {
        profile.bands.clone()
    };
    for band in &bands {
        if band.rows == 0 {
            return Err(FlowsError::InvalidProfile("empty intensity band".to_string()));
        }
        if !(band.lo.is_finite() && band.hi.is_finite() && 0.0 <= band.lo && band.lo < band.hi && band.hi <= 1.0)
        {
            return Err(FlowsError::InvalidProfile(format!(
                "band range [{}, {}) must satisfy 0 <= lo < hi <= 1",
                band.lo, band.hi
            )));
        }
    }
    let band_total: usize = bands.iter().map(|b| b.rows).sum();
    if band_total != n_rows {
        return Err(FlowsError::InvalidProfile(format!(
            "band sizes sum to {band_total}, expected {n_rows}"
        )));
    }
    if profile.outlier_rows > 0 && profile.outlier_rows > bands[0].rows.saturating_sub(1) {
        return Err(FlowsError::InvalidProfile(format!(
            "{} outlier rows do not fit in a first band of {} rows",
            profile.outlier_rows, bands[0].rows
        )));
    }
    if profile.missing_cells > n_rows - profile.outlier_rows {
        return Err(FlowsError::InvalidProfile(format!(
            "{} missing cells exceed the {} rows left after outlier placement",
            profile.missing_cells,
            n_rows - profile.outlier_rows
        )));
    }
    if !profile.outlier_value.is_finite() {
        return Err(FlowsError::InvalidProfile(format!(
            "outlier value must be finite, got {}",
            profile.outlier_value
        )));
    }

    // Per-column shape and magnitude, from the shared column seed.
    let mut col_rng = ChaCha8Rng::seed_from_u64(profile.column_seed);
    let sigma: Vec<f64> = (0..n_cols)
        .map(|_| col_rng.gen_range(SIGMA_LO..SIGMA_HI))
        .collect();
    let scale: Vec<f64> = (0..n_cols)
        .map(|_| col_rng.gen_range(SCALE_LO..SCALE_HI))
        .collect();

    // Latent intensities, band by band in row order.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = Vec::with_capacity(n_rows);
    for band in &bands {
        for _ in 0..band.rows {
            u.push(rng.gen_range(band.lo..band.hi));
        }
    }

    // Truncated-normal map from intensity to a z-score in [Z_LO, Z_HI].
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let cdf_lo = normal.cdf(TRUNC_Z_LO);
    let cdf_hi = normal.cdf(TRUNC_Z_HI);
    let z: Vec<f64> = u
        .iter()
        .map(|&ui| normal.inverse_cdf(cdf_lo + ui * (cdf_hi - cdf_lo)))
        .collect();

    let mut rows: Vec<Vec<Option<f64>>> = z
        .iter()
        .map(|&zi| {
            (0..n_cols)
                .map(|j| Some(scale[j] * (sigma[j] * zi).exp()))
                .collect()
        })
        .collect();

    // Outlier spikes: evenly spaced rows of the first band, one cell each.
    let mut outlier_set = vec![false; n_rows];
    if profile.outlier_rows > 0 {
        let stride = (bands[0].rows - 1) / profile.outlier_rows;
        for k in 0..profile.outlier_rows {
            let i = k * stride;
            rows[i][k % n_cols] = Some(profile.outlier_value);
            outlier_set[i] = true;
        }
    }

    // Missing cells: lowest-intensity rows not already used for outliers.
    if profile.missing_cells > 0 {
        let mut order: Vec<usize> = (0..n_rows).collect();
        order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
        let mut planted = 0usize;
        for &i in &order {
            if outlier_set[i] {
                continue;
            }
            rows[i][(planted * 5 + 2) % n_cols] = None;
            planted += 1;
            if planted == profile.missing_cells {
                break;
            }
        }
    }

    Ok(RawTable {
        columns: flow_column_names(n_cols),
        rows,
        sources: vec![format!("synthetic:seed={seed}")],
    })
}

// --------------------------------------------------------------------------
// Tests
// --------------------------------------------------------------------------
