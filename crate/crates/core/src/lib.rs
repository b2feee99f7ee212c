//! Anomaly scoring for network flows with a simulated variational quantum
//! circuit, plus the zero-trust policy machinery that consumes the scores.
//!
//! The crate is organised as a pipeline:
//!
//! * [`flows`] ingests or synthesises flow records, cleans them and derives
//!   three-way labels from per-column quantiles.
//! * [`encoding`] maps feature vectors onto qubit registers.
//! * [`qsim`] is a dense statevector simulator for registers up to
//!   [`qsim::MAX_QUBITS`] qubits.
//! * [`vqc`] defines the layered variational model, its anomaly score and
//!   gradient-descent training with parameter-shift gradients.
//! * [`cvqnn`] verifies the continuous-variable picture of the same network:
//!   Gaussian symplectic operations, affine-layer embeddings and cubic-phase
//!   nonlinearities, cross-checked against plain real-vector arithmetic.
//! * [`metrics`] computes ROC curves, AUC, optimal thresholds and confusion
//!   matrices.
//! * [`policy`] turns scores into risk, access verdicts and per-segment
//!   isolation state, with feedback rules that adapt thresholds online.
//! * [`config`] and [`pipeline`] wire everything into the `qzt` command-line
//!   tool.
//!
//! Everything is deterministic under a fixed seed: same inputs, same seed,
//! byte-identical outputs.

pub mod config;
pub mod cvqnn;
pub mod encoding;
pub mod flows;
pub mod metrics;
pub mod pipeline;
pub mod policy;
pub mod qsim;
pub mod vqc;
