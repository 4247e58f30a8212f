//! Diagnosis engine for database operation and maintenance.
//!
//! The pipeline ingests raw metric streams, evaluates declarative
//! multi-metric anomaly models, explores an expert-experience graph with an
//! adaptive abnormal-metric detector, and drives a pluggable (or mock)
//! reasoning LLM to produce validated, evidence-grounded root-cause reports.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`store`]: metric ingestion, windows, and lazily derived statistics
//! - [`trend`]: trend classification of metric windows
//! - [`anomaly`]: detection expressions, frequency control, event emission
//! - [`graph`]: the heterogeneous experience graph and its query subset
//! - [`adf`]: the adaptive detector function (volatility / baseline / score)
//! - [`evolution`]: two-stage graph evolution producing a diagnosis context
//! - [`tools`]: registry of deterministic diagnostic analyzers
//! - [`diagnose`]: prompt assembly, LLM completion, report parsing/validation
//! - [`simulate`]: seeded synthetic scenarios with ground-truth labels
//! - [`eval`]: root-cause scoring and the evaluation suite
//! - [`config`]: engine configuration file
//!
//! Numeric kernels are generic over the scalar type (see [`numeric::Real`]);
//! the concrete engine works in [`Value`] throughout.

pub mod adf;
pub mod anomaly;
pub mod config;
pub mod diagnose;
pub mod eval;
pub mod evolution;
pub mod graph;
pub mod numeric;
pub mod seeds;
pub mod simulate;
pub mod store;
pub mod tools;
pub mod trend;

/// Scalar type used by the concrete engine.
pub type Value = f64;

/// Unix timestamp in seconds (UTC).
pub type Timestamp = i64;

/// Absolute tolerance for equality comparisons on metric values.
pub const EQ_TOLERANCE: Value = 1e-9;
