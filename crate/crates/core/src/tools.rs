//! Registry of deterministic diagnostic analyzers.
//!
//! Tools are in-process functions bound to tool vertices in the experience
//! graph. Each one reads a metric snapshot plus a parameter map and returns
//! findings whose evidence must resolve in that snapshot. Two analyzers ship
//! built in: a log-sync performance verifier and a redo/archive health
//! inspector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::EvidenceItem;
use crate::store::{MetricSnapshot, StatSpec};
use crate::{Timestamp, Value};

/// Severity of one finding item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warn,
    Critical,
}

/// One observation produced by a tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingItem {
    pub severity: Severity,
    pub message: String,
    pub evidence: Vec<EvidenceItem>,
}

/// Everything a tool reported for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolFindings {
    pub tool_id: String,
    pub items: Vec<FindingItem>,
}

impl ToolFindings {
    pub fn max_severity(&self) -> Option<Severity> {
        self.items.iter().map(|i| i.severity).max()
    }
}

/// Free-form tool parameters (numbers and strings).
pub type ToolParams = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("unknown tool: {0}")]
    UnknownTool(String),
    #[error("duplicate tool: {0}")]
    DuplicateTool(String),
    #[error("tool {tool_id} cited a metric absent from the snapshot: {metric_id}")]
    InvalidEvidence { tool_id: String, metric_id: String },
}

/// A deterministic analyzer: identical snapshot, params, and instant must
/// produce identical findings.
pub trait Analyzer: Send + Sync {
    fn analyze(
        &self,
        snapshot: &dyn MetricSnapshot,
        params: &ToolParams,
        at: Timestamp,
    ) -> ToolFindings;
}

impl<F> Analyzer for F
where
    F: Fn(&dyn MetricSnapshot, &ToolParams, Timestamp) -> ToolFindings + Send + Sync,
{
    fn analyze(
        &self,
        snapshot: &dyn MetricSnapshot,
        params: &ToolParams,
        at: Timestamp,
    ) -> ToolFindings {
        self(snapshot, params, at)
    }
}

/// Name-to-analyzer registry resolved by tool vertices.
#[derive(Default)]
pub struct ToolRegistry {
    tools: BTreeMap<String, Box<dyn Analyzer>>,
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolRegistry")
            .field("tools", &self.tool_ids())
            .finish()
    }
}

pub const LOGSYNC_VERIFIER: &str = "logsync_verifier";
pub const REDOARCHIVE_INSPECTOR: &str = "redoarchive_inspector";

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry preloaded with the built-in analyzers.
    pub fn with_builtins() -> Self {
        let mut registry = Self::new();
        registry
            .register(LOGSYNC_VERIFIER, Box::new(logsync_verifier))
            .expect("fresh registry");
        registry
            .register(REDOARCHIVE_INSPECTOR, Box::new(redoarchive_inspector))
            .expect("fresh registry");
        registry
    }

    pub fn register(
        &mut self,
        tool_id: &str,
        analyzer: Box<dyn Analyzer>,
    ) -> Result<(), ToolError> {
        if self.tools.contains_key(tool_id) {
            return Err(ToolError::DuplicateTool(tool_id.to_owned()));
        }
        self.tools.insert(tool_id.to_owned(), analyzer);
        Ok(())
    }

    pub fn contains(&self, tool_id: &str) -> bool {
        self.tools.contains_key(tool_id)
    }

    pub fn tool_ids(&self) -> Vec<String> {
        self.tools.keys().cloned().collect()
    }

    /// Run a tool and enforce evidence closure: every cited metric must
    /// resolve in the snapshot handed to the tool.
    pub fn run(
        &self,
        tool_id: &str,
        snapshot: &dyn MetricSnapshot,
        params: &ToolParams,
        at: Timestamp,
    ) -> Result<ToolFindings, ToolError> {
        let analyzer = self
            .tools
            .get(tool_id)
            .ok_or_else(|| ToolError::UnknownTool(tool_id.to_owned()))?;
        let findings = analyzer.analyze(snapshot, params, at);
        for item in &findings.items {
            for ev in &item.evidence {
                if !snapshot.contains(&ev.metric_id) {
                    return Err(ToolError::InvalidEvidence {
                        tool_id: tool_id.to_owned(),
                        metric_id: ev.metric_id.clone(),
                    });
                }
            }
        }
        Ok(findings)
    }
}

fn num_param(params: &ToolParams, key: &str, default: Value) -> Value {
    params.get(key).and_then(|v| v.as_f64()).unwrap_or(default)
}

fn str_param<'a>(params: &'a ToolParams, key: &str, default: &'a str) -> &'a str {
    params.get(key).and_then(|v| v.as_str()).unwrap_or(default)
}

struct WindowSummary {
    max: Value,
    mean: Value,
}

fn window_summary(
    snapshot: &dyn MetricSnapshot,
    metric: &str,
    at: Timestamp,
    window_seconds: u32,
) -> Result<WindowSummary, String> {
    let points = snapshot
        .points(metric, at - Timestamp::from(window_seconds), at)
        .map_err(|e| e.to_string())?;
    if points.is_empty() {
        return Err(format!("no samples in the last {window_seconds}s"));
    }
    let mut max = Value::NEG_INFINITY;
    let mut sum = 0.0;
    for p in &points {
        max = max.max(p.value);
        sum += p.value;
    }
    Ok(WindowSummary {
        max,
        mean: sum / points.len() as Value,
    })
}

fn unavailable(metric: &str, reason: &str) -> FindingItem {
    FindingItem {
        severity: Severity::Info,
        message: format!("metric {metric} unavailable: {reason}"),
        evidence: Vec::new(),
    }
}

fn evidence(metric: &str, window_seconds: u32, summary: &WindowSummary) -> Vec<EvidenceItem> {
    vec![
        EvidenceItem {
            metric_id: metric.to_owned(),
            stat: format!("max[{window_seconds}s]"),
            observed: summary.max,
        },
        EvidenceItem {
            metric_id: metric.to_owned(),
            stat: StatSpec::Mean { window_seconds }.to_string(),
            observed: summary.mean,
        },
    ]
}

/// Checks log-sync wait time, redo generation rate, and commit rate against
/// baseline thresholds and emits root-cause-style hints.
fn logsync_verifier(
    snapshot: &dyn MetricSnapshot,
    params: &ToolParams,
    at: Timestamp,
) -> ToolFindings {
    let window = num_param(params, "window_seconds", 600.0) as u32;
    let wait_metric = str_param(params, "wait_metric", "log_file_sync_wait");
    let pw_metric = str_param(params, "parallel_write_metric", "log_file_parallel_write");
    let redo_metric = str_param(params, "redo_rate_metric", "redo_generation_rate");
    let commit_metric = str_param(params, "commit_metric", "commit_rate");
    let wait_threshold = num_param(params, "wait_threshold_ms", 60.0);
    let redo_threshold = num_param(params, "redo_rate_threshold", 100.0);
    let commit_threshold = num_param(params, "commit_rate_threshold", 240.0);

    let mut items = Vec::new();
    let wait = window_summary(snapshot, wait_metric, at, window);
    match &wait {
        Ok(s) if s.max > wait_threshold => items.push(FindingItem {
            severity: Severity::Critical,
            message: format!(
                "log sync wait peaked at {:.2} ms, above the {wait_threshold} ms baseline; \
                 commits are stalling on redo flushes",
                s.max
            ),
            evidence: evidence(wait_metric, window, s),
        }),
        Ok(s) if s.mean > wait_threshold / 2.0 => items.push(FindingItem {
            severity: Severity::Warn,
            message: format!(
                "log sync wait averages {:.2} ms, elevated against the {wait_threshold} ms baseline",
                s.mean
            ),
            evidence: evidence(wait_metric, window, s),
        }),
        Ok(s) => items.push(FindingItem {
            severity: Severity::Info,
            message: format!("log sync wait within baseline (max {:.2} ms)", s.max),
            evidence: evidence(wait_metric, window, s),
        }),
        Err(reason) => items.push(unavailable(wait_metric, reason)),
    }

    if let (Ok(w), Ok(pw)) = (&wait, &window_summary(snapshot, pw_metric, at, window)) {
        if pw.mean > 0.0 {
            let ratio = w.mean / pw.mean;
            let (severity, hint) = if ratio <= 2.0 {
                (
                    Severity::Warn,
                    "the redo device itself is slow: storage I/O is the primary factor",
                )
            } else {
                (
                    Severity::Info,
                    "the gap to parallel write time points at queueing before the device",
                )
            };
            items.push(FindingItem {
                severity,
                message: format!("sync/parallel-write ratio {ratio:.2}; {hint}"),
                evidence: evidence(pw_metric, window, pw),
            });
        }
    }

    match window_summary(snapshot, redo_metric, at, window) {
        Ok(s) if s.mean > redo_threshold => items.push(FindingItem {
            severity: Severity::Warn,
            message: format!(
                "redo generation rate {:.2} exceeds {redo_threshold}; redo overload or an \
                 undersized log buffer can back commits up",
                s.mean
            ),
            evidence: evidence(redo_metric, window, &s),
        }),
        Ok(_) => {}
        Err(reason) => items.push(unavailable(redo_metric, &reason)),
    }

    match window_summary(snapshot, commit_metric, at, window) {
        Ok(s) if s.mean > commit_threshold => items.push(FindingItem {
            severity: Severity::Warn,
            message: format!(
                "commit rate {:.2}/min suggests excessive commits; batch work where possible",
                s.mean
            ),
            evidence: evidence(commit_metric, window, &s),
        }),
        Ok(_) => {}
        Err(reason) => items.push(unavailable(commit_metric, &reason)),
    }

    ToolFindings {
        tool_id: LOGSYNC_VERIFIER.to_owned(),
        items,
    }
}

/// Compares archive-log against redo-log volume, inspects log parameters,
/// and flags rapid redo log switching.
fn redoarchive_inspector(
    snapshot: &dyn MetricSnapshot,
    params: &ToolParams,
    at: Timestamp,
) -> ToolFindings {
    let window = num_param(params, "window_seconds", 3600.0) as u32;
    let redo_metric = str_param(params, "redo_size_metric", "redo_log_size");
    let archive_metric = str_param(params, "archive_size_metric", "archive_log_size");
    let switch_metric = str_param(params, "switch_metric", "redo_log_switches");
    let ratio_bound = num_param(params, "size_ratio_bound", 2.0);
    let switch_threshold = num_param(params, "switch_rate_threshold", 5.0);

    let mut items = Vec::new();
    let redo = window_summary(snapshot, redo_metric, at, window);
    let archive = window_summary(snapshot, archive_metric, at, window);
    match (&redo, &archive) {
        (Ok(r), Ok(a)) if a.mean > 0.0 => {
            let ratio = r.mean / a.mean;
            if ratio > ratio_bound || ratio < 1.0 / ratio_bound {
                items.push(FindingItem {
                    severity: Severity::Warn,
                    message: format!(
                        "redo/archive size ratio {ratio:.2} outside [{:.2}, {ratio_bound:.2}]; \
                         archiving is not keeping pace with redo generation",
                        1.0 / ratio_bound
                    ),
                    evidence: vec![
                        EvidenceItem {
                            metric_id: redo_metric.to_owned(),
                            stat: StatSpec::Mean {
                                window_seconds: window,
                            }
                            .to_string(),
                            observed: r.mean,
                        },
                        EvidenceItem {
                            metric_id: archive_metric.to_owned(),
                            stat: StatSpec::Mean {
                                window_seconds: window,
                            }
                            .to_string(),
                            observed: a.mean,
                        },
                    ],
                });
            }
        }
        (Err(reason), _) => items.push(unavailable(redo_metric, reason)),
        (_, Err(reason)) => items.push(unavailable(archive_metric, reason)),
        _ => {}
    }

    match window_summary(snapshot, switch_metric, at, window) {
        Ok(s) if s.mean > switch_threshold => items.push(FindingItem {
            severity: Severity::Critical,
            message: format!(
                "rapid redo log switching ({:.2}/interval); undersized or too few redo logs",
                s.mean
            ),
            evidence: evidence(switch_metric, window, &s),
        }),
        Ok(_) => {}
        Err(reason) => items.push(unavailable(switch_metric, &reason)),
    }

    if let Some(log_buffer) = params.get("log_buffer").and_then(|v| v.as_f64()) {
        let floor = num_param(params, "log_buffer_floor", 16.0 * 1024.0 * 1024.0);
        if log_buffer < floor {
            items.push(FindingItem {
                severity: Severity::Warn,
                message: format!(
                    "log_buffer set to {log_buffer:.0} bytes, below the configured floor {floor:.0}"
                ),
                evidence: Vec::new(),
            });
        }
    }
    if let Some(lag) = params.get("archive_lag_target").and_then(|v| v.as_f64()) {
        let max = num_param(params, "archive_lag_target_max", 3600.0);
        if lag > max {
            items.push(FindingItem {
                severity: Severity::Warn,
                message: format!(
                    "archive_lag_target {lag:.0}s exceeds the recommended maximum {max:.0}s"
                ),
                evidence: Vec::new(),
            });
        }
    }

    ToolFindings {
        tool_id: REDOARCHIVE_INSPECTOR.to_owned(),
        items,
    }
}
