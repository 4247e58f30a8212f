//! Seeded synthetic metric scenarios with ground-truth labels.
//!
//! Each scenario names the database anomaly category it stands in for,
//! declares the metrics it emits with nominal levels, injects transforms
//! into declared windows, and carries the root-cause labels a diagnoser is
//! scored against. Baselines are order-1 autoregressive noise around the
//! nominal level, fully determined by the seed.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{DatabaseKind, MetricPoint, MetricSeries};
use crate::{Timestamp, Value};

/// Start of every generated time range.
pub const GENERATION_EPOCH: Timestamp = 1_700_000_000;

/// Autoregressive coefficient of the baseline noise.
const AR_COEFFICIENT: Value = 0.6;

/// Noise scale as a fraction of the nominal level.
const NOISE_FRACTION: Value = 0.05;

/// Root-cause label vocabulary (normalized lowercase).
pub const CAUSE_VOCABULARY: [&str; 17] = [
    "high data select",
    "low redo file size",
    "low redo group count",
    "log buffer setting not enough",
    "table inittrans not enough",
    "buffer busy wait",
    "enq lock wait",
    "latch wait",
    "high memory usage",
    "high cpu usage",
    "bgwriter parameter problem",
    "shared buffer not enough",
    "checkpoint parameter problem",
    "wal parameter problem",
    "table dead tuple",
    "index problem",
    "statistics expired",
];

/// The five anomaly categories scenarios are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    LogSynchronization,
    ResourceContention,
    SqlOptimization,
    SystemResource,
    WritePerformance,
}

/// One metric a scenario emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetric {
    pub metric_id: String,
    #[serde(default)]
    pub unit: String,
    /// Baseline level the noise wanders around.
    pub nominal: Value,
    #[serde(default)]
    pub category_path: Vec<String>,
}

/// Shape of an injected disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Transform {
    LevelShift {
        delta: Value,
    },
    Ramp {
        slope: Value,
    },
    SpikeTrain {
        period_seconds: u32,
        amplitude: Value,
    },
}

/// A transform applied to one metric inside a window of seconds relative to
/// the generation epoch (inclusive bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub metric_id: String,
    pub window: (Timestamp, Timestamp),
    pub transform: Transform,
}

/// A named synthetic anomaly scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub category: Category,
    pub database: DatabaseKind,
    /// The anomaly model this scenario is built to fire.
    pub model_id: String,
    pub metrics: Vec<ScenarioMetric>,
    pub injected: Vec<Injection>,
    pub truth_causes: BTreeSet<String>,
}

/// Absolute injection window of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthWindow {
    pub metric_id: String,
    pub t0: Timestamp,
    pub t1: Timestamp,
}

/// What a diagnoser is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub causes: BTreeSet<String>,
    pub windows: Vec<TruthWindow>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("bad injection window for {metric_id}: {reason}")]
    BadWindow { metric_id: String, reason: String },
    #[error("unknown cause label: {0}")]
    UnknownCause(String),
    #[error("scenario {0} has no truth causes")]
    EmptyTruth(String),
    #[error("catalog parse error: {0}")]
    Parse(String),
}

/// Validate a scenario's static invariants (labels in the vocabulary,
/// non-empty truth set, declared injection metrics).
pub fn validate_scenario(scenario: &Scenario) -> Result<(), SimError> {
    if scenario.truth_causes.is_empty() {
        return Err(SimError::EmptyTruth(scenario.name.clone()));
    }
    for cause in &scenario.truth_causes {
        if !CAUSE_VOCABULARY.contains(&cause.as_str()) {
            return Err(SimError::UnknownCause(cause.clone()));
        }
    }
    for injection in &scenario.injected {
        if !scenario
            .metrics
            .iter()
            .any(|m| m.metric_id == injection.metric_id)
        {
            return Err(SimError::BadWindow {
                metric_id: injection.metric_id.clone(),
                reason: "injection targets an undeclared metric".into(),
            });
        }
    }
    Ok(())
}

/// Parse a catalog document (a JSON array of scenarios) and validate every
/// entry.
pub fn load_catalog(json: &str) -> Result<Vec<Scenario>, SimError> {
    let scenarios: Vec<Scenario> =
        serde_json::from_str(json).map_err(|e| SimError::Parse(e.to_string()))?;
    for s in &scenarios {
        validate_scenario(s)?;
    }
    Ok(scenarios)
}

/// Generate the scenario's series and ground truth. Identical arguments
/// yield identical output.
pub fn generate(
    scenario: &Scenario,
    seed: u64,
    duration_seconds: u32,
    cadence_seconds: u32,
) -> Result<(Vec<MetricSeries>, GroundTruth), SimError> {
    validate_scenario(scenario)?;
    let duration = Timestamp::from(duration_seconds);
    for injection in &scenario.injected {
        let (t0, t1) = injection.window;
        let reason = if t0 < 0 {
            Some("window starts before the range")
        } else if t1 <= t0 {
            Some("window is empty or reversed")
        } else if t1 > duration {
            Some("window ends beyond the range")
        } else if duration < 2 * (t1 - t0) {
            Some("duration must be at least twice the window")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(SimError::BadWindow {
                metric_id: injection.metric_id.clone(),
                reason: reason.into(),
            });
        }
    }

    let cadence = Timestamp::from(cadence_seconds.max(1));
    let mut series_set = Vec::new();
    for metric in &scenario.metrics {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&metric.metric_id));
        let noise = Normal::new(0.0, (NOISE_FRACTION * metric.nominal).abs().max(1e-12))
            .expect("finite std dev");
        let mut ar = 0.0;
        let mut points = Vec::new();
        let mut offset: Timestamp = 0;
        while offset <= duration {
            ar = AR_COEFFICIENT * ar + noise.sample(&mut rng);
            let mut value = metric.nominal + ar;
            for injection in &scenario.injected {
                if injection.metric_id == metric.metric_id
                    && offset >= injection.window.0
                    && offset <= injection.window.1
                {
                    value += match &injection.transform {
                        Transform::LevelShift { delta } => *delta,
                        Transform::Ramp { slope } => slope * (offset - injection.window.0) as Value,
                        Transform::SpikeTrain {
                            period_seconds,
                            amplitude,
                        } => {
                            let period = Timestamp::from(*period_seconds).max(1);
                            if (offset - injection.window.0) % period == 0 {
                                *amplitude
                            } else {
                                0.0
                            }
                        }
                    };
                }
            }
            points.push(MetricPoint {
                metric_id: metric.metric_id.clone(),
                ts: GENERATION_EPOCH + offset,
                value,
            });
            offset += cadence;
        }
        series_set.push(MetricSeries {
            metric_id: metric.metric_id.clone(),
            database_kind: scenario.database,
            category_path: if metric.category_path.is_empty() {
                vec!["general".to_owned()]
            } else {
                metric.category_path.clone()
            },
            unit: metric.unit.clone(),
            points,
        });
    }

    let truth = GroundTruth {
        causes: scenario.truth_causes.clone(),
        windows: scenario
            .injected
            .iter()
            .map(|i| TruthWindow {
                metric_id: i.metric_id.clone(),
                t0: GENERATION_EPOCH + i.window.0,
                t1: GENERATION_EPOCH + i.window.1,
            })
            .collect(),
    };
    Ok((series_set, truth))
}

/// Instant at which detection is expected to see the anomaly: five minutes
/// into the first injection window (capped by its length). Evaluating there
/// gives frequency control enough fired periods while the abnormal-metric
/// screening window still straddles the onset, where volatility lives.
pub fn suggested_detect_time(scenario: &Scenario, duration_seconds: u32) -> Timestamp {
    scenario
        .injected
        .first()
        .map(|i| GENERATION_EPOCH + i.window.0 + (i.window.1 - i.window.0).min(300))
        .unwrap_or(GENERATION_EPOCH + Timestamp::from(duration_seconds))
}

/// Canonical JSONL encoding of generated series (sorted by metric id, then
/// time); the byte-identity target for determinism checks.
pub fn series_to_jsonl(series_set: &[MetricSeries]) -> String {
    let mut sorted: Vec<&MetricSeries> = series_set.iter().collect();
    sorted.sort_by(|a, b| a.metric_id.cmp(&b.metric_id));
    let mut out = String::new();
    for series in sorted {
        for p in &series.points {
            out.push_str(&format!(
                "{{\"metric_id\":\"{}\",\"ts\":{},\"value\":{}}}\n",
                p.metric_id, p.ts, p.value
            ));
        }
    }
    out
}

fn fnv1a(s: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}
