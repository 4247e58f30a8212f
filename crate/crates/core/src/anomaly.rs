//! Declarative multi-metric anomaly detection.
//!
//! An anomaly model couples a boolean detection expression over metric
//! statistics with k-of-n frequency control and a binding to the trigger
//! vertex that anchors diagnosis in the experience graph. Expression
//! evaluation never short-circuits, so every leaf contributes evidence for
//! the later prompt assembly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{DatabaseKind, MetricSnapshot, StatSpec, StoreError};
use crate::trend::TrendClass;
use crate::{Timestamp, Value, EQ_TOLERANCE};

/// Comparison operator of a detection leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

impl CmpOp {
    fn apply(self, observed: Value, threshold: Value) -> bool {
        match self {
            CmpOp::Gt => observed > threshold,
            CmpOp::Ge => observed >= threshold,
            CmpOp::Lt => observed < threshold,
            CmpOp::Le => observed <= threshold,
            CmpOp::Eq => (observed - threshold).abs() <= EQ_TOLERANCE,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
        }
    }
}

/// Boolean expression tree over metric statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectionExpr {
    Cmp {
        metric: String,
        stat: StatSpec,
        cmp: CmpOp,
        threshold: Value,
    },
    Trend {
        metric: String,
        window_seconds: u32,
        trend: TrendClass,
    },
    And {
        children: Vec<DetectionExpr>,
    },
    Or {
        children: Vec<DetectionExpr>,
    },
    Not {
        child: Box<DetectionExpr>,
    },
}

impl DetectionExpr {
    /// Every metric id referenced by a leaf, in depth-first order.
    pub fn referenced_metrics(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |expr| match expr {
            DetectionExpr::Cmp { metric, .. } | DetectionExpr::Trend { metric, .. } => {
                out.push(metric.as_str());
            }
            _ => {}
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a DetectionExpr)) {
        f(self);
        match self {
            DetectionExpr::And { children } | DetectionExpr::Or { children } => {
                for c in children {
                    c.walk(f);
                }
            }
            DetectionExpr::Not { child } => child.walk(f),
            _ => {}
        }
    }
}

/// Fire only when the expression held in k of the last n evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyControl {
    pub k: u32,
    pub n: u32,
}

/// Line of observed evidence attached to events, tool findings, and prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub metric_id: String,
    /// Rendered statistic, e.g. `raw`, `mean[600s]`, `trend[600s]`.
    pub stat: String,
    pub observed: Value,
}

/// Metric declared by a model, used to seed graph vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDecl {
    pub metric_id: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

/// Expert experience attached to a model fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceDecl {
    pub text: String,
    #[serde(default = "default_experience_source")]
    pub source: String,
    /// Metrics this experience consults during diagnosis.
    #[serde(default)]
    pub uses_metrics: Vec<String>,
}

fn default_experience_source() -> String {
    "model".to_owned()
}

/// A declarative anomaly model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyModel {
    pub id: String,
    pub name: String,
    pub symptom: String,
    pub database: DatabaseKind,
    pub period_seconds: u32,
    pub freq: FrequencyControl,
    pub trigger_vertex: String,
    #[serde(default)]
    pub metrics: Vec<MetricDecl>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub experience: Vec<ExperienceDecl>,
    #[serde(default)]
    pub tools: Vec<String>,
    pub expr: DetectionExpr,
}

impl AnomalyModel {
    pub fn metric_unit(&self, metric_id: &str) -> Option<&str> {
        self.metrics
            .iter()
            .find(|m| m.metric_id == metric_id)
            .map(|m| m.unit.as_str())
    }
}

/// An emitted anomaly, carrying complete leaf evidence and the evaluation
/// history that satisfied frequency control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub model_id: String,
    pub fired_at: Timestamp,
    pub window: (Timestamp, Timestamp),
    pub evidence: Vec<EvidenceItem>,
    /// Per-instant expression outcomes, oldest first.
    pub history: Vec<bool>,
}

impl AnomalyEvent {
    pub fn event_id(&self) -> String {
        format!("{}:{}", self.model_id, self.fired_at)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("schema error at {path}: {reason}")]
    SchemaError { path: String, reason: String },
    #[error("unknown stat spec: {0}")]
    UnknownStatSpec(String),
    #[error("bad threshold: {0}")]
    BadThreshold(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("missing metric: {0}")]
    MissingMetric(String),
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("stat error: {0}")]
    Stat(String),
}

impl From<StoreError> for ExprError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownMetric(id) => ExprError::MissingMetric(id),
            StoreError::InsufficientData { needed, got } => {
                ExprError::InsufficientData { needed, got }
            }
            StoreError::InvalidStatSpec(s) => ExprError::Stat(s),
        }
    }
}

/// Parse one model definition document and validate its invariants.
pub fn parse_model(definition: &str) -> Result<AnomalyModel, ModelError> {
    let model: AnomalyModel =
        serde_json::from_str(definition).map_err(|e| ModelError::SchemaError {
            path: "$".to_owned(),
            reason: e.to_string(),
        })?;
    validate_model(&model)?;
    Ok(model)
}

/// Canonical serialization; `parse_model(serialize_model(m)) == m`.
pub fn serialize_model(model: &AnomalyModel) -> String {
    let mut text = serde_json::to_string_pretty(model).expect("model serializes");
    text.push('\n');
    text
}

fn validate_model(model: &AnomalyModel) -> Result<(), ModelError> {
    let schema_err = |path: &str, reason: String| ModelError::SchemaError {
        path: path.to_owned(),
        reason,
    };
    if model.id.is_empty() {
        return Err(schema_err("id", "empty model id".into()));
    }
    if model.trigger_vertex.is_empty() {
        return Err(schema_err(
            "trigger_vertex",
            "empty trigger vertex id".into(),
        ));
    }
    if model.period_seconds == 0 {
        return Err(schema_err("period_seconds", "must be positive".into()));
    }
    if model.freq.k == 0 || model.freq.n == 0 {
        return Err(schema_err("freq", "k and n must be positive".into()));
    }
    if model.freq.k > model.freq.n {
        return Err(schema_err("freq", "k>n".into()));
    }
    for exp in &model.experience {
        for m in &exp.uses_metrics {
            if !model.metrics.iter().any(|d| &d.metric_id == m) {
                return Err(schema_err(
                    "experience.uses_metrics",
                    format!("undeclared metric {m}"),
                ));
            }
        }
    }
    validate_expr(&model.expr, model)
}

fn validate_expr(expr: &DetectionExpr, model: &AnomalyModel) -> Result<(), ModelError> {
    match expr {
        DetectionExpr::Cmp {
            metric,
            stat,
            threshold,
            ..
        } => {
            if !threshold.is_finite() {
                return Err(ModelError::BadThreshold(format!("{metric}: {threshold}")));
            }
            check_declared(metric, model)?;
            match stat {
                StatSpec::Percentile { p, .. } if *p == 0 || *p > 100 => {
                    return Err(ModelError::UnknownStatSpec(format!("percentile p={p}")));
                }
                StatSpec::Delta { window_seconds }
                | StatSpec::Mean { window_seconds }
                | StatSpec::Percentile { window_seconds, .. }
                    if *window_seconds == 0 =>
                {
                    return Err(ModelError::UnknownStatSpec("window_seconds = 0".into()));
                }
                _ => {}
            }
            Ok(())
        }
        DetectionExpr::Trend {
            metric,
            window_seconds,
            ..
        } => {
            if *window_seconds == 0 {
                return Err(ModelError::UnknownStatSpec(
                    "trend window_seconds = 0".into(),
                ));
            }
            check_declared(metric, model)
        }
        DetectionExpr::And { children } | DetectionExpr::Or { children } => {
            if children.is_empty() {
                return Err(ModelError::SchemaError {
                    path: "expr".to_owned(),
                    reason: "and/or with no children".into(),
                });
            }
            children.iter().try_for_each(|c| validate_expr(c, model))
        }
        DetectionExpr::Not { child } => validate_expr(child, model),
    }
}

fn check_declared(metric: &str, model: &AnomalyModel) -> Result<(), ModelError> {
    if model.metrics.iter().any(|d| d.metric_id == metric) {
        Ok(())
    } else {
        Err(ModelError::SchemaError {
            path: "expr".to_owned(),
            reason: format!("expression references undeclared metric {metric}"),
        })
    }
}

/// Evaluate an expression at instant `at`.
///
/// All leaves are evaluated (no short-circuiting) so the returned evidence
/// covers every statistic the expression touched, in depth-first order.
pub fn evaluate_expr(
    expr: &DetectionExpr,
    snapshot: &dyn MetricSnapshot,
    at: Timestamp,
) -> Result<(bool, Vec<EvidenceItem>), ExprError> {
    let mut evidence = Vec::new();
    let fired = eval_node(expr, snapshot, at, &mut evidence)?;
    Ok((fired, evidence))
}

fn eval_node(
    expr: &DetectionExpr,
    snapshot: &dyn MetricSnapshot,
    at: Timestamp,
    evidence: &mut Vec<EvidenceItem>,
) -> Result<bool, ExprError> {
    match expr {
        DetectionExpr::Cmp {
            metric,
            stat,
            cmp,
            threshold,
        } => {
            let observed = snapshot.stat(metric, stat, at)?;
            evidence.push(EvidenceItem {
                metric_id: metric.clone(),
                stat: stat.to_string(),
                observed,
            });
            Ok(cmp.apply(observed, *threshold))
        }
        DetectionExpr::Trend {
            metric,
            window_seconds,
            trend,
        } => {
            let observed = snapshot.trend(metric, *window_seconds, at)?;
            evidence.push(EvidenceItem {
                metric_id: metric.clone(),
                stat: format!("trend[{window_seconds}s]"),
                observed: Value::from(observed.code()),
            });
            Ok(observed == *trend)
        }
        DetectionExpr::And { children } => {
            let mut all = true;
            for child in children {
                all &= eval_node(child, snapshot, at, evidence)?;
            }
            Ok(all)
        }
        DetectionExpr::Or { children } => {
            let mut any = false;
            for child in children {
                any |= eval_node(child, snapshot, at, evidence)?;
            }
            Ok(any)
        }
        DetectionExpr::Not { child } => Ok(!eval_node(child, snapshot, at, evidence)?),
    }
}

/// k-of-n debouncing over the evaluation history (oldest first).
///
/// Histories shorter than `n` are counted as-is, so a three-long all-true
/// history fires a 3-of-5 control; startup incidents are not suppressed.
pub fn apply_frequency_control(history: &[bool], freq: FrequencyControl) -> bool {
    let n = freq.n as usize;
    let tail = &history[history.len().saturating_sub(n)..];
    let fired = tail.iter().filter(|&&b| b).count();
    fired >= freq.k as usize
}

/// Non-fatal error collected while evaluating one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectDiagnostic {
    pub model_id: String,
    pub at: Timestamp,
    pub error: String,
}

/// Result of a detection pass over several models.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectOutcome {
    pub events: Vec<AnomalyEvent>,
    pub diagnostics: Vec<DetectDiagnostic>,
}

/// Evaluate every model at `now`, reconstructing its frequency-control
/// history from the n evaluation instants ending at `now`.
///
/// Per-model errors are collected as diagnostics without aborting the other
/// models. An instant older than `now` that cannot be evaluated (data not
/// yet present) simply shrinks the available history.
pub fn detect(
    models: &[AnomalyModel],
    snapshot: &dyn MetricSnapshot,
    now: Timestamp,
) -> DetectOutcome {
    let mut outcome = DetectOutcome::default();
    for model in models {
        let n = model.freq.n as i64;
        let period = i64::from(model.period_seconds);
        let mut history = Vec::with_capacity(model.freq.n as usize);
        let mut now_evidence = None;
        let mut failed = false;
        for i in (0..n).rev() {
            let at = now - i * period;
            match evaluate_expr(&model.expr, snapshot, at) {
                Ok((fired, evidence)) => {
                    history.push(fired);
                    if i == 0 {
                        now_evidence = Some(evidence);
                    }
                }
                Err(e) => {
                    outcome.diagnostics.push(DetectDiagnostic {
                        model_id: model.id.clone(),
                        at,
                        error: e.to_string(),
                    });
                    if i == 0 {
                        failed = true;
                    }
                }
            }
        }
        if failed {
            continue;
        }
        if apply_frequency_control(&history, model.freq) {
            outcome.events.push(AnomalyEvent {
                model_id: model.id.clone(),
                fired_at: now,
                window: (now - (n - 1) * period, now),
                evidence: now_evidence.unwrap_or_default(),
                history,
            });
        }
    }
    outcome
        .events
        .sort_by(|a, b| (&a.model_id, a.fired_at).cmp(&(&b.model_id, b.fired_at)));
    outcome
}

/// Render a detection expression to infix text, with units where the model
/// declares them.
pub fn render_expr(expr: &DetectionExpr, model: &AnomalyModel) -> String {
    match expr {
        DetectionExpr::Cmp {
            metric,
            stat,
            cmp,
            threshold,
        } => {
            let unit = model.metric_unit(metric).unwrap_or("");
            let unit = if unit.is_empty() {
                String::new()
            } else {
                format!(" {unit}")
            };
            format!("{stat}({metric}) {} {threshold}{unit}", cmp.symbol())
        }
        DetectionExpr::Trend {
            metric,
            window_seconds,
            trend,
        } => format!("trend[{window_seconds}s]({metric}) = {trend}"),
        DetectionExpr::And { children } => join_children(children, model, " and "),
        DetectionExpr::Or { children } => join_children(children, model, " or "),
        DetectionExpr::Not { child } => format!("not ({})", render_expr(child, model)),
    }
}

fn join_children(children: &[DetectionExpr], model: &AnomalyModel, sep: &str) -> String {
    let parts: Vec<String> = children
        .iter()
        .map(|c| format!("({})", render_expr(c, model)))
        .collect();
    parts.join(sep)
}
