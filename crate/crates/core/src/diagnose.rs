//! Prompt assembly, LLM completion, and report validation.
//!
//! The five-component prompt is rendered from a diagnosis context; the
//! completion endpoint is pluggable (a chat-style HTTP call or a
//! deterministic mock); the reply is parsed back into a five-section report
//! whose cited evidence is checked against the context for authenticity.

use std::collections::BTreeSet;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::{render_expr, AnomalyModel};
use crate::evolution::DiagnosisContext;
use crate::tools::Severity;
use crate::Value;

/// Canonical report section titles, in order.
pub const SECTION_TITLES: [&str; 5] = [
    "Anomaly Validation",
    "Root Cause Analysis",
    "Recover Solution",
    "Summary",
    "SQL Context",
];

/// Maximum number of root causes a report may list.
pub const MAX_CAUSES: usize = 5;

/// The five prompt components, kept separate until rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisPrompt {
    pub anomaly: String,
    pub condition: String,
    pub metrics: String,
    pub experience: String,
    pub output_spec: String,
}

impl DiagnosisPrompt {
    /// Concatenate the five components into the final prompt text.
    pub fn render(&self) -> String {
        format!(
            "[1. Anomaly]\n{}\n\n[2. Condition]\n{}\n\n[3. Metrics]\n{}\n\n[4. Experience]\n{}\n\n[5. Output]\n{}\n",
            self.anomaly, self.condition, self.metrics, self.experience, self.output_spec
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportValidation {
    pub is_real_anomaly: bool,
    pub rationale: String,
}

/// One metric citation extracted from a cause's text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRef {
    pub metric_id: String,
    pub claimed_stat: String,
    pub claimed_value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCause {
    pub label: String,
    pub reasoning: String,
    pub evidence_refs: Vec<EvidenceRef>,
}

/// Parsed five-section diagnosis report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub validation: ReportValidation,
    pub root_causes: Vec<RootCause>,
    pub recovery: Vec<String>,
    pub summary: String,
    pub sql_context: Option<String>,
}

/// How to reach the completion endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    Remote,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub timeout_seconds: u64,
    /// Environment variable holding the API key, read at call time.
    pub api_key_env: String,
    pub mode: LlmMode,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            model_name: "mock-reasoner".to_owned(),
            timeout_seconds: 30,
            api_key_env: "OMX_API_KEY".to_owned(),
            mode: LlmMode::Mock,
        }
    }
}

#[derive(Debug, Error)]
pub enum DiagnoseError {
    #[error("diagnosis context is empty")]
    EmptyContext,
    #[error("missing report section: {0}")]
    MissingSection(String),
    #[error("too many causes: {0}")]
    TooManyCauses(usize),
    #[error("report lists no causes")]
    NoCauses,
    #[error("completion timed out")]
    Timeout,
    #[error("completion endpoint returned HTTP {0}")]
    HttpStatus(u16),
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("connection failed: {0}")]
    ConnectionFailed(String),
    #[error("endpoint configuration: {0}")]
    Config(String),
}

/// Assemble the five prompt components from a context and its model.
pub fn build_prompt(
    context: &DiagnosisContext,
    model: &AnomalyModel,
) -> Result<DiagnosisPrompt, DiagnoseError> {
    if context.explored_paths.is_empty() {
        return Err(DiagnoseError::EmptyContext);
    }
    let event = &context.anomaly;
    let anomaly = format!(
        "{} ({}) on {}: {} Event window [{}, {}], fired at {}.",
        model.name,
        model.id,
        model.database,
        model.symptom,
        event.window.0,
        event.window.1,
        event.fired_at
    );
    let condition = format!(
        "{}\nfires when the condition holds in {} of the last {} evaluations, one every {}s",
        render_expr(&model.expr, model),
        model.freq.k,
        model.freq.n,
        model.period_seconds
    );

    let mut metrics = String::new();
    if context.abnormal_metrics.is_empty() {
        metrics.push_str("no metric abnormal in the screening window\n");
    } else {
        metrics.push_str("abnormal metrics:\n");
        for (metric_id, result) in &context.abnormal_metrics {
            metrics.push_str(&metric_line(context, metric_id, Some(result.score), true));
        }
    }
    if !context.normal_metrics.is_empty() {
        metrics.push_str("normal metrics (rule these out):\n");
        for metric_id in &context.normal_metrics {
            metrics.push_str(&metric_line(context, metric_id, None, false));
        }
    }

    let mut experience = String::new();
    for (vertex_id, text) in &context.experience_texts {
        experience.push_str(&format!("[{vertex_id}] {text}\n"));
    }
    for findings in &context.tool_findings {
        for item in &findings.items {
            let severity = match item.severity {
                Severity::Info => "info",
                Severity::Warn => "warn",
                Severity::Critical => "critical",
            };
            let evidence = if item.evidence.is_empty() {
                String::new()
            } else {
                let parts: Vec<String> = item
                    .evidence
                    .iter()
                    .map(|e| format!("{} {} = {:.4}", e.metric_id, e.stat, e.observed))
                    .collect();
                format!(" (evidence: {})", parts.join(", "))
            };
            experience.push_str(&format!(
                "tool {} [{severity}]: {}{evidence}\n",
                findings.tool_id, item.message
            ));
        }
    }
    if experience.is_empty() {
        experience.push_str("no recorded experience reached for this anomaly\n");
    }

    let output_spec = format!(
        "Write a report with exactly five level-1 markdown sections, titled in order: \
         {}. Under Anomaly Validation state `Verdict: real anomaly` or `Verdict: not a real \
         anomaly` plus a short rationale. Under Root Cause Analysis list 1 to {} causes as a \
         numbered list, each with reasoning that cites only metrics from the Metrics component \
         above, in the form `metric <id> <stat> = <value>`. Under Recover Solution list concrete \
         actions as dashes. Keep Summary to a few sentences. Put SQL statements, if any, under \
         SQL Context.",
        SECTION_TITLES.join(", "),
        MAX_CAUSES
    );

    Ok(DiagnosisPrompt {
        anomaly,
        condition,
        metrics,
        experience,
        output_spec,
    })
}

fn metric_line(
    context: &DiagnosisContext,
    metric_id: &str,
    score: Option<Value>,
    abnormal: bool,
) -> String {
    let status = if abnormal { "abnormal" } else { "normal" };
    match context.stats_for(metric_id) {
        Some(s) => {
            let score_part = score.map(|v| format!(" score={v:.4}")).unwrap_or_default();
            format!(
                "- metric {metric_id} window=[{},{}] min={:.4} max={:.4} avg={:.4} last={:.4}{score_part} status={status}\n",
                s.window.0, s.window.1, s.min, s.max, s.avg, s.last
            )
        }
        None => format!("- metric {metric_id} status={status}\n"),
    }
}

/// Transport used for remote completions; injectable so tests can count or
/// stub network use.
pub trait CompletionTransport {
    fn post_chat(
        &self,
        url: &str,
        api_key: Option<&str>,
        model_name: &str,
        prompt: &str,
        timeout: Duration,
    ) -> Result<String, DiagnoseError>;
}

/// Blocking HTTP transport posting a chat-style completion request.
pub struct HttpTransport;

impl CompletionTransport for HttpTransport {
    fn post_chat(
        &self,
        url: &str,
        api_key: Option<&str>,
        model_name: &str,
        prompt: &str,
        timeout: Duration,
    ) -> Result<String, DiagnoseError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| DiagnoseError::ConnectionFailed(e.to_string()))?;
        let body = serde_json::json!({
            "model": model_name,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = client.post(url).json(&body);
        if let Some(key) = api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                DiagnoseError::Timeout
            } else {
                DiagnoseError::ConnectionFailed(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(DiagnoseError::HttpStatus(status.as_u16()));
        }
        let payload: serde_json::Value = response
            .json()
            .map_err(|e| DiagnoseError::MalformedResponse(e.to_string()))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_owned())
            .ok_or_else(|| {
                DiagnoseError::MalformedResponse("response lacks choices[0].message.content".into())
            })
    }
}

/// Completion client: remote chat endpoint or the deterministic mock.
pub struct LlmClient {
    cfg: LlmEndpointConfig,
    transport: Box<dyn CompletionTransport>,
}

impl LlmClient {
    pub fn new(cfg: LlmEndpointConfig) -> Self {
        Self {
            cfg,
            transport: Box::new(HttpTransport),
        }
    }

    pub fn with_transport(cfg: LlmEndpointConfig, transport: Box<dyn CompletionTransport>) -> Self {
        Self { cfg, transport }
    }

    pub fn mode(&self) -> LlmMode {
        self.cfg.mode
    }

    /// Produce raw report text for a rendered prompt. Mock mode never
    /// touches the transport.
    pub fn complete(&self, prompt_text: &str) -> Result<String, DiagnoseError> {
        if prompt_text.trim().is_empty() {
            return Err(DiagnoseError::Config("empty prompt".into()));
        }
        match self.cfg.mode {
            LlmMode::Mock => Ok(mock_complete(prompt_text)),
            LlmMode::Remote => {
                if self.cfg.base_url.is_empty() {
                    return Err(DiagnoseError::Config(
                        "remote mode requires base_url".into(),
                    ));
                }
                let api_key = std::env::var(&self.cfg.api_key_env).ok();
                self.transport.post_chat(
                    &self.cfg.base_url,
                    api_key.as_deref(),
                    &self.cfg.model_name,
                    prompt_text,
                    Duration::from_secs(self.cfg.timeout_seconds),
                )
            }
        }
    }
}

/// Metric line the mock extracts from the prompt's metric component.
#[derive(Debug, Clone)]
struct PromptMetric {
    metric_id: String,
    max: Option<Value>,
    avg: Option<Value>,
    abnormal: bool,
}

/// Deterministic completion: emits the five canonical sections, derives
/// causes from `Candidate cause:` markers in the experience component, and
/// cites only metric values read verbatim out of the prompt.
pub fn mock_complete(prompt_text: &str) -> String {
    let mut metrics = Vec::new();
    for line in prompt_text.lines() {
        let Some(rest) = line.trim_start().strip_prefix("- metric ") else {
            continue;
        };
        let mut tokens = rest.split_whitespace();
        let Some(metric_id) = tokens.next() else {
            continue;
        };
        let mut parsed = PromptMetric {
            metric_id: metric_id.to_owned(),
            max: None,
            avg: None,
            abnormal: false,
        };
        for token in tokens {
            if let Some(v) = token.strip_prefix("max=") {
                parsed.max = v.parse().ok();
            } else if let Some(v) = token.strip_prefix("avg=") {
                parsed.avg = v.parse().ok();
            } else if let Some(v) = token.strip_prefix("status=") {
                parsed.abnormal = v == "abnormal";
            }
        }
        metrics.push(parsed);
    }
    let abnormal: Vec<&PromptMetric> = metrics.iter().filter(|m| m.abnormal).collect();

    let cause_re = Regex::new(r"(?i)candidate cause:\s*([^.\n]+)").expect("static regex");
    let mut causes: Vec<String> = Vec::new();
    for caps in cause_re.captures_iter(prompt_text) {
        let label = caps[1].trim().to_lowercase();
        if !label.is_empty() && !causes.contains(&label) {
            causes.push(label);
        }
    }
    causes.truncate(MAX_CAUSES);
    if causes.is_empty() {
        causes.push("undetermined (insufficient recorded experience)".to_owned());
    }

    let mut out = String::new();
    out.push_str("# Anomaly Validation\n");
    if abnormal.is_empty() {
        out.push_str("Verdict: not a real anomaly\n");
        out.push_str(
            "No metric remained abnormal after screening; the alert likely reflects a transient condition.\n",
        );
    } else {
        out.push_str("Verdict: real anomaly\n");
        out.push_str(&format!(
            "The detection condition held under frequency control and {} metric(s) screened abnormal.\n",
            abnormal.len()
        ));
    }

    out.push_str("# Root Cause Analysis\n");
    for (i, label) in causes.iter().enumerate() {
        out.push_str(&format!("{}. {}\n", i + 1, label));
        if abnormal.is_empty() {
            out.push_str("   No abnormal metric supports a stronger attribution.\n");
        } else {
            let m = abnormal[i % abnormal.len()];
            let mut cite = format!("   Supported by metric {}", m.metric_id);
            if let Some(max) = m.max {
                cite.push_str(&format!(" max = {max}"));
            }
            if let Some(avg) = m.avg {
                cite.push_str(&format!(" avg = {avg}"));
            }
            cite.push_str(".\n");
            out.push_str(&cite);
        }
    }

    out.push_str("# Recover Solution\n");
    for label in &causes {
        out.push_str(&format!(
            "- Review the configuration and workload related to {label}.\n"
        ));
    }
    out.push_str("- Re-run detection after applying changes to confirm recovery.\n");

    out.push_str("# Summary\n");
    out.push_str(&format!(
        "{} candidate cause(s) identified from {} abnormal and {} total screened metric(s).\n",
        causes.len(),
        abnormal.len(),
        metrics.len()
    ));

    out.push_str("# SQL Context\n");
    out
}

/// Render a report back to the canonical headed-text wire format.
pub fn render_report(report: &DiagnosisReport) -> String {
    let mut out = String::new();
    out.push_str("# Anomaly Validation\n");
    if report.validation.is_real_anomaly {
        out.push_str("Verdict: real anomaly\n");
    } else {
        out.push_str("Verdict: not a real anomaly\n");
    }
    if !report.validation.rationale.is_empty() {
        out.push_str(&report.validation.rationale);
        out.push('\n');
    }
    out.push_str("# Root Cause Analysis\n");
    for (i, cause) in report.root_causes.iter().enumerate() {
        out.push_str(&format!("{}. {}\n", i + 1, cause.label));
        for line in cause.reasoning.lines() {
            out.push_str(&format!("   {line}\n"));
        }
    }
    out.push_str("# Recover Solution\n");
    for action in &report.recovery {
        out.push_str(&format!("- {action}\n"));
    }
    out.push_str("# Summary\n");
    if !report.summary.is_empty() {
        out.push_str(&report.summary);
        out.push('\n');
    }
    out.push_str("# SQL Context\n");
    if let Some(sql) = &report.sql_context {
        out.push_str(sql);
        out.push('\n');
    }
    out
}

/// Parse raw completion text into the five-section report.
pub fn parse_report(raw: &str) -> Result<DiagnosisReport, DiagnoseError> {
    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    for line in raw.lines() {
        if let Some(title) = line.strip_prefix("# ") {
            sections.push((title.trim().to_owned(), Vec::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push(line.to_owned());
        }
    }
    let find = |title: &str| -> Option<String> {
        sections
            .iter()
            .find(|(t, _)| t.eq_ignore_ascii_case(title))
            .map(|(_, body)| body.join("\n").trim().to_owned())
    };
    for title in SECTION_TITLES {
        if !sections.iter().any(|(t, _)| t.eq_ignore_ascii_case(title)) {
            return Err(DiagnoseError::MissingSection(title.to_owned()));
        }
    }

    let validation_text = find("Anomaly Validation").unwrap_or_default();
    let mut is_real = true;
    let mut rationale_lines = Vec::new();
    for line in validation_text.lines() {
        let lower = line.to_lowercase();
        if let Some(rest) = lower.strip_prefix("verdict:") {
            is_real = !rest.contains("not");
        } else {
            rationale_lines.push(line);
        }
    }
    let validation = ReportValidation {
        is_real_anomaly: is_real,
        rationale: rationale_lines.join("\n").trim().to_owned(),
    };

    let causes_text = find("Root Cause Analysis").unwrap_or_default();
    let cause_start = Regex::new(r"^\s*(\d+)[.)]\s+(.*)$").expect("static regex");
    let mut root_causes: Vec<RootCause> = Vec::new();
    for line in causes_text.lines() {
        if let Some(caps) = cause_start.captures(line) {
            root_causes.push(RootCause {
                label: caps[2].trim().to_owned(),
                reasoning: String::new(),
                evidence_refs: Vec::new(),
            });
        } else if let Some(cause) = root_causes.last_mut() {
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                if !cause.reasoning.is_empty() {
                    cause.reasoning.push('\n');
                }
                cause.reasoning.push_str(trimmed);
            }
        }
    }
    if root_causes.is_empty() {
        return Err(DiagnoseError::NoCauses);
    }
    if root_causes.len() > MAX_CAUSES {
        return Err(DiagnoseError::TooManyCauses(root_causes.len()));
    }
    for cause in &mut root_causes {
        let text = format!("{}\n{}", cause.label, cause.reasoning);
        cause.evidence_refs = extract_evidence_refs(&text);
    }

    let recovery_text = find("Recover Solution").unwrap_or_default();
    let recovery: Vec<String> = recovery_text
        .lines()
        .filter_map(|l| {
            let t = l.trim();
            if t.is_empty() {
                None
            } else {
                Some(t.strip_prefix("- ").unwrap_or(t).to_owned())
            }
        })
        .collect();

    let summary = find("Summary").unwrap_or_default();
    let sql_text = find("SQL Context").unwrap_or_default();
    let sql_context = if sql_text.is_empty() {
        None
    } else {
        Some(sql_text)
    };

    Ok(DiagnosisReport {
        validation,
        root_causes,
        recovery,
        summary,
        sql_context,
    })
}

/// Pull `metric <id> <stat> = <value>` citations out of one cause's text.
fn extract_evidence_refs(text: &str) -> Vec<EvidenceRef> {
    let anchor = Regex::new(r"(?i)\bmetric\s+([A-Za-z0-9_.:\-]+)").expect("static regex");
    let pair = Regex::new(r"([A-Za-z][A-Za-z0-9_]*(?:\[[0-9]+s\])?)\s*=\s*(-?\d+(?:\.\d+)?)")
        .expect("static regex");
    let mut refs = Vec::new();
    for line in text.lines() {
        if let Some(caps) = anchor.captures(line) {
            let metric_id = caps[1].to_owned();
            let rest = &line[caps.get(0).expect("match").end()..];
            for pair_caps in pair.captures_iter(rest) {
                if let Ok(value) = pair_caps[2].parse::<Value>() {
                    refs.push(EvidenceRef {
                        metric_id: metric_id.clone(),
                        claimed_stat: pair_caps[1].to_lowercase(),
                        claimed_value: value,
                    });
                }
            }
        }
    }
    refs
}

/// Kind of authenticity violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthenticityKind {
    UnknownMetric,
    ValueMismatch,
}

/// One evidence-authenticity violation found in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthenticityFinding {
    pub cause_index: usize,
    pub kind: AuthenticityKind,
    pub detail: String,
}

/// Relative and absolute tolerances for claimed stat values; honest rounding
/// stays below both.
const VALUE_REL_TOL: Value = 0.01;
const VALUE_ABS_TOL: Value = 0.01;

/// Check every cited metric and value against the context. An empty result
/// means the report passes evidence authenticity.
pub fn validate_evidence(
    report: &DiagnosisReport,
    context: &DiagnosisContext,
) -> Vec<AuthenticityFinding> {
    let known: BTreeSet<String> = context.known_metric_ids();
    let mut findings = Vec::new();
    let mut reported_unknown: BTreeSet<(usize, String)> = BTreeSet::new();
    for (idx, cause) in report.root_causes.iter().enumerate() {
        for evref in &cause.evidence_refs {
            if !known.contains(&evref.metric_id) {
                // One finding per fabricated metric and cause, however many
                // values the citation carries.
                if reported_unknown.insert((idx, evref.metric_id.clone())) {
                    findings.push(AuthenticityFinding {
                        cause_index: idx,
                        kind: AuthenticityKind::UnknownMetric,
                        detail: format!(
                            "cause {} cites metric {} absent from the context",
                            idx + 1,
                            evref.metric_id
                        ),
                    });
                }
                continue;
            }
            let actual = recompute_stat(context, &evref.metric_id, &evref.claimed_stat);
            if let Some(actual) = actual {
                let diff = (evref.claimed_value - actual).abs();
                if diff > VALUE_ABS_TOL && diff > VALUE_REL_TOL * actual.abs() {
                    findings.push(AuthenticityFinding {
                        cause_index: idx,
                        kind: AuthenticityKind::ValueMismatch,
                        detail: format!(
                            "cause {} claims {} {} = {}, recomputed {}",
                            idx + 1,
                            evref.metric_id,
                            evref.claimed_stat,
                            evref.claimed_value,
                            actual
                        ),
                    });
                }
            }
        }
    }
    findings
}

fn recompute_stat(context: &DiagnosisContext, metric_id: &str, stat: &str) -> Option<Value> {
    let stats = context.stats_for(metric_id);
    let base = stat.split('[').next().unwrap_or(stat);
    match base {
        "max" => stats.map(|s| s.max),
        "min" => stats.map(|s| s.min),
        "avg" | "mean" => stats.map(|s| s.avg),
        "last" | "value" | "raw" => stats.map(|s| s.last),
        "count" => stats.map(|s| s.count as Value),
        "score" => context.score_for(metric_id),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adf::AdfResult;
    use crate::anomaly::{AnomalyEvent, EvidenceItem};
    use crate::evolution::{DiagnosisContext, MetricWindowStats};
    use crate::graph::VertexId;
    use crate::seeds;
    use crate::tools::{FindingItem, Severity, ToolFindings};
    use proptest::prelude::*;

    fn adf_result(score: Value, abnormal: bool) -> AdfResult {
        AdfResult {
            sigma: 24.7487,
            c_v: 0.0,
            rho_v: 0.0,
            rho_r: 0.0,
            baseline: 15.0,
            deviation: 43.0,
            state_value: 1.7375,
            w1: 0.7122,
            w2: 0.2878,
            score,
            abnormal,
        }
    }

    fn stats(metric_id: &str, max: Value, avg: Value) -> MetricWindowStats {
        MetricWindowStats {
            metric_id: metric_id.to_owned(),
            window: (4800, 5400),
            min: avg - 2.0,
            max,
            avg,
            last: max - 1.0,
            count: 21,
        }
    }

    fn fixture_context() -> DiagnosisContext {
        DiagnosisContext {
            anomaly: AnomalyEvent {
                model_id: "LOG_FILE_SYNC".to_owned(),
                fired_at: 5400,
                window: (5160, 5400),
                evidence: vec![EvidenceItem {
                    metric_id: "log_file_sync_wait".to_owned(),
                    stat: "raw".to_owned(),
                    observed: 70.2,
                }],
                history: vec![true, true, true, true, true],
            },
            explored_paths: vec![
                vec![VertexId::new("trigger:LOG_FILE_SYNC")],
                vec![
                    VertexId::new("trigger:LOG_FILE_SYNC"),
                    VertexId::new("exp:LOG_FILE_SYNC:0"),
                ],
            ],
            abnormal_metrics: vec![("log_file_sync_wait".to_owned(), adf_result(18.13, true))],
            normal_metrics: vec!["commit_rate".to_owned()],
            experience_texts: vec![(
                VertexId::new("exp:LOG_FILE_SYNC:0"),
                "Waits above 60 ms stall commits. Candidate cause: LOW REDO FILE SIZE.".to_owned(),
            )],
            tool_findings: vec![ToolFindings {
                tool_id: "logsync_verifier".to_owned(),
                items: vec![FindingItem {
                    severity: Severity::Critical,
                    message: "log sync wait peaked above baseline".to_owned(),
                    evidence: vec![EvidenceItem {
                        metric_id: "log_file_sync_wait".to_owned(),
                        stat: "max[600s]".to_owned(),
                        observed: 74.21,
                    }],
                }],
            }],
            created_cross_edges: Vec::new(),
            metric_stats: vec![
                stats("log_file_sync_wait", 74.21, 38.1),
                stats("commit_rate", 92.0, 90.0),
            ],
            rounds_run: 2,
            adf_errors: Vec::new(),
        }
    }

    fn fixture_model() -> crate::anomaly::AnomalyModel {
        seeds::seed_models()
            .into_iter()
            .find(|m| m.id == "LOG_FILE_SYNC")
            .unwrap()
    }

    #[test]
    fn prompt_lists_abnormal_metric_with_stats() {
        let prompt = build_prompt(&fixture_context(), &fixture_model()).unwrap();
        assert!(prompt.metrics.contains("metric log_file_sync_wait"));
        assert!(prompt.metrics.contains("max=74.2100"));
        assert!(prompt.metrics.contains("avg=38.1000"));
        assert!(prompt.metrics.contains("status=abnormal"));
        assert!(prompt.metrics.contains("commit_rate"));
        assert!(prompt.condition.contains("60"));
        for part in [
            &prompt.anomaly,
            &prompt.condition,
            &prompt.metrics,
            &prompt.experience,
            &prompt.output_spec,
        ] {
            assert!(!part.trim().is_empty());
        }
    }

    #[test]
    fn prompt_without_abnormal_metrics_is_still_valid() {
        let mut context = fixture_context();
        context.abnormal_metrics.clear();
        let prompt = build_prompt(&context, &fixture_model()).unwrap();
        assert!(prompt.metrics.contains("no metric abnormal"));
    }

    #[test]
    fn prompt_rendering_is_deterministic() {
        let a = build_prompt(&fixture_context(), &fixture_model())
            .unwrap()
            .render();
        let b = build_prompt(&fixture_context(), &fixture_model())
            .unwrap()
            .render();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_context_is_rejected() {
        let mut context = fixture_context();
        context.explored_paths.clear();
        assert!(matches!(
            build_prompt(&context, &fixture_model()),
            Err(DiagnoseError::EmptyContext)
        ));
    }

    #[test]
    fn mock_output_parses_with_all_sections() {
        let prompt = build_prompt(&fixture_context(), &fixture_model()).unwrap();
        let raw = mock_complete(&prompt.render());
        let report = parse_report(&raw).unwrap();
        assert!(report.validation.is_real_anomaly);
        assert!(!report.root_causes.is_empty() && report.root_causes.len() <= MAX_CAUSES);
        assert_eq!(report.root_causes[0].label, "low redo file size");
        assert!(!report.recovery.is_empty());
        assert!(!report.summary.is_empty());
    }

    #[test]
    fn mock_cites_only_context_metrics() {
        let context = fixture_context();
        let prompt = build_prompt(&context, &fixture_model()).unwrap();
        let report = parse_report(&mock_complete(&prompt.render())).unwrap();
        assert!(report.root_causes[0]
            .evidence_refs
            .iter()
            .all(|r| r.metric_id == "log_file_sync_wait"));
        assert!(validate_evidence(&report, &context).is_empty());
    }

    #[test]
    fn missing_summary_is_reported() {
        let raw = "# Anomaly Validation\nVerdict: real anomaly\n# Root Cause Analysis\n1. x\n# Recover Solution\n- y\n# SQL Context\n";
        match parse_report(raw) {
            Err(DiagnoseError::MissingSection(name)) => assert_eq!(name, "Summary"),
            other => panic!("expected MissingSection(Summary), got {other:?}"),
        }
    }

    #[test]
    fn six_causes_are_too_many() {
        let mut raw =
            String::from("# Anomaly Validation\nVerdict: real anomaly\n# Root Cause Analysis\n");
        for i in 1..=6 {
            raw.push_str(&format!("{i}. cause {i}\n"));
        }
        raw.push_str("# Recover Solution\n- act\n# Summary\nok\n# SQL Context\n");
        assert!(matches!(
            parse_report(&raw),
            Err(DiagnoseError::TooManyCauses(6))
        ));
    }

    #[test]
    fn zero_causes_is_an_error() {
        let raw = "# Anomaly Validation\nVerdict: real anomaly\n# Root Cause Analysis\n\n# Recover Solution\n- act\n# Summary\nok\n# SQL Context\n";
        assert!(matches!(parse_report(raw), Err(DiagnoseError::NoCauses)));
    }

    #[test]
    fn clean_citation_yields_no_findings() {
        let context = fixture_context();
        let raw = "# Anomaly Validation\nVerdict: real anomaly\n# Root Cause Analysis\n1. low redo file size\n   Supported by metric log_file_sync_wait max = 74.21.\n# Recover Solution\n- fix\n# Summary\nok\n# SQL Context\n";
        let report = parse_report(raw).unwrap();
        assert_eq!(report.root_causes[0].evidence_refs.len(), 1);
        assert!(validate_evidence(&report, &context).is_empty());
    }

    #[test]
    fn hallucinated_metric_is_flagged() {
        let context = fixture_context();
        let raw = "# Anomaly Validation\nVerdict: real anomaly\n# Root Cause Analysis\n1. low redo file size\n   Supported by metric checkpoint_delay max = 61660.0.\n# Recover Solution\n- fix\n# Summary\nok\n# SQL Context\n";
        let report = parse_report(raw).unwrap();
        let findings = validate_evidence(&report, &context);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, AuthenticityKind::UnknownMetric);
        assert_eq!(findings[0].cause_index, 0);
    }

    #[test]
    fn wrong_value_is_flagged() {
        let context = fixture_context();
        let raw = "# Anomaly Validation\nVerdict: real anomaly\n# Root Cause Analysis\n1. low redo file size\n   Supported by metric log_file_sync_wait max = 3.78.\n# Recover Solution\n- fix\n# Summary\nok\n# SQL Context\n";
        let report = parse_report(raw).unwrap();
        let findings = validate_evidence(&report, &context);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, AuthenticityKind::ValueMismatch);
    }

    #[test]
    fn rounded_values_pass_the_tolerance() {
        let context = fixture_context();
        // true max is 74.21; a rounded 74.2 is honest rounding
        let raw = "# Anomaly Validation\nVerdict: real anomaly\n# Root Cause Analysis\n1. low redo file size\n   Supported by metric log_file_sync_wait max = 74.2.\n# Recover Solution\n- fix\n# Summary\nok\n# SQL Context\n";
        let report = parse_report(raw).unwrap();
        assert!(validate_evidence(&report, &context).is_empty());
    }

    #[test]
    fn mock_mode_never_touches_the_transport() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        use std::sync::Arc;

        struct Counting(Arc<AtomicUsize>);
        impl CompletionTransport for Counting {
            fn post_chat(
                &self,
                _url: &str,
                _api_key: Option<&str>,
                _model: &str,
                _prompt: &str,
                _timeout: Duration,
            ) -> Result<String, DiagnoseError> {
                self.0.fetch_add(1, Ordering::SeqCst);
                Ok(String::new())
            }
        }

        let calls = Arc::new(AtomicUsize::new(0));
        let client = LlmClient::with_transport(
            LlmEndpointConfig::default(),
            Box::new(Counting(calls.clone())),
        );
        let prompt = build_prompt(&fixture_context(), &fixture_model()).unwrap();
        let raw = client.complete(&prompt.render()).unwrap();
        assert!(parse_report(&raw).is_ok());
        assert_eq!(calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn remote_mode_without_url_is_a_config_error() {
        let cfg = LlmEndpointConfig {
            mode: LlmMode::Remote,
            ..LlmEndpointConfig::default()
        };
        let client = LlmClient::new(cfg);
        assert!(matches!(
            client.complete("prompt"),
            Err(DiagnoseError::Config(_))
        ));
    }

    #[test]
    fn unreachable_endpoint_surfaces_a_connection_error() {
        let cfg = LlmEndpointConfig {
            mode: LlmMode::Remote,
            base_url: "http://127.0.0.1:9/v1/chat/completions".to_owned(),
            timeout_seconds: 2,
            ..LlmEndpointConfig::default()
        };
        let client = LlmClient::new(cfg);
        match client.complete("prompt") {
            Err(DiagnoseError::ConnectionFailed(_)) | Err(DiagnoseError::Timeout) => {}
            other => panic!("expected connection failure, got {other:?}"),
        }
    }

    fn one_shot_http_server(response: &'static str) -> String {
        use std::io::{Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            if let Ok((mut stream, _)) = listener.accept() {
                let mut buf = [0u8; 4096];
                let _ = stream.read(&mut buf);
                let _ = stream.write_all(response.as_bytes());
            }
        });
        format!("http://{addr}/v1/chat/completions")
    }

    #[test]
    fn http_error_status_is_surfaced() {
        let url = one_shot_http_server(
            "HTTP/1.1 503 Service Unavailable\r\ncontent-length: 0\r\nconnection: close\r\n\r\n",
        );
        let cfg = LlmEndpointConfig {
            mode: LlmMode::Remote,
            base_url: url,
            timeout_seconds: 5,
            ..LlmEndpointConfig::default()
        };
        match LlmClient::new(cfg).complete("prompt") {
            Err(DiagnoseError::HttpStatus(503)) => {}
            other => panic!("expected HttpStatus(503), got {other:?}"),
        }
    }

    #[test]
    fn response_without_message_body_is_malformed() {
        let body = "{\"choices\":[]}";
        let url = one_shot_http_server(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: 14\r\nconnection: close\r\n\r\n{\"choices\":[]}",
        );
        assert_eq!(body.len(), 14);
        let cfg = LlmEndpointConfig {
            mode: LlmMode::Remote,
            base_url: url,
            timeout_seconds: 5,
            ..LlmEndpointConfig::default()
        };
        match LlmClient::new(cfg).complete("prompt") {
            Err(DiagnoseError::MalformedResponse(_)) => {}
            other => panic!("expected MalformedResponse, got {other:?}"),
        }
    }

    fn clean_text() -> impl Strategy<Value = String> {
        "[a-z][a-z ]{0,30}"
    }

    proptest! {
        #[test]
        fn parse_of_render_is_identity_on_sections(
            real in any::<bool>(),
            rationale in clean_text(),
            labels in proptest::collection::vec(clean_text(), 1..5),
            reasons in proptest::collection::vec(clean_text(), 1..5),
            recovery in proptest::collection::vec(clean_text(), 1..4),
            summary in clean_text(),
            sql in proptest::option::of(clean_text()),
        ) {
            let causes: Vec<RootCause> = labels
                .iter()
                .zip(reasons.iter().cycle())
                .map(|(label, reason)| RootCause {
                    label: label.trim().to_owned(),
                    reasoning: reason.trim().to_owned(),
                    evidence_refs: Vec::new(),
                })
                .collect();
            let report = DiagnosisReport {
                validation: ReportValidation {
                    is_real_anomaly: real,
                    rationale: rationale.trim().to_owned(),
                },
                root_causes: causes,
                recovery: recovery.iter().map(|r| r.trim().to_owned()).collect(),
                summary: summary.trim().to_owned(),
                sql_context: sql.map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()),
            };
            prop_assume!(report.root_causes.iter().all(|c| !c.label.is_empty()));
            prop_assume!(report.recovery.iter().all(|r| !r.is_empty()));
            let parsed = parse_report(&render_report(&report)).unwrap();
            prop_assert_eq!(parsed.validation.is_real_anomaly, report.validation.is_real_anomaly);
            prop_assert_eq!(parsed.validation.rationale, report.validation.rationale);
            prop_assert_eq!(parsed.recovery, report.recovery);
            prop_assert_eq!(parsed.summary, report.summary);
            prop_assert_eq!(parsed.sql_context, report.sql_context);
            prop_assert_eq!(parsed.root_causes.len(), report.root_causes.len());
            for (p, r) in parsed.root_causes.iter().zip(report.root_causes.iter()) {
                prop_assert_eq!(&p.label, &r.label);
                prop_assert_eq!(&p.reasoning, &r.reasoning);
            }
        }
    }
}
