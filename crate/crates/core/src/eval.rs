//! Root-cause scoring and the end-to-end evaluation suite.
//!
//! Predicted cause labels are compared against ground truth as normalized
//! sets. Accuracy follows the piecewise penalty formula (wrong causes cost
//! `sigma` each); precision, recall, and F1 are the standard set-based
//! definitions. The suite drives generate → ingest → detect → evolve →
//! diagnose → parse → score per (scenario, seed) case.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::{self, AnomalyModel};
use crate::diagnose::{build_prompt, parse_report, LlmClient, LlmEndpointConfig};
use crate::evolution::{evolve, EvolutionConfig};
use crate::graph::{ExperienceGraph, Relation, VertexPayload};
use crate::numeric::Real;
use crate::simulate::{self, GroundTruth, Scenario};
use crate::store::MetricStore;
use crate::tools::ToolRegistry;
use crate::{Timestamp, Value};

/// Default penalty weight for wrongly predicted causes.
pub const DEFAULT_PENALTY_SIGMA: Value = 0.1;

/// Per-case counts and scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScore {
    pub a_c: u32,
    pub a_w: u32,
    pub a_a: u32,
    pub precision: Value,
    pub recall: Value,
    pub f1: Value,
    pub accuracy: Value,
    pub penalty_sigma: Value,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("score out of range: {0}")]
    OutOfRange(Value),
}

/// Lowercase and collapse whitespace.
pub fn normalize_label(label: &str) -> String {
    label
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Maps labels onto a canonical representative via the graph's synonym tag
/// closure; labels without synonyms map to themselves.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    canonical: BTreeMap<String, String>,
}

impl SynonymTable {
    /// Build from synonym edges between tag vertices: every label in a
    /// synonym class maps to the class's smallest label.
    pub fn from_graph(graph: &ExperienceGraph) -> Self {
        let mut label_of = BTreeMap::new();
        for v in graph.vertices() {
            if let VertexPayload::Tag { label } = &v.payload {
                label_of.insert(v.id.clone(), normalize_label(label));
            }
        }
        // Union by smallest label, iterating to a fixed point over the
        // synonym edge list (classes are tiny).
        let mut canonical: BTreeMap<String, String> =
            label_of.values().map(|l| (l.clone(), l.clone())).collect();
        let synonym_pairs: Vec<(String, String)> = graph
            .edges()
            .filter(|e| e.relation == Relation::Synonym)
            .filter_map(|e| Some((label_of.get(&e.src)?.clone(), label_of.get(&e.dst)?.clone())))
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for (a, b) in &synonym_pairs {
                let ca = canonical[a].clone();
                let cb = canonical[b].clone();
                let smallest = ca.clone().min(cb.clone());
                for (label, c) in [(a, &ca), (b, &cb)] {
                    if c != &smallest {
                        canonical.insert(label.clone(), smallest.clone());
                        changed = true;
                    }
                }
            }
        }
        Self { canonical }
    }

    pub fn canonicalize(&self, label: &str) -> String {
        let normalized = normalize_label(label);
        self.canonical
            .get(&normalized)
            .cloned()
            .unwrap_or(normalized)
    }
}

/// Normalize a label set, optionally folding synonyms.
pub fn normalize_labels(
    labels: &BTreeSet<String>,
    synonyms: Option<&SynonymTable>,
) -> BTreeSet<String> {
    labels
        .iter()
        .map(|l| match synonyms {
            Some(table) => table.canonicalize(l),
            None => normalize_label(l),
        })
        .collect()
}

/// Scalar-generic accuracy: `(a_c - sigma * a_w) / a_a` when `a_a > 0` and
/// `a_c >= sigma * a_w`, else 0.
pub fn accuracy_in<S: Real>(a_c: u32, a_w: u32, a_a: u32, sigma: S) -> S {
    let ac = S::from_u32(a_c).unwrap();
    let aw = S::from_u32(a_w).unwrap();
    if a_a > 0 && ac >= sigma * aw {
        (ac - sigma * aw) / S::from_u32(a_a).unwrap()
    } else {
        S::zero()
    }
}

/// Scalar-generic weighted human-evaluation score (30/30/40).
pub fn heval_in<S: Real>(recall: S, consistency: S, authenticity: S) -> S {
    let w3 = S::from_f64(0.3).unwrap();
    let w4 = S::from_f64(0.4).unwrap();
    w3 * recall + w3 * consistency + w4 * authenticity
}

/// Weighted human-evaluation score over three criteria in `[0, 1]`.
pub fn heval(
    recall_score: Value,
    consistency_score: Value,
    authenticity_score: Value,
) -> Result<Value, EvalError> {
    for v in [recall_score, consistency_score, authenticity_score] {
        if !(0.0..=1.0).contains(&v) {
            return Err(EvalError::OutOfRange(v));
        }
    }
    Ok(heval_in(
        recall_score,
        consistency_score,
        authenticity_score,
    ))
}

/// Score one predicted cause set against the truth set. Labels are
/// normalized (lowercase, collapsed whitespace) before comparison.
pub fn score_case(
    predicted: &BTreeSet<String>,
    truth: &BTreeSet<String>,
    penalty_sigma: Value,
) -> CaseScore {
    let predicted = normalize_labels(predicted, None);
    let truth = normalize_labels(truth, None);
    let a_c = predicted.intersection(&truth).count() as u32;
    let a_w = predicted.difference(&truth).count() as u32;
    let a_a = truth.len() as u32;
    let precision = if predicted.is_empty() {
        0.0
    } else {
        Value::from(a_c) / predicted.len() as Value
    };
    let recall = if a_a == 0 {
        0.0
    } else {
        Value::from(a_c) / Value::from(a_a)
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    CaseScore {
        a_c,
        a_w,
        a_a,
        precision,
        recall,
        f1,
        accuracy: accuracy_in(a_c, a_w, a_a, penalty_sigma),
        penalty_sigma,
    }
}

/// One generated case handed to a diagnoser.
pub struct PreparedCase<'a> {
    pub scenario: &'a Scenario,
    pub seed: u64,
    pub store: MetricStore,
    pub truth: GroundTruth,
    pub detect_at: Timestamp,
}

/// Anything that can turn a prepared case into predicted cause labels.
pub trait Diagnoser {
    fn name(&self) -> &str;
    fn predict(&self, case: &PreparedCase<'_>) -> Result<BTreeSet<String>, String>;
}

/// Upper-bound diagnoser: answers with the ground truth.
pub struct GroundTruthDiagnoser;

impl Diagnoser for GroundTruthDiagnoser {
    fn name(&self) -> &str {
        "ground-truth"
    }

    fn predict(&self, case: &PreparedCase<'_>) -> Result<BTreeSet<String>, String> {
        Ok(case.truth.causes.clone())
    }
}

/// Lower-bound diagnoser: never predicts anything.
pub struct EmptyDiagnoser;

impl Diagnoser for EmptyDiagnoser {
    fn name(&self) -> &str {
        "empty"
    }

    fn predict(&self, _case: &PreparedCase<'_>) -> Result<BTreeSet<String>, String> {
        Ok(BTreeSet::new())
    }
}

/// The full pipeline as a diagnoser: detect, evolve over a fresh copy of the
/// graph, prompt the endpoint, parse the report, and return its cause labels.
pub struct PipelineDiagnoser {
    pub models: Vec<AnomalyModel>,
    pub graph: ExperienceGraph,
    pub evolution: EvolutionConfig,
    pub llm: LlmEndpointConfig,
}

impl Diagnoser for PipelineDiagnoser {
    fn name(&self) -> &str {
        "pipeline"
    }

    fn predict(&self, case: &PreparedCase<'_>) -> Result<BTreeSet<String>, String> {
        let outcome = anomaly::detect(&self.models, &case.store, case.detect_at);
        let event = outcome
            .events
            .iter()
            .find(|e| e.model_id == case.scenario.model_id)
            .or_else(|| outcome.events.first())
            .ok_or_else(|| "no anomaly event fired".to_owned())?;
        let model = self
            .models
            .iter()
            .find(|m| m.id == event.model_id)
            .ok_or_else(|| format!("event for unknown model {}", event.model_id))?;
        let mut graph = self.graph.clone();
        let tools = ToolRegistry::with_builtins();
        let context = evolve(event, &mut graph, &case.store, &tools, &self.evolution)
            .map_err(|e| e.to_string())?;
        let prompt = build_prompt(&context, model).map_err(|e| e.to_string())?;
        let client = LlmClient::new(self.llm.clone());
        let raw = client
            .complete(&prompt.render())
            .map_err(|e| e.to_string())?;
        let report = parse_report(&raw).map_err(|e| e.to_string())?;
        Ok(report.root_causes.iter().map(|c| c.label.clone()).collect())
    }
}

/// Suite-wide generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub duration_seconds: u32,
    pub cadence_seconds: u32,
    pub penalty_sigma: Value,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            duration_seconds: 7200,
            cadence_seconds: 30,
            penalty_sigma: DEFAULT_PENALTY_SIGMA,
        }
    }
}

/// One scored case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub case_id: String,
    pub scenario: String,
    pub seed: u64,
    pub predicted: BTreeSet<String>,
    /// Diagnoser failure recorded for the case (scored as empty prediction).
    pub failure: Option<String>,
    pub score: CaseScore,
}

/// All cases plus aggregate means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub cases: Vec<EvalCase>,
    pub mean_accuracy: Value,
    pub mean_precision: Value,
    pub mean_recall: Value,
    pub mean_f1: Value,
}

/// Run every (scenario, seed) case through the diagnoser and score it.
/// Diagnoser failures score the case as an empty prediction.
pub fn run_suite(
    scenarios: &[Scenario],
    diagnoser: &dyn Diagnoser,
    seeds: &[u64],
    opts: &SuiteOptions,
) -> EvalSummary {
    let mut cases = Vec::new();
    for scenario in scenarios {
        for &seed in seeds {
            let (series_set, truth) =
                simulate::generate(scenario, seed, opts.duration_seconds, opts.cadence_seconds)
                    .expect("catalog scenarios generate");
            let mut store = MetricStore::new();
            for series in series_set {
                store.insert_series(series);
            }
            let prepared = PreparedCase {
                scenario,
                seed,
                store,
                truth,
                detect_at: simulate::suggested_detect_time(scenario, opts.duration_seconds),
            };
            let (predicted, failure) = match diagnoser.predict(&prepared) {
                Ok(labels) => (labels, None),
                Err(reason) => (BTreeSet::new(), Some(reason)),
            };
            let score = score_case(&predicted, &prepared.truth.causes, opts.penalty_sigma);
            cases.push(EvalCase {
                case_id: format!("{}:{}", scenario.name, seed),
                scenario: scenario.name.clone(),
                seed,
                predicted,
                failure,
                score,
            });
        }
    }
    cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let n = cases.len().max(1) as Value;
    let mean = |f: fn(&CaseScore) -> Value| cases.iter().map(|c| f(&c.score)).sum::<Value>() / n;
    EvalSummary {
        mean_accuracy: mean(|s| s.accuracy),
        mean_precision: mean(|s| s.precision),
        mean_recall: mean(|s| s.recall),
        mean_f1: mean(|s| s.f1),
        cases,
    }
}

/// CSV rendering of a summary (one row per case).
pub fn summary_to_csv(summary: &EvalSummary) -> String {
    let mut out = String::from("case_id,scenario,seed,a_c,a_w,a_a,precision,recall,f1,accuracy\n");
    for case in &summary.cases {
        let s = &case.score;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            case.case_id,
            case.scenario,
            case.seed,
            s.a_c,
            s.a_w,
            s.a_a,
            s.precision,
            s.recall,
            s.f1,
            s.accuracy
        ));
    }
    out
}
