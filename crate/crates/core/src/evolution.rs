//! Two-stage graph evolution.
//!
//! Starting at the anomaly's trigger vertex, each round expands the frontier
//! through the graph (metric vertices gate the traversal), screens every
//! newly aggregated metric with the adaptive detector, and admits abnormal
//! metrics' vertices to the next frontier. When a round flags no new
//! abnormal metric the loop terminates. Fragments that were co-abnormal in
//! the same run are joined or reinforced by evolution cross-edges, and the
//! traversal is clipped of branches that only lead to normal metrics.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adf::{self, AdfConfig, AdfResult};
use crate::anomaly::AnomalyEvent;
use crate::graph::{
    Edge, EdgeAttrs, EdgeOrigin, ExpandLimits, ExperienceGraph, GraphError, Relation, Vertex,
    VertexId, VertexKind, VertexPayload,
};
use crate::store::MetricStore;
use crate::tools::{FindingItem, Severity, ToolFindings, ToolParams, ToolRegistry};
use crate::{Timestamp, Value};

/// Bounds for one evolution run. `limits` applies per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub limits: ExpandLimits,
    pub max_rounds: u32,
    pub adf: AdfConfig,
    pub cross_edge_increment: Value,
    /// Screening window ending at the event's fire time.
    pub screen_window_seconds: u32,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            limits: ExpandLimits::default(),
            max_rounds: 3,
            adf: AdfConfig::default(),
            cross_edge_increment: 1.0,
            screen_window_seconds: 600,
        }
    }
}

/// Window summary for one screened metric; feeds the prompt's metric section
/// and evidence-authenticity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricWindowStats {
    pub metric_id: String,
    pub window: (Timestamp, Timestamp),
    pub min: Value,
    pub max: Value,
    pub avg: Value,
    pub last: Value,
    pub count: usize,
}

/// Everything one evolution run accumulated for the LLM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisContext {
    pub anomaly: AnomalyEvent,
    /// Trigger-rooted paths to every kept vertex, in discovery order.
    pub explored_paths: Vec<Vec<VertexId>>,
    pub abnormal_metrics: Vec<(String, AdfResult)>,
    pub normal_metrics: Vec<String>,
    pub experience_texts: Vec<(VertexId, String)>,
    pub tool_findings: Vec<ToolFindings>,
    pub created_cross_edges: Vec<Edge>,
    pub metric_stats: Vec<MetricWindowStats>,
    pub rounds_run: u32,
    /// Per-metric screening failures, non-fatal.
    pub adf_errors: Vec<(String, String)>,
}

impl DiagnosisContext {
    /// Metric ids present in this context (abnormal and normal).
    pub fn known_metric_ids(&self) -> BTreeSet<String> {
        self.abnormal_metrics
            .iter()
            .map(|(id, _)| id.clone())
            .chain(self.normal_metrics.iter().cloned())
            .collect()
    }

    pub fn stats_for(&self, metric_id: &str) -> Option<&MetricWindowStats> {
        self.metric_stats.iter().find(|s| s.metric_id == metric_id)
    }

    pub fn score_for(&self, metric_id: &str) -> Option<Value> {
        self.abnormal_metrics
            .iter()
            .find(|(id, _)| id == metric_id)
            .map(|(_, r)| r.score)
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("no trigger vertex for model {0}")]
    UnknownTrigger(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Run the evolution loop for one anomaly event.
///
/// The traversal reads a snapshot of the graph; cross-edge reinforcement is
/// the single mutation and happens after traversal completes.
pub fn evolve(
    event: &AnomalyEvent,
    graph: &mut ExperienceGraph,
    store: &MetricStore,
    tools: &ToolRegistry,
    cfg: &EvolutionConfig,
) -> Result<DiagnosisContext, EvolveError> {
    let trigger_id = graph
        .trigger_for_model(&event.model_id)
        .map(|v| v.id.clone())
        .ok_or_else(|| EvolveError::UnknownTrigger(event.model_id.clone()))?;

    let mut parent: BTreeMap<VertexId, Option<VertexId>> = BTreeMap::new();
    parent.insert(trigger_id.clone(), None);
    let mut discovery_order: Vec<VertexId> = vec![trigger_id.clone()];
    let mut frontier: BTreeSet<VertexId> = BTreeSet::from([trigger_id.clone()]);

    let mut verdicts: BTreeMap<String, bool> = BTreeMap::new();
    let mut abnormal_results: BTreeMap<String, AdfResult> = BTreeMap::new();
    let mut metric_stats: BTreeMap<String, MetricWindowStats> = BTreeMap::new();
    let mut adf_errors: Vec<(String, String)> = Vec::new();
    let mut rounds_run = 0;

    for _ in 0..cfg.max_rounds {
        rounds_run += 1;
        let new_vertices = bfs_round(graph, &frontier, &mut parent, &cfg.limits);
        discovery_order.extend(new_vertices.iter().cloned());

        // Aggregate the round's new metrics and screen each one once.
        let mut new_metric_ids: BTreeSet<String> = BTreeSet::new();
        for id in &new_vertices {
            if let Some(VertexPayload::Metric { metric_id, .. }) =
                graph.vertex(id).map(|v| &v.payload)
            {
                if !verdicts.contains_key(metric_id) {
                    new_metric_ids.insert(metric_id.clone());
                }
            }
        }
        let mut any_new_abnormal = false;
        for metric_id in &new_metric_ids {
            match screen_metric(store, metric_id, event.fired_at, cfg) {
                Ok((result, stats)) => {
                    verdicts.insert(metric_id.clone(), result.abnormal);
                    metric_stats.insert(metric_id.clone(), stats);
                    if result.abnormal {
                        any_new_abnormal = true;
                        abnormal_results.insert(metric_id.clone(), result);
                    }
                }
                Err(reason) => {
                    adf_errors.push((metric_id.clone(), reason));
                }
            }
        }
        if !any_new_abnormal {
            break;
        }
        frontier = new_vertices
            .iter()
            .filter(|id| {
                matches!(
                    graph.vertex(id).map(|v| &v.payload),
                    Some(VertexPayload::Metric { metric_id, .. })
                        if verdicts.get(metric_id).copied().unwrap_or(false)
                )
            })
            .cloned()
            .collect();
        if frontier.is_empty() {
            break;
        }
    }

    // Clip branches whose metrics are all normal: a subtree of the traversal
    // tree that reached metric vertices but no abnormal one is dropped
    // wholesale (a neighboring fragment that stayed healthy contributes
    // neither paths nor experience). Subtrees without metrics, such as the
    // trigger's own experience, stay.
    let mut children: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for (v, p) in &parent {
        if let Some(p) = p {
            children.entry(p.clone()).or_default().push(v.clone());
        }
    }
    let mut has_metric: BTreeMap<VertexId, bool> = BTreeMap::new();
    let mut has_abnormal: BTreeMap<VertexId, bool> = BTreeMap::new();
    for v in discovery_order.iter().rev() {
        let (own_metric, own_abnormal) = match graph.vertex(v).map(|vx| &vx.payload) {
            Some(VertexPayload::Metric { metric_id, .. }) => {
                (true, verdicts.get(metric_id).copied().unwrap_or(false))
            }
            _ => (false, false),
        };
        let mut m = own_metric;
        let mut a = own_abnormal;
        for c in children.get(v).into_iter().flatten() {
            m |= has_metric.get(c).copied().unwrap_or(false);
            a |= has_abnormal.get(c).copied().unwrap_or(false);
        }
        has_metric.insert(v.clone(), m);
        has_abnormal.insert(v.clone(), a);
    }
    let mut kept: BTreeSet<VertexId> = BTreeSet::new();
    let mut stack = vec![trigger_id.clone()];
    while let Some(v) = stack.pop() {
        let clipped = v != trigger_id
            && has_metric.get(&v).copied().unwrap_or(false)
            && !has_abnormal.get(&v).copied().unwrap_or(false);
        if clipped {
            continue;
        }
        kept.insert(v.clone());
        for c in children.get(&v).into_iter().flatten() {
            stack.push(c.clone());
        }
    }

    let explored_paths: Vec<Vec<VertexId>> = discovery_order
        .iter()
        .filter(|v| kept.contains(*v))
        .map(|v| path_to(&parent, v))
        .collect();

    // Collect experience text and run tools along the kept traversal.
    let mut experience_texts = Vec::new();
    let mut tool_findings = Vec::new();
    let mut ran_tools: BTreeSet<String> = BTreeSet::new();
    for v in &discovery_order {
        if !kept.contains(v) {
            continue;
        }
        match graph.vertex(v).map(|vx| &vx.payload) {
            Some(VertexPayload::Experience { text, .. }) => {
                experience_texts.push((v.clone(), text.clone()));
            }
            Some(VertexPayload::Tool { tool_id }) if ran_tools.insert(tool_id.clone()) => {
                let findings = if tools.contains(tool_id) {
                    match tools.run(tool_id, store, &ToolParams::new(), event.fired_at) {
                        Ok(f) => f,
                        Err(e) => unavailable_tool(tool_id, &e.to_string()),
                    }
                } else {
                    unavailable_tool(tool_id, "tool unavailable")
                };
                tool_findings.push(findings);
            }
            _ => {}
        }
    }

    // Reinforce cross-edges between fragments that were co-abnormal.
    let mut contributing: BTreeSet<VertexId> = BTreeSet::from([trigger_id.clone()]);
    for v in parent.keys() {
        if let Some(Vertex {
            payload: VertexPayload::Metric { metric_id, .. },
            ..
        }) = graph.vertex(v)
        {
            if verdicts.get(metric_id).copied().unwrap_or(false) {
                for neighbor in graph.adjacent(v).keys() {
                    let is_trigger = graph
                        .vertex(neighbor)
                        .map(|n| n.kind() == VertexKind::Trigger)
                        .unwrap_or(false);
                    if is_trigger
                        && graph
                            .edge_between(v, Relation::Relevance, neighbor)
                            .is_some()
                    {
                        contributing.insert(neighbor.clone());
                    }
                }
            }
        }
    }
    let triggers: Vec<VertexId> = contributing.into_iter().collect();
    let mut pairs = Vec::new();
    for i in 0..triggers.len() {
        for j in (i + 1)..triggers.len() {
            pairs.push((triggers[i].clone(), triggers[j].clone()));
        }
    }
    let created_cross_edges = reinforce_cross_edges(graph, &pairs, cfg.cross_edge_increment)?;

    let mut abnormal_metrics: Vec<(String, AdfResult)> = abnormal_results.into_iter().collect();
    abnormal_metrics.sort_by(|a, b| a.0.cmp(&b.0));
    let normal_metrics: Vec<String> = verdicts
        .iter()
        .filter(|(_, &abnormal)| !abnormal)
        .map(|(id, _)| id.clone())
        .collect();

    Ok(DiagnosisContext {
        anomaly: event.clone(),
        explored_paths,
        abnormal_metrics,
        normal_metrics,
        experience_texts,
        tool_findings,
        created_cross_edges,
        metric_stats: metric_stats.into_values().collect(),
        rounds_run,
        adf_errors,
    })
}

/// One bounded traversal round from `frontier`. Newly reached vertices are
/// returned in admission order (by depth layer, then ascending id); metric
/// vertices gate the walk and do not pass traversal through this round.
fn bfs_round(
    graph: &ExperienceGraph,
    frontier: &BTreeSet<VertexId>,
    parent: &mut BTreeMap<VertexId, Option<VertexId>>,
    limits: &ExpandLimits,
) -> Vec<VertexId> {
    let mut admitted = frontier.len();
    let mut current: Vec<VertexId> = frontier.iter().cloned().collect();
    let mut new_vertices = Vec::new();
    for _ in 0..limits.max_depth {
        if current.is_empty() || admitted >= limits.max_vertices {
            break;
        }
        let mut candidates: BTreeMap<VertexId, VertexId> = BTreeMap::new();
        for v in &current {
            for (neighbor, weight) in graph.adjacent(v) {
                if weight >= limits.min_edge_weight
                    && !parent.contains_key(&neighbor)
                    && !candidates.contains_key(&neighbor)
                {
                    candidates.insert(neighbor, v.clone());
                }
            }
        }
        let mut next_layer = Vec::new();
        for (candidate, via) in candidates {
            if admitted >= limits.max_vertices {
                break;
            }
            parent.insert(candidate.clone(), Some(via));
            admitted += 1;
            let gates = graph
                .vertex(&candidate)
                .map(|v| v.kind() == VertexKind::Metric)
                .unwrap_or(true);
            if !gates {
                next_layer.push(candidate.clone());
            }
            new_vertices.push(candidate);
        }
        current = next_layer;
    }
    new_vertices
}

fn path_to(parent: &BTreeMap<VertexId, Option<VertexId>>, v: &VertexId) -> Vec<VertexId> {
    let mut path = vec![v.clone()];
    let mut cursor = v.clone();
    while let Some(Some(p)) = parent.get(&cursor) {
        path.push(p.clone());
        cursor = p.clone();
    }
    path.reverse();
    path
}

fn unavailable_tool(tool_id: &str, reason: &str) -> ToolFindings {
    ToolFindings {
        tool_id: tool_id.to_owned(),
        items: vec![FindingItem {
            severity: Severity::Warn,
            message: format!("{reason}; continuing without {tool_id}"),
            evidence: Vec::new(),
        }],
    }
}

fn screen_metric(
    store: &MetricStore,
    metric_id: &str,
    fired_at: Timestamp,
    cfg: &EvolutionConfig,
) -> Result<(AdfResult, MetricWindowStats), String> {
    let t0 = fired_at - Timestamp::from(cfg.screen_window_seconds);
    let window = store
        .get_window(metric_id, t0, fired_at)
        .map_err(|e| e.to_string())?;
    if window.len() < 2 {
        return Err(format!(
            "insufficient data in screening window: {} points",
            window.len()
        ));
    }
    let values: Vec<Value> = window.iter().map(|p| p.value).collect();
    let last_point = window.last().expect("non-empty window");
    let result = adf::evaluate(&values, last_point.value, last_point.ts, window, &cfg.adf)
        .map_err(|e| e.to_string())?;
    let mut min = Value::INFINITY;
    let mut max = Value::NEG_INFINITY;
    let mut sum = 0.0;
    for v in &values {
        min = min.min(*v);
        max = max.max(*v);
        sum += v;
    }
    let stats = MetricWindowStats {
        metric_id: metric_id.to_owned(),
        window: (t0, fired_at),
        min,
        max,
        avg: sum / values.len() as Value,
        last: last_point.value,
        count: values.len(),
    };
    Ok((result, stats))
}

/// Create or reinforce evolution cross-edges between co-abnormal fragments.
///
/// A pair without any relevance link gets a fresh evolution edge (smaller id
/// to larger, weight = increment). An existing evolution edge gains the
/// increment. Manual and enrichment edges are left untouched and block a
/// parallel evolution edge. Returns the edges created or updated.
pub fn reinforce_cross_edges(
    graph: &mut ExperienceGraph,
    co_abnormal: &[(VertexId, VertexId)],
    increment: Value,
) -> Result<Vec<Edge>, GraphError> {
    let mut touched = Vec::new();
    for (a, b) in co_abnormal {
        if !graph.contains_vertex(a) {
            return Err(GraphError::DanglingEndpoint(a.clone()));
        }
        if !graph.contains_vertex(b) {
            return Err(GraphError::DanglingEndpoint(b.clone()));
        }
        let existing = graph
            .edge_between(a, Relation::Relevance, b)
            .map(|(attrs, forward)| (attrs.created_by, attrs.weight, forward));
        match existing {
            Some((EdgeOrigin::Evolution, weight, forward)) => {
                let (src, dst) = if forward { (a, b) } else { (b, a) };
                graph.upsert_edge(
                    src,
                    Relation::Relevance,
                    dst,
                    EdgeAttrs::new(weight + increment, EdgeOrigin::Evolution),
                )?;
                touched.push(Edge {
                    src: src.clone(),
                    relation: Relation::Relevance,
                    dst: dst.clone(),
                    attributes: graph
                        .edge(src, Relation::Relevance, dst)
                        .expect("just updated")
                        .clone(),
                });
            }
            Some(_) => {}
            None => {
                let (src, dst) = if a < b { (a, b) } else { (b, a) };
                graph.upsert_edge(
                    src,
                    Relation::Relevance,
                    dst,
                    EdgeAttrs::new(increment, EdgeOrigin::Evolution),
                )?;
                touched.push(Edge {
                    src: src.clone(),
                    relation: Relation::Relevance,
                    dst: dst.clone(),
                    attributes: graph
                        .edge(src, Relation::Relevance, dst)
                        .expect("just inserted")
                        .clone(),
                });
            }
        }
    }
    Ok(touched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Vertex;
    use crate::store::DatabaseKind;
    use std::collections::BTreeSet;

    fn tag_vertex(id: &str) -> Vertex {
        Vertex {
            id: VertexId::new(id),
            database_tags: BTreeSet::from([DatabaseKind::Generic]),
            payload: VertexPayload::Tag {
                label: id.to_owned(),
            },
        }
    }

    #[test]
    fn reinforce_creates_then_accumulates() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag_vertex("a")).unwrap();
        g.upsert_vertex(tag_vertex("b")).unwrap();
        let pair = vec![(VertexId::new("a"), VertexId::new("b"))];
        let first = reinforce_cross_edges(&mut g, &pair, 1.0).unwrap();
        assert_eq!(first.len(), 1);
        assert_eq!(first[0].attributes.weight, 1.0);
        assert_eq!(first[0].attributes.created_by, EdgeOrigin::Evolution);
        let second = reinforce_cross_edges(&mut g, &pair, 1.0).unwrap();
        assert_eq!(second[0].attributes.weight, 2.0);
        // Reversed pair resolves to the same edge.
        let reversed = vec![(VertexId::new("b"), VertexId::new("a"))];
        let third = reinforce_cross_edges(&mut g, &reversed, 1.0).unwrap();
        assert_eq!(third[0].attributes.weight, 3.0);
    }

    #[test]
    fn manual_edge_blocks_parallel_evolution_edge() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag_vertex("a")).unwrap();
        g.upsert_vertex(tag_vertex("b")).unwrap();
        g.upsert_edge(
            &VertexId::new("a"),
            Relation::Relevance,
            &VertexId::new("b"),
            EdgeAttrs::new(1.0, EdgeOrigin::Manual),
        )
        .unwrap();
        let touched =
            reinforce_cross_edges(&mut g, &[(VertexId::new("a"), VertexId::new("b"))], 1.0)
                .unwrap();
        assert!(touched.is_empty());
        let attrs = g
            .edge(
                &VertexId::new("a"),
                Relation::Relevance,
                &VertexId::new("b"),
            )
            .unwrap();
        assert_eq!(attrs.weight, 1.0);
        assert_eq!(attrs.created_by, EdgeOrigin::Manual);
    }

    #[test]
    fn reinforce_rejects_dangling_endpoints() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag_vertex("a")).unwrap();
        assert!(matches!(
            reinforce_cross_edges(&mut g, &[(VertexId::new("a"), VertexId::new("zz"))], 1.0),
            Err(GraphError::DanglingEndpoint(_))
        ));
    }
}
