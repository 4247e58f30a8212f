//! Shared fixtures: the two-fragment graph (log sync + redo allocation,
//! linked through shared tag vertices) and merged simulator data that makes
//! both fragments' key metrics abnormal.

use std::collections::BTreeSet;

use omx_core::anomaly::{detect, AnomalyEvent, AnomalyModel};
use omx_core::graph::{
    EdgeAttrs, EdgeOrigin, ExperienceGraph, Relation, Vertex, VertexId, VertexPayload,
};
use omx_core::seeds;
use omx_core::simulate;
use omx_core::store::{DatabaseKind, MetricStore};
use omx_core::Timestamp;

pub const DRILL_VERTEX: &str = "exp:REDO_ALLOCATION:drill";

/// The two fixture models.
pub fn two_fragment_models() -> Vec<AnomalyModel> {
    seeds::seed_models()
        .into_iter()
        .filter(|m| m.id == "LOG_FILE_SYNC" || m.id == "REDO_ALLOCATION")
        .collect()
}

/// Graph of the two fragments without enrichment: the fragments touch only
/// through shared tag vertices. A drill-down experience vertex hangs off the
/// redo buffer metric alone, so it is reachable only through that metric.
pub fn fixture_graph(models: &[AnomalyModel]) -> ExperienceGraph {
    let mut graph = ExperienceGraph::init_from_models(models).expect("fixture builds");
    graph
        .upsert_vertex(Vertex {
            id: VertexId::new(DRILL_VERTEX),
            database_tags: BTreeSet::from([DatabaseKind::Oracle]),
            payload: VertexPayload::Experience {
                text: "Drill-down: correlate redo buffer waits with log switch timing before resizing. Candidate cause: LOW REDO FILE SIZE.".to_owned(),
                source: "drill".to_owned(),
            },
        })
        .unwrap();
    graph
        .upsert_edge(
            &VertexId::new(DRILL_VERTEX),
            Relation::Diagnosis,
            &VertexId::new("metric:redo_buffer_busy"),
            EdgeAttrs::new(1.0, EdgeOrigin::Manual),
        )
        .unwrap();
    graph
}

/// Merged store: log_sync_delay plus redo_surge data for one seed, sharing
/// the generation epoch, so the log-sync wait and the redo buffer metric are
/// abnormal in the same window. Returns the suggested detection instant.
pub fn merged_store(seed: u64) -> (MetricStore, Timestamp) {
    let scenarios = seeds::seed_scenarios();
    let mut store = MetricStore::new();
    let mut detect_at = 0;
    for name in ["log_sync_delay", "redo_surge"] {
        let scenario = scenarios.iter().find(|s| s.name == name).unwrap();
        let (series_set, _) = simulate::generate(scenario, seed, 7200, 30).unwrap();
        for series in series_set {
            store.insert_series(series);
        }
        detect_at = simulate::suggested_detect_time(scenario, 7200);
    }
    (store, detect_at)
}

/// Detect on the merged store and return the log-sync event.
pub fn log_sync_event(models: &[AnomalyModel], store: &MetricStore, at: Timestamp) -> AnomalyEvent {
    let outcome = detect(models, store, at);
    outcome
        .events
        .into_iter()
        .find(|e| e.model_id == "LOG_FILE_SYNC")
        .expect("log sync event fires on the merged fixture")
}

/// Independent breadth-first oracle over the raw edge list (both directions,
/// weight-filtered), returning hop distances from the start vertex.
pub fn bfs_distances(
    graph: &ExperienceGraph,
    start: &VertexId,
    min_weight: f64,
) -> std::collections::BTreeMap<VertexId, u32> {
    use std::collections::{BTreeMap, VecDeque};
    let mut adjacency: BTreeMap<&VertexId, Vec<&VertexId>> = BTreeMap::new();
    let edges: Vec<_> = graph.edges().collect();
    for edge in &edges {
        if edge.attributes.weight >= min_weight {
            adjacency.entry(&edge.src).or_default().push(&edge.dst);
            adjacency.entry(&edge.dst).or_default().push(&edge.src);
        }
    }
    let mut dist = BTreeMap::new();
    dist.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for n in adjacency.get(&v).into_iter().flatten() {
            if !dist.contains_key(*n) {
                dist.insert((*n).clone(), d + 1);
                queue.push_back((*n).clone());
            }
        }
    }
    dist
}
