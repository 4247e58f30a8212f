//! Heterogeneous experience graph.
//!
//! Vertices carry O&M knowledge (triggers, metrics, experience text, tools,
//! tags, auxiliary attributes); directed edges relate them through four
//! relations. The store is embedded and in-memory with canonical file
//! persistence, and exposes exactly the query subset the diagnosis pipeline
//! needs: localize, expand, and metric aggregation.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anomaly::AnomalyModel;
use crate::numeric;
use crate::store::{DatabaseKind, MetricStore};
use crate::{Timestamp, Value};

/// Identifier of a graph vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub String);

impl VertexId {
    pub fn new(id: impl Into<String>) -> Self {
        VertexId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_owned())
    }
}

/// The six vertex kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Trigger,
    Metric,
    Experience,
    Tool,
    Tag,
    Auxiliary,
}

impl std::fmt::Display for VertexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VertexKind::Trigger => "trigger",
            VertexKind::Metric => "metric",
            VertexKind::Experience => "experience",
            VertexKind::Tool => "tool",
            VertexKind::Tag => "tag",
            VertexKind::Auxiliary => "auxiliary",
        };
        f.write_str(s)
    }
}

/// Kind-specific vertex content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum VertexPayload {
    Trigger {
        model_id: String,
    },
    Metric {
        metric_id: String,
        unit: String,
    },
    Experience {
        text: String,
        source: String,
    },
    Tool {
        tool_id: String,
    },
    Tag {
        label: String,
    },
    Auxiliary {
        attributes: BTreeMap<String, String>,
    },
}

impl VertexPayload {
    pub fn kind(&self) -> VertexKind {
        match self {
            VertexPayload::Trigger { .. } => VertexKind::Trigger,
            VertexPayload::Metric { .. } => VertexKind::Metric,
            VertexPayload::Experience { .. } => VertexKind::Experience,
            VertexPayload::Tool { .. } => VertexKind::Tool,
            VertexPayload::Tag { .. } => VertexKind::Tag,
            VertexPayload::Auxiliary { .. } => VertexKind::Auxiliary,
        }
    }
}

/// One graph vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub database_tags: BTreeSet<DatabaseKind>,
    #[serde(flatten)]
    pub payload: VertexPayload,
}

impl Vertex {
    pub fn kind(&self) -> VertexKind {
        self.payload.kind()
    }
}

/// The four edge relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Containment,
    Relevance,
    Diagnosis,
    Synonym,
}

/// Who created an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrigin {
    Manual,
    Enrichment,
    Evolution,
}

/// Edge attributes: a weight and provenance, extensible with extra keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAttrs {
    pub weight: Value,
    pub created_by: EdgeOrigin,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl EdgeAttrs {
    pub fn new(weight: Value, created_by: EdgeOrigin) -> Self {
        Self {
            weight,
            created_by,
            extra: BTreeMap::new(),
        }
    }
}

/// A directed edge triplet plus attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: VertexId,
    pub relation: Relation,
    pub dst: VertexId,
    pub attributes: EdgeAttrs,
}

/// Traversal bounds for [`ExperienceGraph::expand`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandLimits {
    pub max_depth: u32,
    pub max_vertices: usize,
    pub min_edge_weight: Value,
}

impl Default for ExpandLimits {
    fn default() -> Self {
        Self {
            max_depth: 3,
            max_vertices: 64,
            min_edge_weight: 0.0,
        }
    }
}

/// Conjunctive vertex filter for [`ExperienceGraph::localize`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalizeQuery {
    pub kinds: Option<BTreeSet<VertexKind>>,
    /// Vertex must be linked to a tag vertex for every label listed.
    pub tag_labels: Option<BTreeSet<String>>,
    /// Matches vertices tagged with the database or with `Generic`.
    pub database: Option<DatabaseKind>,
    pub id_prefix: Option<String>,
}

/// Result of an upsert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsert {
    Inserted,
    Updated,
}

impl Upsert {
    pub fn inserted(self) -> bool {
        self == Upsert::Inserted
    }
}

/// One entry of the unified metric view produced by metric aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricViewEntry {
    pub metric_id: String,
    pub unit: String,
    /// Every metric vertex contributing this id, ascending.
    pub provenance: Vec<VertexId>,
}

/// Per-kind vertex counts plus edge totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub vertices: BTreeMap<String, usize>,
    pub vertex_total: usize,
    pub edges: BTreeMap<String, usize>,
    pub edge_total: usize,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("dangling endpoint: {0}")]
    DanglingEndpoint(VertexId),
    #[error("synonym edges may only link two tag vertices: {src} -> {dst}")]
    SynonymKindViolation { src: VertexId, dst: VertexId },
    #[error("self loop on {0}")]
    SelfLoop(VertexId),
    #[error("vertex {id} cannot change kind from {from} to {to}")]
    KindChange {
        id: VertexId,
        from: VertexKind,
        to: VertexKind,
    },
    #[error("edge weight must be finite and non-negative, got {0}")]
    InvalidWeight(Value),
    #[error("duplicate model id: {0}")]
    DuplicateModelId(String),
    #[error("unknown seed vertex: {0}")]
    UnknownSeed(VertexId),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt graph file: {0}")]
    CorruptGraphFile(String),
}

type EdgeKey = (VertexId, Relation, VertexId);

/// Canonical file form of a graph.
#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    version: u32,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

const GRAPH_FILE_VERSION: u32 = 1;

/// Embedded adjacency store over the experience graph.
#[derive(Debug, Clone, Default)]
pub struct ExperienceGraph {
    vertices: BTreeMap<VertexId, Vertex>,
    edges: BTreeMap<EdgeKey, EdgeAttrs>,
    out_edges: BTreeMap<VertexId, BTreeSet<EdgeKey>>,
    in_edges: BTreeMap<VertexId, BTreeSet<EdgeKey>>,
}

impl PartialEq for ExperienceGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl ExperienceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, id: &VertexId) -> Option<&Vertex> {
        self.vertices.get(id)
    }

    pub fn contains_vertex(&self, id: &VertexId) -> bool {
        self.vertices.contains_key(id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|((src, relation, dst), attrs)| Edge {
            src: src.clone(),
            relation: *relation,
            dst: dst.clone(),
            attributes: attrs.clone(),
        })
    }

    pub fn edge(&self, src: &VertexId, relation: Relation, dst: &VertexId) -> Option<&EdgeAttrs> {
        self.edges.get(&(src.clone(), relation, dst.clone()))
    }

    /// Any edge between the pair under `relation`, in either direction.
    pub fn edge_between(
        &self,
        a: &VertexId,
        relation: Relation,
        b: &VertexId,
    ) -> Option<(&EdgeAttrs, bool)> {
        if let Some(attrs) = self.edge(a, relation, b) {
            return Some((attrs, true));
        }
        self.edge(b, relation, a).map(|attrs| (attrs, false))
    }

    /// Insert or update a vertex. A vertex never changes kind.
    pub fn upsert_vertex(&mut self, vertex: Vertex) -> Result<Upsert, GraphError> {
        if let Some(existing) = self.vertices.get(&vertex.id) {
            if existing.kind() != vertex.kind() {
                return Err(GraphError::KindChange {
                    id: vertex.id.clone(),
                    from: existing.kind(),
                    to: vertex.kind(),
                });
            }
            self.vertices.insert(vertex.id.clone(), vertex);
            Ok(Upsert::Updated)
        } else {
            self.vertices.insert(vertex.id.clone(), vertex);
            Ok(Upsert::Inserted)
        }
    }

    /// Insert or update an edge. Updates overwrite the weight and merge extra
    /// attributes but preserve the original `created_by`.
    pub fn upsert_edge(
        &mut self,
        src: &VertexId,
        relation: Relation,
        dst: &VertexId,
        attrs: EdgeAttrs,
    ) -> Result<Upsert, GraphError> {
        if src == dst {
            return Err(GraphError::SelfLoop(src.clone()));
        }
        if !attrs.weight.is_finite() || attrs.weight < 0.0 {
            return Err(GraphError::InvalidWeight(attrs.weight));
        }
        let src_vertex = self
            .vertices
            .get(src)
            .ok_or_else(|| GraphError::DanglingEndpoint(src.clone()))?;
        let dst_vertex = self
            .vertices
            .get(dst)
            .ok_or_else(|| GraphError::DanglingEndpoint(dst.clone()))?;
        if relation == Relation::Synonym
            && (src_vertex.kind() != VertexKind::Tag || dst_vertex.kind() != VertexKind::Tag)
        {
            return Err(GraphError::SynonymKindViolation {
                src: src.clone(),
                dst: dst.clone(),
            });
        }
        let key = (src.clone(), relation, dst.clone());
        if let Some(existing) = self.edges.get_mut(&key) {
            existing.weight = attrs.weight;
            existing.extra.extend(attrs.extra);
            Ok(Upsert::Updated)
        } else {
            self.edges.insert(key.clone(), attrs);
            self.out_edges
                .entry(src.clone())
                .or_default()
                .insert(key.clone());
            self.in_edges.entry(dst.clone()).or_default().insert(key);
            Ok(Upsert::Inserted)
        }
    }

    /// Neighbors in both directions with the strongest edge weight linking
    /// the pair, in ascending id order.
    pub fn adjacent(&self, id: &VertexId) -> BTreeMap<VertexId, Value> {
        let mut out: BTreeMap<VertexId, Value> = BTreeMap::new();
        if let Some(keys) = self.out_edges.get(id) {
            for key in keys {
                let w = self.edges[key].weight;
                let entry = out.entry(key.2.clone()).or_insert(w);
                *entry = entry.max(w);
            }
        }
        if let Some(keys) = self.in_edges.get(id) {
            for key in keys {
                let w = self.edges[key].weight;
                let entry = out.entry(key.0.clone()).or_insert(w);
                *entry = entry.max(w);
            }
        }
        out
    }

    /// Build a graph from anomaly models: one trigger per model, one metric
    /// vertex per declared metric linked metric→trigger, experience under
    /// containment, tools under relevance, and tag vertices annotating the
    /// vertices that declare them.
    pub fn init_from_models(models: &[AnomalyModel]) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for model in models {
            if !seen.insert(&model.id) {
                return Err(GraphError::DuplicateModelId(model.id.clone()));
            }
        }
        let mut graph = Self::new();
        for model in models {
            let db = model.database;
            let trigger_id = VertexId::new(&model.trigger_vertex);
            graph.upsert_vertex(Vertex {
                id: trigger_id.clone(),
                database_tags: BTreeSet::from([db]),
                payload: VertexPayload::Trigger {
                    model_id: model.id.clone(),
                },
            })?;
            for decl in &model.metrics {
                let metric_id = VertexId::new(format!("metric:{}", decl.metric_id));
                // Shared metric vertices accumulate database tags.
                let mut tags = graph
                    .vertex(&metric_id)
                    .map(|v| v.database_tags.clone())
                    .unwrap_or_default();
                tags.insert(db);
                graph.upsert_vertex(Vertex {
                    id: metric_id.clone(),
                    database_tags: tags,
                    payload: VertexPayload::Metric {
                        metric_id: decl.metric_id.clone(),
                        unit: decl.unit.clone(),
                    },
                })?;
                graph.upsert_edge(
                    &metric_id,
                    Relation::Relevance,
                    &trigger_id,
                    EdgeAttrs::new(1.0, EdgeOrigin::Manual),
                )?;
                for label in &decl.tags {
                    graph.annotate_with_tag(&metric_id, label, db)?;
                }
            }
            for (idx, exp) in model.experience.iter().enumerate() {
                let exp_id = VertexId::new(format!("exp:{}:{idx}", model.id));
                graph.upsert_vertex(Vertex {
                    id: exp_id.clone(),
                    database_tags: BTreeSet::from([db]),
                    payload: VertexPayload::Experience {
                        text: exp.text.clone(),
                        source: exp.source.clone(),
                    },
                })?;
                graph.upsert_edge(
                    &trigger_id,
                    Relation::Containment,
                    &exp_id,
                    EdgeAttrs::new(1.0, EdgeOrigin::Manual),
                )?;
                for metric in &exp.uses_metrics {
                    let metric_id = VertexId::new(format!("metric:{metric}"));
                    graph.upsert_edge(
                        &exp_id,
                        Relation::Diagnosis,
                        &metric_id,
                        EdgeAttrs::new(1.0, EdgeOrigin::Manual),
                    )?;
                }
            }
            for tool in &model.tools {
                let tool_id = VertexId::new(format!("tool:{tool}"));
                graph.upsert_vertex(Vertex {
                    id: tool_id.clone(),
                    database_tags: BTreeSet::from([db]),
                    payload: VertexPayload::Tool {
                        tool_id: tool.clone(),
                    },
                })?;
                graph.upsert_edge(
                    &trigger_id,
                    Relation::Relevance,
                    &tool_id,
                    EdgeAttrs::new(1.0, EdgeOrigin::Manual),
                )?;
            }
            for label in &model.tags {
                graph.annotate_with_tag(&trigger_id, label, db)?;
            }
        }
        Ok(graph)
    }

    fn annotate_with_tag(
        &mut self,
        vertex: &VertexId,
        label: &str,
        db: DatabaseKind,
    ) -> Result<(), GraphError> {
        let tag_id = VertexId::new(format!("tag:{label}"));
        let mut tags = self
            .vertex(&tag_id)
            .map(|v| v.database_tags.clone())
            .unwrap_or_default();
        tags.insert(db);
        self.upsert_vertex(Vertex {
            id: tag_id.clone(),
            database_tags: tags,
            payload: VertexPayload::Tag {
                label: label.to_owned(),
            },
        })?;
        self.upsert_edge(
            vertex,
            Relation::Relevance,
            &tag_id,
            EdgeAttrs::new(1.0, EdgeOrigin::Manual),
        )?;
        Ok(())
    }

    /// Trigger vertex bound to a model id, if present.
    pub fn trigger_for_model(&self, model_id: &str) -> Option<&Vertex> {
        self.vertices
            .values()
            .find(|v| matches!(&v.payload, VertexPayload::Trigger { model_id: m } if m == model_id))
    }

    /// Tag vertex ids adjacent to a vertex (any relation, both directions).
    fn tag_neighbors(&self, id: &VertexId) -> BTreeSet<VertexId> {
        self.adjacent(id)
            .keys()
            .filter(|n| {
                self.vertices
                    .get(n)
                    .map(|v| v.kind() == VertexKind::Tag)
                    .unwrap_or(false)
            })
            .cloned()
            .collect()
    }

    /// Tag labels attached to a vertex.
    pub fn tag_labels(&self, id: &VertexId) -> BTreeSet<String> {
        self.tag_neighbors(id)
            .iter()
            .filter_map(|t| match &self.vertices[t].payload {
                VertexPayload::Tag { label } => Some(label.clone()),
                _ => None,
            })
            .collect()
    }

    /// Synonym-closure representative per tag vertex (union-find over
    /// synonym edges; the representative is the smallest id in the class).
    fn tag_classes(&self) -> BTreeMap<VertexId, VertexId> {
        let tags: Vec<VertexId> = self
            .vertices
            .values()
            .filter(|v| v.kind() == VertexKind::Tag)
            .map(|v| v.id.clone())
            .collect();
        let mut parent: BTreeMap<VertexId, VertexId> =
            tags.iter().map(|t| (t.clone(), t.clone())).collect();

        fn find(parent: &mut BTreeMap<VertexId, VertexId>, x: &VertexId) -> VertexId {
            let p = parent[x].clone();
            if &p == x {
                return p;
            }
            let root = find(parent, &p);
            parent.insert(x.clone(), root.clone());
            root
        }

        for (src, relation, dst) in self.edges.keys() {
            if *relation == Relation::Synonym {
                let a = find(&mut parent, src);
                let b = find(&mut parent, dst);
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent.insert(hi, lo);
                }
            }
        }
        tags.iter()
            .map(|t| {
                let root = find(&mut parent, t);
                (t.clone(), root)
            })
            .collect()
    }

    /// Add relevance edges between vertices that share a tag (up to synonym
    /// equivalence) and between metric vertices with similar statistical
    /// profiles. Idempotent: a pair already linked by a relevance edge in
    /// either direction is skipped.
    pub fn enrich(&mut self, store: &MetricStore, sim_threshold: Value) -> usize {
        let mut added = 0;
        let classes = self.tag_classes();

        // (a) shared tags
        let mut by_class: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        let non_tag: Vec<VertexId> = self
            .vertices
            .values()
            .filter(|v| v.kind() != VertexKind::Tag)
            .map(|v| v.id.clone())
            .collect();
        for id in &non_tag {
            for tag in self.tag_neighbors(id) {
                by_class
                    .entry(classes[&tag].clone())
                    .or_default()
                    .insert(id.clone());
            }
        }
        let mut pairs: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
        for members in by_class.values() {
            let members: Vec<&VertexId> = members.iter().collect();
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    pairs.insert((members[i].clone(), members[j].clone()));
                }
            }
        }
        for (a, b) in pairs {
            added += self.add_enrichment_edge(&a, &b) as usize;
        }

        // (b) similar metric profiles
        let metric_vertices: Vec<(VertexId, String)> = self
            .vertices
            .values()
            .filter_map(|v| match &v.payload {
                VertexPayload::Metric { metric_id, .. } => Some((v.id.clone(), metric_id.clone())),
                _ => None,
            })
            .collect();
        for i in 0..metric_vertices.len() {
            for j in (i + 1)..metric_vertices.len() {
                let (va, ma) = &metric_vertices[i];
                let (vb, mb) = &metric_vertices[j];
                let sim = profile_similarity(store, ma, mb);
                if sim >= sim_threshold {
                    added += self.add_enrichment_edge(va, vb) as usize;
                }
            }
        }
        added
    }

    fn add_enrichment_edge(&mut self, a: &VertexId, b: &VertexId) -> bool {
        if self.edge_between(a, Relation::Relevance, b).is_some() {
            return false;
        }
        let (src, dst) = if a < b { (a, b) } else { (b, a) };
        self.upsert_edge(
            src,
            Relation::Relevance,
            dst,
            EdgeAttrs::new(1.0, EdgeOrigin::Enrichment),
        )
        .expect("endpoints exist");
        true
    }

    /// Conjunctive vertex filter; result ascending by id.
    pub fn localize(&self, query: &LocalizeQuery) -> Vec<VertexId> {
        self.vertices
            .values()
            .filter(|v| {
                if let Some(kinds) = &query.kinds {
                    if !kinds.contains(&v.kind()) {
                        return false;
                    }
                }
                if let Some(db) = &query.database {
                    if !v.database_tags.contains(db)
                        && !v.database_tags.contains(&DatabaseKind::Generic)
                    {
                        return false;
                    }
                }
                if let Some(prefix) = &query.id_prefix {
                    if !v.id.as_str().starts_with(prefix.as_str()) {
                        return false;
                    }
                }
                if let Some(labels) = &query.tag_labels {
                    let have = self.tag_labels(&v.id);
                    if !labels.iter().all(|l| have.contains(l)) {
                        return false;
                    }
                }
                true
            })
            .map(|v| v.id.clone())
            .collect()
    }

    /// Breadth-first closure over edges (both directions) with weight at
    /// least `min_edge_weight`, stopping at `max_depth` and truncating each
    /// layer in ascending id order once `max_vertices` is reached. The
    /// result is the induced subgraph over the admitted set; seeds are
    /// always included.
    pub fn expand(
        &self,
        seeds: &BTreeSet<VertexId>,
        limits: &ExpandLimits,
    ) -> Result<ExperienceGraph, GraphError> {
        for seed in seeds {
            if !self.vertices.contains_key(seed) {
                return Err(GraphError::UnknownSeed(seed.clone()));
            }
        }
        let mut admitted: BTreeSet<VertexId> = seeds.clone();
        let mut frontier: BTreeSet<VertexId> = seeds.clone();
        let mut depth = 0;
        while depth < limits.max_depth
            && !frontier.is_empty()
            && admitted.len() < limits.max_vertices
        {
            let mut candidates: BTreeSet<VertexId> = BTreeSet::new();
            for v in &frontier {
                for (neighbor, weight) in self.adjacent(v) {
                    if weight >= limits.min_edge_weight && !admitted.contains(&neighbor) {
                        candidates.insert(neighbor);
                    }
                }
            }
            let mut next = BTreeSet::new();
            for cand in candidates {
                if admitted.len() >= limits.max_vertices {
                    break;
                }
                admitted.insert(cand.clone());
                next.insert(cand);
            }
            frontier = next;
            depth += 1;
        }
        Ok(self.induced(&admitted))
    }

    /// Induced subgraph over a vertex set.
    pub fn induced(&self, ids: &BTreeSet<VertexId>) -> ExperienceGraph {
        let mut sub = ExperienceGraph::new();
        for id in ids {
            if let Some(v) = self.vertices.get(id) {
                sub.upsert_vertex(v.clone()).expect("fresh graph");
            }
        }
        for ((src, relation, dst), attrs) in &self.edges {
            if ids.contains(src) && ids.contains(dst) {
                sub.upsert_edge(src, *relation, dst, attrs.clone())
                    .expect("endpoints admitted");
            }
        }
        sub
    }

    /// Deduplicated metric view over this (sub)graph's metric vertices,
    /// ascending by metric id.
    pub fn aggregate_metrics(&self) -> Vec<MetricViewEntry> {
        let mut view: BTreeMap<String, MetricViewEntry> = BTreeMap::new();
        for v in self.vertices.values() {
            if let VertexPayload::Metric { metric_id, unit } = &v.payload {
                let entry = view
                    .entry(metric_id.clone())
                    .or_insert_with(|| MetricViewEntry {
                        metric_id: metric_id.clone(),
                        unit: unit.clone(),
                        provenance: Vec::new(),
                    });
                entry.provenance.push(v.id.clone());
            }
        }
        let mut entries: Vec<MetricViewEntry> = view.into_values().collect();
        for e in &mut entries {
            e.provenance.sort();
        }
        entries
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats {
            vertex_total: self.vertices.len(),
            edge_total: self.edges.len(),
            ..GraphStats::default()
        };
        for v in self.vertices.values() {
            *stats.vertices.entry(v.kind().to_string()).or_insert(0) += 1;
        }
        for (_, relation, _) in self.edges.keys() {
            let name = match relation {
                Relation::Containment => "containment",
                Relation::Relevance => "relevance",
                Relation::Diagnosis => "diagnosis",
                Relation::Synonym => "synonym",
            };
            *stats.edges.entry(name.to_owned()).or_insert(0) += 1;
        }
        stats
    }

    /// Canonical serialization: sorted vertices, then sorted edges. A second
    /// save of a loaded graph is byte-identical.
    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let file = GraphFile {
            version: GRAPH_FILE_VERSION,
            vertices: self.vertices.values().cloned().collect(),
            edges: self.edges().collect(),
        };
        let mut bytes = serde_json::to_vec(&file).expect("graph serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_canonical_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_slice(bytes)
            .map_err(|e| GraphError::CorruptGraphFile(e.to_string()))?;
        if file.version != GRAPH_FILE_VERSION {
            return Err(GraphError::CorruptGraphFile(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let mut graph = Self::new();
        for v in file.vertices {
            graph
                .upsert_vertex(v)
                .map_err(|e| GraphError::CorruptGraphFile(e.to_string()))?;
        }
        for e in file.edges {
            graph
                .upsert_edge(&e.src, e.relation, &e.dst, e.attributes)
                .map_err(|e| GraphError::CorruptGraphFile(e.to_string()))?;
        }
        Ok(graph)
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    /// Check every structural invariant; used by property tests.
    pub fn validate(&self) -> Result<(), GraphError> {
        for ((src, relation, dst), attrs) in &self.edges {
            if src == dst {
                return Err(GraphError::SelfLoop(src.clone()));
            }
            let sv = self
                .vertices
                .get(src)
                .ok_or_else(|| GraphError::DanglingEndpoint(src.clone()))?;
            let dv = self
                .vertices
                .get(dst)
                .ok_or_else(|| GraphError::DanglingEndpoint(dst.clone()))?;
            if *relation == Relation::Synonym
                && (sv.kind() != VertexKind::Tag || dv.kind() != VertexKind::Tag)
            {
                return Err(GraphError::SynonymKindViolation {
                    src: src.clone(),
                    dst: dst.clone(),
                });
            }
            if !attrs.weight.is_finite() || attrs.weight < 0.0 {
                return Err(GraphError::InvalidWeight(attrs.weight));
            }
        }
        Ok(())
    }
}

/// Pearson correlation of two metric profiles resampled onto a common
/// one-minute grid over their overlapping time range. Constant profiles are
/// similar only when identical.
pub fn profile_similarity(store: &MetricStore, a: &str, b: &str) -> Value {
    let (Some(sa), Some(sb)) = (store.series(a), store.series(b)) else {
        return 0.0;
    };
    if sa.points.is_empty() || sb.points.is_empty() {
        return 0.0;
    }
    let start = sa.points[0].ts.max(sb.points[0].ts);
    let end = sa.points[sa.points.len() - 1]
        .ts
        .min(sb.points[sb.points.len() - 1].ts);
    if end <= start {
        return 0.0;
    }
    let grid_start = start + (60 - start.rem_euclid(60)) % 60;
    let mut ga = Vec::new();
    let mut gb = Vec::new();
    let mut t = grid_start;
    while t <= end {
        ga.push(value_at(sa, t));
        gb.push(value_at(sb, t));
        t += 60;
    }
    if ga.len() < 2 {
        return 0.0;
    }
    match numeric::pearson(&ga, &gb) {
        Some(r) => r,
        None => {
            if ga == gb {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn value_at(series: &crate::store::MetricSeries, t: Timestamp) -> Value {
    let idx = series.points.partition_point(|p| p.ts <= t);
    if idx == 0 {
        series.points[0].value
    } else {
        series.points[idx - 1].value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use crate::store::IngestFormat;
    use proptest::prelude::*;

    fn tag(id: &str, label: &str) -> Vertex {
        Vertex {
            id: VertexId::new(id),
            database_tags: BTreeSet::from([DatabaseKind::Generic]),
            payload: VertexPayload::Tag {
                label: label.to_owned(),
            },
        }
    }

    fn trigger(id: &str, model: &str) -> Vertex {
        Vertex {
            id: VertexId::new(id),
            database_tags: BTreeSet::from([DatabaseKind::Oracle]),
            payload: VertexPayload::Trigger {
                model_id: model.to_owned(),
            },
        }
    }

    fn metric(id: &str, metric_id: &str) -> Vertex {
        Vertex {
            id: VertexId::new(id),
            database_tags: BTreeSet::from([DatabaseKind::Oracle]),
            payload: VertexPayload::Metric {
                metric_id: metric_id.to_owned(),
                unit: "ms".to_owned(),
            },
        }
    }

    fn rel(weight: f64) -> EdgeAttrs {
        EdgeAttrs::new(weight, EdgeOrigin::Manual)
    }

    #[test]
    fn synonym_between_tags_is_accepted() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("tag:physical_read", "physical_read"))
            .unwrap();
        g.upsert_vertex(tag("tag:disk_read", "disk_read")).unwrap();
        let outcome = g
            .upsert_edge(
                &"tag:physical_read".into(),
                Relation::Synonym,
                &"tag:disk_read".into(),
                rel(1.0),
            )
            .unwrap();
        assert!(outcome.inserted());
    }

    #[test]
    fn synonym_with_non_tag_is_rejected() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("tag:a", "a")).unwrap();
        g.upsert_vertex(metric("metric:m", "m")).unwrap();
        assert!(matches!(
            g.upsert_edge(
                &"tag:a".into(),
                Relation::Synonym,
                &"metric:m".into(),
                rel(1.0)
            ),
            Err(GraphError::SynonymKindViolation { .. })
        ));
    }

    #[test]
    fn edge_reupsert_overwrites_weight_keeps_origin() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("tag:a", "a")).unwrap();
        g.upsert_vertex(tag("tag:b", "b")).unwrap();
        g.upsert_edge(
            &"tag:a".into(),
            Relation::Relevance,
            &"tag:b".into(),
            rel(1.0),
        )
        .unwrap();
        let outcome = g
            .upsert_edge(
                &"tag:a".into(),
                Relation::Relevance,
                &"tag:b".into(),
                EdgeAttrs::new(2.0, EdgeOrigin::Evolution),
            )
            .unwrap();
        assert_eq!(outcome, Upsert::Updated);
        let attrs = g
            .edge(&"tag:a".into(), Relation::Relevance, &"tag:b".into())
            .unwrap();
        assert_eq!(attrs.weight, 2.0);
        assert_eq!(attrs.created_by, EdgeOrigin::Manual);
    }

    #[test]
    fn self_loops_and_dangling_endpoints_are_rejected() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("tag:a", "a")).unwrap();
        assert!(matches!(
            g.upsert_edge(
                &"tag:a".into(),
                Relation::Relevance,
                &"tag:a".into(),
                rel(1.0)
            ),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            g.upsert_edge(
                &"tag:a".into(),
                Relation::Relevance,
                &"tag:zz".into(),
                rel(1.0)
            ),
            Err(GraphError::DanglingEndpoint(_))
        ));
    }

    #[test]
    fn init_from_seed_models_builds_expected_fragments() {
        let models = seeds::seed_models();
        let g = ExperienceGraph::init_from_models(&models).unwrap();
        let log_sync = g.trigger_for_model("LOG_FILE_SYNC").unwrap();
        assert_eq!(log_sync.id.as_str(), "trigger:LOG_FILE_SYNC");
        // Trigger + 2 metric vertices + at least one experience vertex.
        let metrics: Vec<&Vertex> = g
            .vertices()
            .filter(|v| {
                v.kind() == VertexKind::Metric
                    && g.edge(&v.id, Relation::Relevance, &log_sync.id).is_some()
            })
            .collect();
        assert_eq!(metrics.len(), 2);
        let experiences = g
            .vertices()
            .filter(|v| {
                v.kind() == VertexKind::Experience
                    && g.edge(&log_sync.id, Relation::Containment, &v.id).is_some()
            })
            .count();
        assert!(experiences >= 1);
        g.validate().unwrap();
    }

    #[test]
    fn empty_model_list_builds_empty_graph() {
        let g = ExperienceGraph::init_from_models(&[]).unwrap();
        assert_eq!(g.vertex_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn shared_tag_produces_single_vertex_with_edges_to_both_fragments() {
        let models = seeds::seed_models();
        let g = ExperienceGraph::init_from_models(&models).unwrap();
        let shared: VertexId = "tag:concurrent transactions".into();
        assert!(g.contains_vertex(&shared));
        let log_sync: VertexId = "trigger:LOG_FILE_SYNC".into();
        let redo: VertexId = "trigger:REDO_ALLOCATION".into();
        assert!(g.edge(&log_sync, Relation::Relevance, &shared).is_some());
        assert!(g.edge(&redo, Relation::Relevance, &shared).is_some());
    }

    #[test]
    fn duplicate_model_id_is_rejected() {
        let models = seeds::seed_models();
        let two = vec![models[0].clone(), models[0].clone()];
        assert!(matches!(
            ExperienceGraph::init_from_models(&two),
            Err(GraphError::DuplicateModelId(_))
        ));
    }

    #[test]
    fn enrich_links_tag_sharers_once() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(trigger("trigger:A", "A")).unwrap();
        g.upsert_vertex(trigger("trigger:B", "B")).unwrap();
        g.upsert_vertex(tag("tag:t", "t")).unwrap();
        g.upsert_edge(
            &"trigger:A".into(),
            Relation::Relevance,
            &"tag:t".into(),
            rel(1.0),
        )
        .unwrap();
        g.upsert_edge(
            &"trigger:B".into(),
            Relation::Relevance,
            &"tag:t".into(),
            rel(1.0),
        )
        .unwrap();
        let store = MetricStore::new();
        assert_eq!(g.enrich(&store, 0.9), 1);
        let attrs = g
            .edge(
                &"trigger:A".into(),
                Relation::Relevance,
                &"trigger:B".into(),
            )
            .expect("canonical direction by id order");
        assert_eq!(attrs.created_by, EdgeOrigin::Enrichment);
        // Idempotent.
        assert_eq!(g.enrich(&store, 0.9), 0);
    }

    #[test]
    fn enrich_counts_synonym_equivalent_tags_as_shared() {
        // Hand-checked fixture: A tagged "physical_read", B tagged
        // "disk_read", the two tags joined by a synonym edge. The synonym
        // closure makes the pair share one tag class, so enrichment links
        // A and B.
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(trigger("trigger:A", "A")).unwrap();
        g.upsert_vertex(trigger("trigger:B", "B")).unwrap();
        g.upsert_vertex(tag("tag:physical_read", "physical_read"))
            .unwrap();
        g.upsert_vertex(tag("tag:disk_read", "disk_read")).unwrap();
        g.upsert_edge(
            &"trigger:A".into(),
            Relation::Relevance,
            &"tag:physical_read".into(),
            rel(1.0),
        )
        .unwrap();
        g.upsert_edge(
            &"trigger:B".into(),
            Relation::Relevance,
            &"tag:disk_read".into(),
            rel(1.0),
        )
        .unwrap();
        g.upsert_edge(
            &"tag:physical_read".into(),
            Relation::Synonym,
            &"tag:disk_read".into(),
            rel(1.0),
        )
        .unwrap();
        let store = MetricStore::new();
        assert_eq!(g.enrich(&store, 0.9), 1);
        assert!(g
            .edge(
                &"trigger:A".into(),
                Relation::Relevance,
                &"trigger:B".into()
            )
            .is_some());
    }

    #[test]
    fn enrich_links_identical_metric_profiles() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(metric("metric:a", "a")).unwrap();
        g.upsert_vertex(metric("metric:b", "b")).unwrap();
        let mut store = MetricStore::new();
        let mut lines = String::new();
        for i in 0..20i64 {
            let v = (i % 7) as f64 + 1.0;
            lines.push_str(&format!(
                "{{\"metric_id\":\"a\",\"ts\":{},\"value\":{v}}}\n",
                i * 60
            ));
            lines.push_str(&format!(
                "{{\"metric_id\":\"b\",\"ts\":{},\"value\":{v}}}\n",
                i * 60
            ));
        }
        store.ingest_str(&lines, IngestFormat::Jsonl).unwrap();
        assert_eq!(profile_similarity(&store, "a", "b"), 1.0);
        assert_eq!(g.enrich(&store, 0.99), 1);
        assert!(g
            .edge(&"metric:a".into(), Relation::Relevance, &"metric:b".into())
            .is_some());
    }

    #[test]
    fn constant_profiles_are_similar_only_when_identical() {
        let mut store = MetricStore::new();
        let mut lines = String::new();
        for i in 0..10i64 {
            lines.push_str(&format!(
                "{{\"metric_id\":\"c1\",\"ts\":{},\"value\":5.0}}\n",
                i * 60
            ));
            lines.push_str(&format!(
                "{{\"metric_id\":\"c2\",\"ts\":{},\"value\":7.0}}\n",
                i * 60
            ));
            lines.push_str(&format!(
                "{{\"metric_id\":\"c3\",\"ts\":{},\"value\":5.0}}\n",
                i * 60
            ));
        }
        store.ingest_str(&lines, IngestFormat::Jsonl).unwrap();
        assert_eq!(profile_similarity(&store, "c1", "c2"), 0.0);
        assert_eq!(profile_similarity(&store, "c1", "c3"), 1.0);
    }

    #[test]
    fn localize_filters_conjunctively() {
        let models = seeds::seed_models();
        let g = ExperienceGraph::init_from_models(&models).unwrap();
        let oracle_triggers = g.localize(&LocalizeQuery {
            kinds: Some(BTreeSet::from([VertexKind::Trigger])),
            database: Some(DatabaseKind::Oracle),
            ..LocalizeQuery::default()
        });
        let expected: Vec<VertexId> = vec![
            "trigger:HOT_BLOCK_CONTENTION".into(),
            "trigger:LOGICAL_READ_SURGE".into(),
            "trigger:LOG_FILE_SYNC".into(),
            "trigger:REDO_ALLOCATION".into(),
        ];
        assert_eq!(oracle_triggers, expected);

        let all = g.localize(&LocalizeQuery::default());
        assert_eq!(all.len(), g.vertex_count());

        let none = g.localize(&LocalizeQuery {
            tag_labels: Some(BTreeSet::from(["nonexistent".to_owned()])),
            ..LocalizeQuery::default()
        });
        assert!(none.is_empty());
    }

    #[test]
    fn expand_depth_zero_returns_seeds_only() {
        let models = seeds::seed_models();
        let g = ExperienceGraph::init_from_models(&models).unwrap();
        let seeds_set = BTreeSet::from([VertexId::new("trigger:LOG_FILE_SYNC")]);
        let sub = g
            .expand(
                &seeds_set,
                &ExpandLimits {
                    max_depth: 0,
                    max_vertices: 100,
                    min_edge_weight: 0.0,
                },
            )
            .unwrap();
        assert_eq!(sub.vertex_count(), 1);
    }

    #[test]
    fn expand_chain_and_unknown_seed() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("tag:a", "a")).unwrap();
        g.upsert_vertex(tag("tag:b", "b")).unwrap();
        g.upsert_vertex(tag("tag:c", "c")).unwrap();
        g.upsert_edge(
            &"tag:a".into(),
            Relation::Relevance,
            &"tag:b".into(),
            rel(1.0),
        )
        .unwrap();
        g.upsert_edge(
            &"tag:b".into(),
            Relation::Relevance,
            &"tag:c".into(),
            rel(1.0),
        )
        .unwrap();
        let sub = g
            .expand(
                &BTreeSet::from([VertexId::new("tag:a")]),
                &ExpandLimits {
                    max_depth: 1,
                    max_vertices: 10,
                    min_edge_weight: 0.0,
                },
            )
            .unwrap();
        let ids: Vec<&str> = sub.vertices().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, vec!["tag:a", "tag:b"]);
        assert!(matches!(
            g.expand(
                &BTreeSet::from([VertexId::new("tag:zz")]),
                &ExpandLimits::default()
            ),
            Err(GraphError::UnknownSeed(_))
        ));
    }

    #[test]
    fn expand_star_truncates_by_ascending_id() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("hub", "hub")).unwrap();
        for i in 0..10 {
            let id = format!("n{i:02}");
            g.upsert_vertex(tag(&id, &id)).unwrap();
            g.upsert_edge(
                &"hub".into(),
                Relation::Relevance,
                &id.as_str().into(),
                rel(1.0),
            )
            .unwrap();
        }
        let sub = g
            .expand(
                &BTreeSet::from([VertexId::new("hub")]),
                &ExpandLimits {
                    max_depth: 1,
                    max_vertices: 4,
                    min_edge_weight: 0.0,
                },
            )
            .unwrap();
        let ids: Vec<&str> = sub.vertices().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, vec!["hub", "n00", "n01", "n02"]);
    }

    #[test]
    fn expand_respects_min_edge_weight() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("a", "a")).unwrap();
        g.upsert_vertex(tag("b", "b")).unwrap();
        g.upsert_vertex(tag("c", "c")).unwrap();
        g.upsert_edge(&"a".into(), Relation::Relevance, &"b".into(), rel(0.2))
            .unwrap();
        g.upsert_edge(&"a".into(), Relation::Relevance, &"c".into(), rel(2.0))
            .unwrap();
        let sub = g
            .expand(
                &BTreeSet::from([VertexId::new("a")]),
                &ExpandLimits {
                    max_depth: 1,
                    max_vertices: 10,
                    min_edge_weight: 1.0,
                },
            )
            .unwrap();
        let ids: Vec<&str> = sub.vertices().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "c"]);
    }

    #[test]
    fn aggregate_metrics_dedups_with_provenance() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(metric("metric:x:1", "shared")).unwrap();
        g.upsert_vertex(metric("metric:x:2", "shared")).unwrap();
        g.upsert_vertex(metric("metric:y", "other")).unwrap();
        let view = g.aggregate_metrics();
        assert_eq!(view.len(), 2);
        assert_eq!(view[0].metric_id, "other");
        assert_eq!(view[1].metric_id, "shared");
        assert_eq!(view[1].provenance.len(), 2);

        let empty = ExperienceGraph::new();
        assert!(empty.aggregate_metrics().is_empty());
    }

    #[test]
    fn aggregate_depends_only_on_metric_vertices() {
        // Same metric vertices, different edges and other vertices: the
        // unified view is identical.
        let mut a = ExperienceGraph::new();
        a.upsert_vertex(metric("metric:m1", "m1")).unwrap();
        a.upsert_vertex(metric("metric:m2", "m2")).unwrap();
        let mut b = a.clone();
        b.upsert_vertex(tag("tag:t", "t")).unwrap();
        b.upsert_vertex(trigger("trigger:x", "X")).unwrap();
        b.upsert_edge(
            &"metric:m1".into(),
            Relation::Relevance,
            &"metric:m2".into(),
            rel(1.0),
        )
        .unwrap();
        assert_eq!(a.aggregate_metrics(), b.aggregate_metrics());
    }

    #[test]
    fn expanded_fragments_aggregate_both_metric_families() {
        // Expanding from the log-sync trigger across the tag-shared redo
        // fragment consolidates both fragments' metrics into one view.
        let models = seeds::seed_models();
        let mut g = ExperienceGraph::init_from_models(&models).unwrap();
        g.enrich(&MetricStore::new(), 2.0);
        let sub = g
            .expand(
                &BTreeSet::from([VertexId::new("trigger:LOG_FILE_SYNC")]),
                &ExpandLimits {
                    max_depth: 3,
                    max_vertices: 64,
                    min_edge_weight: 0.0,
                },
            )
            .unwrap();
        let view = sub.aggregate_metrics();
        let ids: Vec<&str> = view.iter().map(|e| e.metric_id.as_str()).collect();
        assert!(ids.contains(&"log_file_sync_wait"), "view: {ids:?}");
        assert!(ids.contains(&"redo_buffer_busy"), "view: {ids:?}");
    }

    #[test]
    fn generic_vertices_match_any_database_filter() {
        let mut g = ExperienceGraph::new();
        g.upsert_vertex(tag("tag:shared", "shared")).unwrap(); // Generic
        g.upsert_vertex(trigger("trigger:ora", "ORA")).unwrap(); // Oracle
        let oracle = g.localize(&LocalizeQuery {
            database: Some(DatabaseKind::Oracle),
            ..LocalizeQuery::default()
        });
        assert_eq!(oracle.len(), 2, "generic knowledge is shared: {oracle:?}");
        let mysql = g.localize(&LocalizeQuery {
            database: Some(DatabaseKind::MySql),
            ..LocalizeQuery::default()
        });
        assert_eq!(mysql, vec![VertexId::new("tag:shared")]);
    }

    #[test]
    fn save_load_round_trip_is_byte_identical() {
        let models = seeds::seed_models();
        let mut g = ExperienceGraph::init_from_models(&models).unwrap();
        g.enrich(&MetricStore::new(), 0.99);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        g.save(&path).unwrap();
        let loaded = ExperienceGraph::load(&path).unwrap();
        assert_eq!(g, loaded);
        let again = dir.path().join("graph2.json");
        loaded.save(&again).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let models = seeds::seed_models();
        let g = ExperienceGraph::init_from_models(&models).unwrap();
        let bytes = g.to_canonical_bytes();
        let truncated = &bytes[..bytes.len() / 2];
        assert!(matches!(
            ExperienceGraph::from_bytes(truncated),
            Err(GraphError::CorruptGraphFile(_))
        ));
    }

    /// Random op sequences keep the structural invariants intact.
    #[derive(Debug, Clone)]
    enum Op {
        Tag(u8),
        Metric(u8),
        Edge(u8, u8, u8),
    }

    fn op_strategy() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0u8..12).prop_map(Op::Tag),
            (0u8..12).prop_map(Op::Metric),
            (0u8..24, 0u8..24, 0u8..4).prop_map(|(a, b, r)| Op::Edge(a, b, r)),
        ]
    }

    proptest! {
        #[test]
        fn invariants_hold_after_random_op_sequences(
            ops in proptest::collection::vec(op_strategy(), 1..60)
        ) {
            let mut g = ExperienceGraph::new();
            for op in ops {
                match op {
                    Op::Tag(i) => {
                        let id = format!("tag:{i}");
                        let _ = g.upsert_vertex(tag(&id, &format!("label{i}")));
                    }
                    Op::Metric(i) => {
                        let id = format!("metric:{i}");
                        let _ = g.upsert_vertex(metric(&id, &format!("m{i}")));
                    }
                    Op::Edge(a, b, r) => {
                        let src = if a < 12 { format!("tag:{a}") } else { format!("metric:{}", a - 12) };
                        let dst = if b < 12 { format!("tag:{b}") } else { format!("metric:{}", b - 12) };
                        let relation = [
                            Relation::Containment,
                            Relation::Relevance,
                            Relation::Diagnosis,
                            Relation::Synonym,
                        ][r as usize];
                        // Errors are expected for invalid ops; the graph must
                        // stay valid either way.
                        let _ = g.upsert_edge(
                            &src.as_str().into(),
                            relation,
                            &dst.as_str().into(),
                            rel(1.0),
                        );
                    }
                }
            }
            prop_assert!(g.validate().is_ok());
        }

        #[test]
        fn expand_is_monotone_in_limits(
            edges in proptest::collection::vec((0u8..14, 0u8..14), 1..40),
            depth in 0u32..4,
            max_vertices in 1usize..15,
        ) {
            let mut g = ExperienceGraph::new();
            for i in 0..14 {
                g.upsert_vertex(tag(&format!("v{i:02}"), &format!("{i}"))).unwrap();
            }
            for (a, b) in edges {
                if a != b {
                    let _ = g.upsert_edge(
                        &format!("v{a:02}").as_str().into(),
                        Relation::Relevance,
                        &format!("v{b:02}").as_str().into(),
                        rel(1.0),
                    );
                }
            }
            let seeds_set = BTreeSet::from([VertexId::new("v00")]);
            let limits = ExpandLimits { max_depth: depth, max_vertices, min_edge_weight: 0.0 };
            let base: BTreeSet<VertexId> =
                g.expand(&seeds_set, &limits).unwrap().vertices().map(|v| v.id.clone()).collect();
            let deeper = ExpandLimits { max_depth: depth + 1, ..limits.clone() };
            let wider = ExpandLimits { max_vertices: max_vertices + 3, ..limits.clone() };
            let deeper_set: BTreeSet<VertexId> =
                g.expand(&seeds_set, &deeper).unwrap().vertices().map(|v| v.id.clone()).collect();
            let wider_set: BTreeSet<VertexId> =
                g.expand(&seeds_set, &wider).unwrap().vertices().map(|v| v.id.clone()).collect();
            prop_assert!(base.is_subset(&deeper_set));
            prop_assert!(base.is_subset(&wider_set));
        }

        #[test]
        fn persistence_round_trips_arbitrary_graphs(
            n_vertices in 1usize..12,
            edges in proptest::collection::vec((0u8..12, 0u8..12, 0.0..5.0f64), 0..30),
        ) {
            let mut g = ExperienceGraph::new();
            for i in 0..n_vertices {
                g.upsert_vertex(metric(&format!("metric:{i}"), &format!("m{i}"))).unwrap();
            }
            for (a, b, w) in edges {
                let (a, b) = (a as usize % n_vertices, b as usize % n_vertices);
                if a != b {
                    let _ = g.upsert_edge(
                        &format!("metric:{a}").as_str().into(),
                        Relation::Relevance,
                        &format!("metric:{b}").as_str().into(),
                        rel(w),
                    );
                }
            }
            let bytes = g.to_canonical_bytes();
            let loaded = ExperienceGraph::from_bytes(&bytes).unwrap();
            prop_assert_eq!(&g, &loaded);
            prop_assert_eq!(bytes, loaded.to_canonical_bytes());
        }
    }
}
