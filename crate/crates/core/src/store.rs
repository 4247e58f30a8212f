//! Categorized metric storage with lazily derived statistics.
//!
//! Raw points are ingested from JSONL or CSV records, kept strictly
//! time-ordered per metric, and reduced to derived statistics only on
//! demand. The store is multi-reader: all queries take `&self`, and the
//! borrow checker serializes writers through `&mut self`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric;
use crate::trend::{classify_trend, TrendClass, TrendConfig, TrendError};
use crate::{Timestamp, Value};

/// Database family a metric or graph vertex belongs to. `Generic` marks
/// knowledge shared by every supported system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatabaseKind {
    Oracle,
    #[serde(rename = "mysql")]
    MySql,
    #[serde(rename = "postgresql")]
    PostgreSql,
    Dm8,
    Generic,
}

impl std::fmt::Display for DatabaseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DatabaseKind::Oracle => "oracle",
            DatabaseKind::MySql => "mysql",
            DatabaseKind::PostgreSql => "postgresql",
            DatabaseKind::Dm8 => "dm8",
            DatabaseKind::Generic => "generic",
        };
        f.write_str(s)
    }
}

/// One timestamped sample of a metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub metric_id: String,
    pub ts: Timestamp,
    pub value: Value,
}

/// A time-ordered series plus its hierarchy metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric_id: String,
    pub database_kind: DatabaseKind,
    /// Hierarchy placement, e.g. `["io", "redo"]`. Never empty.
    pub category_path: Vec<String>,
    pub unit: String,
    /// Strictly increasing in `ts`.
    pub points: Vec<MetricPoint>,
}

/// Kind of derived statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Delta,
    RollingMean,
    Percentile(u8),
    Trend,
}

/// Value of a derived statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatValue {
    Number(Value),
    Trend(TrendClass),
}

impl StatValue {
    pub fn as_number(&self) -> Option<Value> {
        match self {
            StatValue::Number(v) => Some(*v),
            StatValue::Trend(_) => None,
        }
    }

    pub fn as_trend(&self) -> Option<TrendClass> {
        match self {
            StatValue::Trend(t) => Some(*t),
            StatValue::Number(_) => None,
        }
    }
}

/// A lazily computed statistic over one metric window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedStat {
    pub kind: StatKind,
    pub window_seconds: u32,
    pub value: StatValue,
}

/// Addressing scheme for the numeric statistics a detection expression or
/// diagnostic tool may reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StatSpec {
    /// Latest sample at or before the evaluation instant.
    Raw,
    Delta {
        window_seconds: u32,
    },
    Mean {
        window_seconds: u32,
    },
    Percentile {
        p: u8,
        window_seconds: u32,
    },
}

impl std::fmt::Display for StatSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StatSpec::Raw => write!(f, "raw"),
            StatSpec::Delta { window_seconds } => write!(f, "delta[{window_seconds}s]"),
            StatSpec::Mean { window_seconds } => write!(f, "mean[{window_seconds}s]"),
            StatSpec::Percentile { p, window_seconds } => {
                write!(f, "p{p}[{window_seconds}s]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unknown metric: {0}")]
    UnknownMetric(String),
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid stat spec: {0}")]
    InvalidStatSpec(String),
}

impl From<TrendError> for StoreError {
    fn from(e: TrendError) -> Self {
        match e {
            TrendError::InsufficientData { needed, got } => {
                StoreError::InsufficientData { needed, got }
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("non-finite value at line {line}")]
    NonFiniteValue { line: usize },
}

/// Encodings accepted by [`MetricStore::ingest_str`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    metric_id: String,
    ts: Timestamp,
    value: Value,
}

/// Read access to metric windows and statistics, abstracted so detection
/// expressions and tools can run against the store or a test fixture.
pub trait MetricSnapshot {
    fn contains(&self, metric_id: &str) -> bool;
    fn metric_ids(&self) -> Vec<String>;
    fn points(
        &self,
        metric_id: &str,
        t0: Timestamp,
        t1: Timestamp,
    ) -> Result<Vec<MetricPoint>, StoreError>;
    fn stat(&self, metric_id: &str, spec: &StatSpec, at: Timestamp) -> Result<Value, StoreError>;
    fn trend(
        &self,
        metric_id: &str,
        window_seconds: u32,
        at: Timestamp,
    ) -> Result<TrendClass, StoreError>;
}

/// In-memory metric store keyed by metric id.
#[derive(Debug, Clone, Default)]
pub struct MetricStore {
    series: BTreeMap<String, MetricSeries>,
    trend_cfg: TrendConfig,
}

impl MetricStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_trend_config(trend_cfg: TrendConfig) -> Self {
        Self {
            series: BTreeMap::new(),
            trend_cfg,
        }
    }

    pub fn trend_config(&self) -> &TrendConfig {
        &self.trend_cfg
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn series(&self, metric_id: &str) -> Option<&MetricSeries> {
        self.series.get(metric_id)
    }

    pub fn all_series(&self) -> impl Iterator<Item = &MetricSeries> {
        self.series.values()
    }

    /// Create or update the metadata of a series without touching its points.
    pub fn upsert_series_meta(
        &mut self,
        metric_id: &str,
        database_kind: DatabaseKind,
        category_path: Vec<String>,
        unit: &str,
    ) {
        let path = if category_path.is_empty() {
            vec!["general".to_owned()]
        } else {
            category_path
        };
        let entry = self
            .series
            .entry(metric_id.to_owned())
            .or_insert_with(|| MetricSeries {
                metric_id: metric_id.to_owned(),
                database_kind,
                category_path: path.clone(),
                unit: unit.to_owned(),
                points: Vec::new(),
            });
        entry.database_kind = database_kind;
        entry.category_path = path;
        entry.unit = unit.to_owned();
    }

    /// Insert a whole series, replacing points for the same metric id.
    pub fn insert_series(&mut self, series: MetricSeries) {
        self.series.insert(series.metric_id.clone(), series);
    }

    /// Parse and commit encoded records. The call is transactional: any
    /// malformed line rejects the whole batch. Within one batch, points are
    /// sorted on commit and the last value wins for duplicate `(id, ts)`.
    pub fn ingest_str(&mut self, text: &str, format: IngestFormat) -> Result<usize, IngestError> {
        let records = match format {
            IngestFormat::Jsonl => parse_jsonl(text)?,
            IngestFormat::Csv => parse_csv(text)?,
        };
        let count = records.len();
        self.commit(records);
        Ok(count)
    }

    fn commit(&mut self, records: Vec<RawRecord>) {
        let mut staged: BTreeMap<String, Vec<(Timestamp, Value)>> = BTreeMap::new();
        for rec in records {
            staged
                .entry(rec.metric_id)
                .or_default()
                .push((rec.ts, rec.value));
        }
        for (metric_id, mut batch) in staged {
            // Stable sort keeps input order within equal timestamps, so the
            // last occurrence of a duplicate survives the merge below.
            batch.sort_by_key(|(ts, _)| *ts);
            let series = self
                .series
                .entry(metric_id.clone())
                .or_insert_with(|| MetricSeries {
                    metric_id: metric_id.clone(),
                    database_kind: DatabaseKind::Generic,
                    category_path: vec!["general".to_owned()],
                    unit: String::new(),
                    points: Vec::new(),
                });
            let mut merged: BTreeMap<Timestamp, Value> =
                series.points.iter().map(|p| (p.ts, p.value)).collect();
            for (ts, value) in batch {
                merged.insert(ts, value);
            }
            series.points = merged
                .into_iter()
                .map(|(ts, value)| MetricPoint {
                    metric_id: metric_id.clone(),
                    ts,
                    value,
                })
                .collect();
        }
    }

    /// Points with `t0 <= ts <= t1`, in timestamp order.
    pub fn get_window(
        &self,
        metric_id: &str,
        t0: Timestamp,
        t1: Timestamp,
    ) -> Result<&[MetricPoint], StoreError> {
        let series = self
            .series
            .get(metric_id)
            .ok_or_else(|| StoreError::UnknownMetric(metric_id.to_owned()))?;
        let lo = series.points.partition_point(|p| p.ts < t0);
        let hi = series.points.partition_point(|p| p.ts <= t1);
        Ok(&series.points[lo..hi])
    }

    /// Compute one statistic over the window `[t_end - window_seconds, t_end]`.
    pub fn derive_stat(
        &self,
        metric_id: &str,
        kind: StatKind,
        t_end: Timestamp,
        window_seconds: u32,
    ) -> Result<DerivedStat, StoreError> {
        if window_seconds == 0 {
            return Err(StoreError::InvalidStatSpec("window_seconds = 0".into()));
        }
        let window = self.get_window(metric_id, t_end - Timestamp::from(window_seconds), t_end)?;
        let values: Vec<Value> = window.iter().map(|p| p.value).collect();
        let need = |needed: usize| StoreError::InsufficientData {
            needed,
            got: values.len(),
        };
        let value = match kind {
            StatKind::Delta => {
                if values.len() < 2 {
                    return Err(need(2));
                }
                StatValue::Number(values[values.len() - 1] - values[0])
            }
            StatKind::RollingMean => {
                if values.is_empty() {
                    return Err(need(1));
                }
                StatValue::Number(numeric::mean(&values))
            }
            StatKind::Percentile(p) => {
                if p == 0 || p > 100 {
                    return Err(StoreError::InvalidStatSpec(format!("percentile p={p}")));
                }
                if values.is_empty() {
                    return Err(need(1));
                }
                StatValue::Number(numeric::percentile_nearest_rank(&values, p))
            }
            StatKind::Trend => StatValue::Trend(classify_trend(&values, &self.trend_cfg)?),
        };
        Ok(DerivedStat {
            kind,
            window_seconds,
            value,
        })
    }
}

impl MetricSnapshot for MetricStore {
    fn contains(&self, metric_id: &str) -> bool {
        self.series.contains_key(metric_id)
    }

    fn metric_ids(&self) -> Vec<String> {
        self.series.keys().cloned().collect()
    }

    fn points(
        &self,
        metric_id: &str,
        t0: Timestamp,
        t1: Timestamp,
    ) -> Result<Vec<MetricPoint>, StoreError> {
        self.get_window(metric_id, t0, t1).map(|w| w.to_vec())
    }

    fn stat(&self, metric_id: &str, spec: &StatSpec, at: Timestamp) -> Result<Value, StoreError> {
        match spec {
            StatSpec::Raw => {
                let series = self
                    .series
                    .get(metric_id)
                    .ok_or_else(|| StoreError::UnknownMetric(metric_id.to_owned()))?;
                let idx = series.points.partition_point(|p| p.ts <= at);
                if idx == 0 {
                    return Err(StoreError::InsufficientData { needed: 1, got: 0 });
                }
                Ok(series.points[idx - 1].value)
            }
            StatSpec::Delta { window_seconds } => self
                .derive_stat(metric_id, StatKind::Delta, at, *window_seconds)
                .map(|s| s.value.as_number().expect("numeric stat")),
            StatSpec::Mean { window_seconds } => self
                .derive_stat(metric_id, StatKind::RollingMean, at, *window_seconds)
                .map(|s| s.value.as_number().expect("numeric stat")),
            StatSpec::Percentile { p, window_seconds } => self
                .derive_stat(metric_id, StatKind::Percentile(*p), at, *window_seconds)
                .map(|s| s.value.as_number().expect("numeric stat")),
        }
    }

    fn trend(
        &self,
        metric_id: &str,
        window_seconds: u32,
        at: Timestamp,
    ) -> Result<TrendClass, StoreError> {
        self.derive_stat(metric_id, StatKind::Trend, at, window_seconds)
            .map(|s| s.value.as_trend().expect("trend stat"))
    }
}

fn parse_jsonl(text: &str) -> Result<Vec<RawRecord>, IngestError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord =
            serde_json::from_str(line).map_err(|e| IngestError::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
        validate_record(rec, line_no).map(|r| records.push(r))?;
    }
    Ok(records)
}

fn parse_csv(text: &str) -> Result<Vec<RawRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for result in reader.deserialize::<RawRecord>() {
        // Position tracking: header is line 1, first record line 2.
        let line_no = records.len() + 2;
        let rec = result.map_err(|e| IngestError::MalformedRecord {
            line: e.position().map(|p| p.line() as usize).unwrap_or(line_no),
            reason: e.to_string(),
        })?;
        validate_record(rec, line_no).map(|r| records.push(r))?;
    }
    Ok(records)
}

fn validate_record(rec: RawRecord, line: usize) -> Result<RawRecord, IngestError> {
    if !rec.value.is_finite() {
        return Err(IngestError::NonFiniteValue { line });
    }
    if rec.ts < 0 {
        return Err(IngestError::MalformedRecord {
            line,
            reason: format!("negative timestamp {}", rec.ts),
        });
    }
    if rec.metric_id.is_empty() {
        return Err(IngestError::MalformedRecord {
            line,
            reason: "empty metric_id".into(),
        });
    }
    Ok(rec)
}
