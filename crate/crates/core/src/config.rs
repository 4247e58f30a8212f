//! Engine configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adf::AdfConfig;
use crate::diagnose::LlmEndpointConfig;
use crate::evolution::EvolutionConfig;
use crate::trend::TrendConfig;

/// Filesystem layout the CLI works against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnginePaths {
    /// Graph file; created by `graph build`, read by the pipeline.
    pub graph_file: PathBuf,
    /// Directory of model definition documents.
    pub models_dir: PathBuf,
    /// Working directory for ingested metrics, events, and reports.
    pub data_dir: PathBuf,
}

impl Default for EnginePaths {
    fn default() -> Self {
        Self {
            graph_file: PathBuf::from("data/graph.json"),
            models_dir: PathBuf::from("data/models"),
            data_dir: PathBuf::from("data"),
        }
    }
}

/// Root configuration, loadable from a JSON document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub paths: EnginePaths,
    pub adf: AdfConfig,
    pub evolution: EvolutionConfig,
    pub llm: LlmEndpointConfig,
    pub trend: TrendConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("configured path does not exist: {0}")]
    MissingPath(PathBuf),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl EngineConfig {
    /// Load a configuration file. Input paths (models dir, data dir) must
    /// exist; output paths like the graph file are not checked.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: EngineConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for dir in [&cfg.paths.models_dir, &cfg.paths.data_dir] {
            if !dir.exists() {
                return Err(ConfigError::MissingPath(dir.clone()));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks over the numeric parameters.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |what: &str| Err(ConfigError::Invalid(what.to_owned()));
        for adf in [&self.adf, &self.evolution.adf] {
            if !(adf.theta.is_finite() && adf.theta > 0.0) {
                return invalid("adf.theta must be positive");
            }
            if !adf.score_threshold.is_finite() {
                return invalid("adf.score_threshold must be finite");
            }
            if adf.baseline_window < 2 {
                return invalid("adf.baseline_window must be at least 2");
            }
            if !(adf.sigma_floor.is_finite() && adf.sigma_floor > 0.0) {
                return invalid("adf.sigma_floor must be positive");
            }
            if adf.shuffle_trials == 0 {
                return invalid("adf.shuffle_trials must be at least 1");
            }
            if adf
                .hour_factors
                .iter()
                .any(|f| !(f.is_finite() && *f > 0.0))
            {
                return invalid("adf.hour_factors must all be positive");
            }
        }
        if self.evolution.max_rounds == 0 {
            return invalid("evolution.max_rounds must be at least 1");
        }
        if !(self.evolution.cross_edge_increment.is_finite()
            && self.evolution.cross_edge_increment > 0.0)
        {
            return invalid("evolution.cross_edge_increment must be positive");
        }
        if self.evolution.screen_window_seconds == 0 {
            return invalid("evolution.screen_window_seconds must be positive");
        }
        if self.evolution.limits.max_vertices == 0 {
            return invalid("evolution.limits.max_vertices must be at least 1");
        }
        if !(self.evolution.limits.min_edge_weight.is_finite()
            && self.evolution.limits.min_edge_weight >= 0.0)
        {
            return invalid("evolution.limits.min_edge_weight must be non-negative");
        }
        if !(self.trend.slow_change > 0.0 && self.trend.slow_change < self.trend.sharp_change) {
            return invalid("trend thresholds must satisfy 0 < slow_change < sharp_change");
        }
        if self.trend.residual_cv_max <= 0.0 {
            return invalid("trend.residual_cv_max must be positive");
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_its_file_form() {
        let dir = tempfile::tempdir().unwrap();
        let models = dir.path().join("models");
        let data = dir.path().join("data");
        std::fs::create_dir_all(&models).unwrap();
        std::fs::create_dir_all(&data).unwrap();
        let cfg = EngineConfig {
            paths: EnginePaths {
                graph_file: data.join("graph.json"),
                models_dir: models,
                data_dir: data,
            },
            ..EngineConfig::default()
        };
        let path = dir.path().join("config.json");
        cfg.save(&path).unwrap();
        let loaded = EngineConfig::load(&path).unwrap();
        assert_eq!(cfg, loaded);
    }

    #[test]
    fn out_of_range_parameters_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = EngineConfig {
            paths: EnginePaths {
                graph_file: dir.path().join("graph.json"),
                models_dir: dir.path().to_path_buf(),
                data_dir: dir.path().to_path_buf(),
            },
            ..EngineConfig::default()
        };
        cfg.adf.theta = -1.0;
        let path = dir.path().join("config.json");
        cfg.save(&path).unwrap();
        assert!(matches!(
            EngineConfig::load(&path),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn missing_input_path_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EngineConfig {
            paths: EnginePaths {
                graph_file: dir.path().join("graph.json"),
                models_dir: dir.path().join("missing-models"),
                data_dir: dir.path().to_path_buf(),
            },
            ..EngineConfig::default()
        };
        let path = dir.path().join("config.json");
        cfg.save(&path).unwrap();
        assert!(matches!(
            EngineConfig::load(&path),
            Err(ConfigError::MissingPath(_))
        ));
    }
}
