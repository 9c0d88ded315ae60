use std::fs;
use std::path::{Path, PathBuf};

use idreader::classifier::TrainConfig;
use idreader::evalharness::VertexCriterion;
use idreader::locator::LocatorParams;
use idreader::synthgen::GenConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Everything a run can be configured with. Flags override these values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CliConfig {
    pub generator: GenConfig,
    pub locator: LocatorParams,
    pub train: TrainConfig,
    pub criterion: VertexCriterion,
    pub network: NetworkConfig,
    /// Layout registry used by `read` and `eval` when `--layouts` is absent.
    pub layouts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub blocks: usize,
    pub filters: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { blocks: 2, filters: 8 }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {}", .0.display(), .1)]
    Read(PathBuf, #[source] std::io::Error),
    #[error("bad config {}: {}", .0.display(), .1)]
    Parse(PathBuf, #[source] serde_json::Error),
    #[error("config refers to missing path {}", .0.display())]
    MissingPath(PathBuf),
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_owned(), e))?;
        let cfg: CliConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse(path.to_owned(), e))?;
        cfg.check_paths()?;
        Ok(cfg)
    }

    fn check_paths(&self) -> Result<(), ConfigError> {
        let g = &self.generator;
        let l = &g.lists;
        let lists = [&l.surnames, &l.male_names, &l.female_names, &l.places, &l.streets];
        let paths = lists
            .into_iter()
            .flatten()
            .chain(&g.layouts)
            .chain(&g.backgrounds)
            .chain(&self.layouts);
        for p in paths {
            if !p.exists() {
                return Err(ConfigError::MissingPath(p.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg: CliConfig = serde_json::from_str(
            r#"{"generator": {"photo_width": 800, "degradation": {"sigma": 2.0, "quality": 90}},
                "locator": {"samples": 50}, "train": {"batch_size": 16}, "network": {"filters": 16}}"#,
        )
        .unwrap();
        assert_eq!(cfg.generator.photo_width, 800);
        assert_eq!(cfg.generator.photo_height, 768);
        assert_eq!(cfg.generator.degradation.quality, 90);
        assert_eq!(cfg.locator.samples, 50);
        assert_eq!(cfg.train.epochs, 239);
        assert_eq!(cfg.network, NetworkConfig { blocks: 2, filters: 16 });
        assert!(cfg.check_paths().is_ok());
    }

    #[test]
    fn missing_paths_are_rejected() {
        let cfg: CliConfig = serde_json::from_str(r#"{"layouts": "/no/such/layouts.json"}"#).unwrap();
        assert!(matches!(cfg.check_paths(), Err(ConfigError::MissingPath(_))));
    }
}
