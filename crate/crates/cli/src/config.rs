//! Run configuration (TOML) and its embedding in fit artifacts.

use crate::io::PanelFilters;
use anyhow::{Context, Result};
use msrg_core::estimation::EstimationConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub estimation: EstimationConfig,
    pub data: PanelFilters,
}

impl RunConfig {
    /// Reads a TOML file, or the configuration embedded in a JSON fit
    /// artifact.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let art: crate::artifact::FitArtifact =
                serde_json::from_str(&text).with_context(|| format!("{}: not a fit artifact", path.display()))?;
            return art.config.with_context(|| format!("{}: no embedded configuration", path.display()));
        }
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("{}: invalid configuration", path.display()))?;
        cfg.estimation.validate()?;
        Ok(cfg)
    }
}
