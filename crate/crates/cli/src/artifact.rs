//! Versioned JSON fit artifact.

use crate::config::RunConfig;
use anyhow::{bail, Context, Result};
use msrg_core::estimation::FitReport;
use msrg_core::{KernelParams, PhysicalParams};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub schema_version: u32,
    pub params: PhysicalParams,
    pub kernel: KernelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<FitReport>,
}

impl FitArtifact {
    pub fn new(params: PhysicalParams, kernel: KernelParams) -> Self {
        Self { schema_version: SCHEMA_VERSION, params, kernel, config: None, report: None }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let art: FitArtifact = serde_json::from_str(&text).with_context(|| format!("{}: not a fit artifact", path.display()))?;
        if art.schema_version != SCHEMA_VERSION {
            bail!("{}: schema_version {} is not supported (expected {SCHEMA_VERSION})", path.display(), art.schema_version);
        }
        art.params.ensure_valid()?;
        if art.kernel.psi() != -art.params.lambda {
            bail!("{}: kernel psi must equal -lambda", path.display());
        }
        if art.kernel.chi().len() != art.params.n_states() {
            bail!("{}: kernel has {} states, params have {}", path.display(), art.kernel.chi().len(), art.params.n_states());
        }
        Ok(art)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }
}
