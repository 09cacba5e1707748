//! Run configuration, read from a single JSON file. Every field has a
//! default, so `{}` is a valid config.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::experiments::cauchy::CauchyConfig;
use crate::experiments::example4::Example4Config;
use crate::experiments::laplace::{ExteriorSlpConfig, LaplaceConfig};
use crate::experiments::stokes::{Example1Config, Example2Config, Example3Config};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cauchy: CauchyConfig,
    pub laplace: LaplaceConfig,
    pub exterior_slp: ExteriorSlpConfig,
    pub example1: Example1Config,
    pub example2: Example2Config,
    pub example3: Example3Config,
    pub example4: Example4Config,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(serde_json::from_str::<RunConfig>("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip_and_partial_override() {
        let c = RunConfig::default();
        let s = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
        let p: RunConfig = serde_json::from_str(r#"{"laplace": {"ns": [100]}, "example4": {"layout": {"bodies": 3, "gap": 0.01, "N": 64}}}"#).unwrap();
        assert_eq!(p.laplace.ns, vec![100]);
        assert_eq!(p.laplace.grid, c.laplace.grid);
        assert_eq!(p.example4.layout.bodies, 3);
        assert!(serde_json::from_str::<RunConfig>(r#"{"lapalce": {}}"#).is_err());
    }
}
