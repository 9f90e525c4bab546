//! TOML configuration file.
//!
//! ```toml
//! [generator]
//! sample_count = 1000
//! seed = 7
//!
//! [generator.hazard.hazard]
//! annual_rate = 0.142857
//!
//! [experiment]
//! penalties = [0.1, 1.0, 10.0]
//! kernels = ["linear", "gaussian:0.1"]
//! folds = 5
//!
//! [experiment.logreg]
//! lambda = 1e-4
//! ```
//!
//! Every key is optional and missing keys take the built-in defaults;
//! unknown keys are rejected. Command-line flags are applied on top of the
//! loaded file by the caller.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::GenConfig;
use crate::error::{OutageError, Result};
use crate::experiment::ExperimentConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub generator: GenConfig,
    pub experiment: ExperimentConfig,
}

impl AppConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: AppConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| OutageError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            OutageError::Io { .. } => e,
            other => OutageError::Config(format!("{}: {other}", path.display())),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| OutageError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.experiment.validate()
    }
}
