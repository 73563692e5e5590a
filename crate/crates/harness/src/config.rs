//! Experiment configuration files.
//!
//! Configurations are TOML documents: a handful of top-level keys plus the
//! environment prior, an optional meta prior and arrays of learner tables.
//! See `docs/config.md` for the schema.

use std::path::{Path, PathBuf};

use bms_core::{LearnerSpec, PriorSpec};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// A learner entry with an optional display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub spec: LearnerSpec,
}

impl LearnerEntry {
    pub fn new(spec: LearnerSpec) -> Self {
        Self { label: None, spec }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.spec.label())
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    /// `T`.
    pub horizon: usize,
    /// `R`.
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub share_data: bool,
    /// Prior the environments are drawn from.
    pub env_prior: PriorSpec,
    /// Prior of the meta-learner's global posterior; defaults to `env_prior`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta_prior: Option<PriorSpec>,
    /// The base-learner pool.
    pub learners: Vec<LearnerEntry>,
    /// Run every pool learner on its own as well as inside the meta-learner.
    #[serde(default = "default_true")]
    pub standalone: bool,
    /// Extra algorithms run only on their own, for comparison.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baselines: Vec<LearnerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment configs always serialize")
    }

    pub fn meta_prior(&self) -> &PriorSpec {
        self.meta_prior.as_ref().unwrap_or(&self.env_prior)
    }

    /// `K`.
    pub fn num_actions(&self) -> usize {
        self.env_prior.num_actions()
    }

    /// `M`.
    pub fn num_learners(&self) -> usize {
        self.learners.len()
    }

    /// `d` for linear environments.
    pub fn dim(&self) -> Option<usize> {
        match self.env_prior {
            PriorSpec::LinearGaussian { dim, .. } => Some(dim),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.id.is_empty() || self.id.contains([',', '"', '\n']) {
            return bad(format!(
                "experiment id {:?} must be non-empty without commas or quotes",
                self.id
            ));
        }
        if self.learners.is_empty() {
            return bad("the learner pool is empty".into());
        }
        if self.horizon < self.num_learners() {
            return bad(format!(
                "horizon {} is shorter than the pool size {}",
                self.horizon,
                self.num_learners()
            ));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        self.env_prior.validate()?;
        self.meta_prior().validate()?;
        if self.meta_prior().num_actions() != self.num_actions() {
            return bad(format!(
                "meta prior covers {} actions, environment prior {}",
                self.meta_prior().num_actions(),
                self.num_actions()
            ));
        }
        for entry in self.learners.iter().chain(&self.baselines) {
            if entry.label().contains([',', '"', '\n']) {
                return bad(format!("label {:?} must not contain commas or quotes", entry.label()));
            }
            entry.spec.check_against(&self.env_prior, self.horizon)?;
        }
        Ok(())
    }
}
