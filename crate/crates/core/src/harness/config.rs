//! JSON experiment configuration.
//!
//! Unknown keys are rejected everywhere. Defaults:
//!
//! | key | default |
//! |---|---|
//! | `catalog.cost_overrides` | items 0,1,7,9 at bases 5,0,4,8 (those inside the catalog) |
//! | `catalog.default_base` | 20 |
//! | `catalog.cost_seed` | 0 |
//! | `catalog.penalty` | 0 (state-only cost) |
//! | `discount` | 0.85 |
//! | `smoothing_window` | 200 |
//! | `start_state` | `"uniform"` |
//! | `master_seed` | 0 |
//! | `replicates` | 1 |
//! | `return_mode` | `"undiscounted"` |
//! | `eval_points` | `[]` |
//! | `solver_threshold` | 1e-12 |
//! | agent `gamma` / `epsilon` / `optimistic_init` | 0.004 / 0.05 / 0 |
//! | agent `lambda` | the experiment `discount` |
//! | agent `slateq_reject_update` / `slateq_bootstrap` | `"none"` / `"greedy"` |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, Algorithm, RejectUpdate, SlateqBootstrap, DEFAULT_EPSILON, DEFAULT_LEARNING_RATE};
use crate::catalog::{build_catalog, small_scenario_overrides, Catalog, DEFAULT_BASE_COST};
use crate::error::{Error, Result};
use crate::exact::DEFAULT_THRESHOLD;
use crate::user::{RejectionPool, UserModel, UserVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostOverride {
    pub item: usize,
    pub base: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSpec {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_overrides: Option<Vec<CostOverride>>,
    #[serde(default = "default_base")]
    pub default_base: f64,
    #[serde(default)]
    pub cost_seed: u64,
    #[serde(default)]
    pub penalty: f64,
}

fn default_base() -> f64 {
    DEFAULT_BASE_COST
}

impl CatalogSpec {
    pub fn build(&self) -> Result<Catalog> {
        let overrides: Vec<(usize, f64)> = match &self.cost_overrides {
            Some(list) => list.iter().map(|o| (o.item, o.base)).collect(),
            None => small_scenario_overrides()
                .into_iter()
                .filter(|&(i, _)| i < self.k)
                .collect(),
        };
        build_catalog(self.k, &overrides, self.default_base, self.cost_seed, self.penalty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum UserSpec {
    User1 {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    User2 {
        alpha: f64,
        excluded: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    User3 {
        required: Vec<usize>,
        #[serde(default)]
        rejection: RejectionPool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl UserSpec {
    pub fn label(&self) -> String {
        match self {
            UserSpec::User1 { label, .. } => label.clone().unwrap_or_else(|| "user1".into()),
            UserSpec::User2 { label, .. } => label.clone().unwrap_or_else(|| "user2".into()),
            UserSpec::User3 { label, .. } => label.clone().unwrap_or_else(|| "user3".into()),
        }
    }

    pub fn build(&self, k: usize) -> Result<UserModel> {
        let variant = match self {
            UserSpec::User1 { alpha, .. } => UserVariant::User1 { alpha: *alpha },
            UserSpec::User2 { alpha, excluded, .. } => UserVariant::User2 {
                alpha: *alpha,
                excluded: excluded.clone(),
            },
            UserSpec::User3 { required, rejection, .. } => UserVariant::User3 {
                required: required.clone(),
                rejection: *rejection,
            },
        };
        UserModel::new(k, variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Replaces `master_seed` as the base seed of this agent's cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub optimistic_init: f64,
    #[serde(default)]
    pub slateq_reject_update: RejectUpdate,
    #[serde(default)]
    pub slateq_bootstrap: SlateqBootstrap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub updates_per_step: Option<usize>,
}

fn default_gamma() -> f64 {
    DEFAULT_LEARNING_RATE
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl AgentSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        AgentSpec {
            algorithm,
            label: None,
            gamma: DEFAULT_LEARNING_RATE,
            lambda: None,
            epsilon: DEFAULT_EPSILON,
            seed: None,
            optimistic_init: 0.0,
            slateq_reject_update: RejectUpdate::None,
            slateq_bootstrap: SlateqBootstrap::Greedy,
            updates_per_step: None,
        }
    }

    pub fn label(&self) -> String {
        match (&self.label, self.updates_per_step) {
            (Some(l), _) => l.clone(),
            (None, Some(m)) => format!("{}-m{m}", self.algorithm.label()),
            (None, None) => self.algorithm.label().to_string(),
        }
    }

    pub fn agent_config(&self, discount: f64, seed: u64) -> AgentConfig {
        AgentConfig {
            algorithm: self.algorithm,
            learning_rate: self.gamma,
            discount: self.lambda.unwrap_or(discount),
            epsilon: self.epsilon,
            optimistic_init: self.optimistic_init,
            seed,
            updates_per_step: self.updates_per_step,
            reject_update: self.slateq_reject_update,
            slateq_bootstrap: self.slateq_bootstrap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    #[default]
    Uniform,
    Fixed(usize),
}

/// What the per-episode `return` column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMode {
    /// Plain sum of costs over the episode. With geometric termination this is an
    /// unbiased sample of the discounted value of the start state.
    #[default]
    Undiscounted,
    /// `sum_t discount^t c_t` over the episode.
    Discounted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub catalog: CatalogSpec,
    pub slate_size: usize,
    pub users: Vec<UserSpec>,
    pub agents: Vec<AgentSpec>,
    pub episodes: usize,
    #[serde(default = "default_discount")]
    pub discount: f64,
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    #[serde(default)]
    pub start_state: StartState,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub return_mode: ReturnMode,
    #[serde(default)]
    pub eval_points: Vec<usize>,
    #[serde(default = "default_threshold")]
    pub solver_threshold: f64,
}

fn default_discount() -> f64 {
    0.85
}

fn default_window() -> usize {
    200
}

fn default_replicates() -> usize {
    1
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Small scenario: K=10, N=4, the three reference users and all five learners.
    pub fn small_scenario(episodes: usize) -> Self {
        ExperimentConfig {
            catalog: CatalogSpec {
                k: 10,
                cost_overrides: None,
                default_base: DEFAULT_BASE_COST,
                cost_seed: 0,
                penalty: 0.0,
            },
            slate_size: 4,
            users: vec![
                UserSpec::User1 { alpha: 0.75, label: None },
                UserSpec::User2 {
                    alpha: 0.75,
                    excluded: vec![0, 1, 8],
                    label: None,
                },
                UserSpec::User3 {
                    required: vec![0, 1, 8],
                    rejection: RejectionPool::Catalog,
                    label: None,
                },
            ],
            agents: Algorithm::ALL.iter().map(|&a| AgentSpec::new(a)).collect(),
            episodes,
            discount: default_discount(),
            smoothing_window: default_window(),
            start_state: StartState::Uniform,
            master_seed: 0,
            replicates: 1,
            return_mode: ReturnMode::Undiscounted,
            eval_points: Vec::new(),
            solver_threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.catalog.k;
        let catalog = self.catalog.build()?;
        crate::slate::SlateSpace::new(k, self.slate_size)?;
        if self.users.is_empty() || self.agents.is_empty() {
            return Err(Error::Config("at least one user and one agent are required".into()));
        }
        for u in &self.users {
            u.build(k)?;
        }
        let mut labels: Vec<String> = self.users.iter().map(|u| u.label()).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("user labels must be unique".into()));
        }
        let mut labels: Vec<String> = self.agents.iter().map(|a| a.label()).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("agent labels must be unique".into()));
        }
        for a in &self.agents {
            a.agent_config(self.discount, 0).validate(self.slate_size)?;
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be positive".into()));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::Config(format!("discount {} outside (0, 1)", self.discount)));
        }
        if self.smoothing_window == 0 || self.smoothing_window > self.episodes {
            return Err(Error::Config(format!(
                "smoothing_window {} must be in [1, episodes]",
                self.smoothing_window
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        if let StartState::Fixed(s) = self.start_state {
            if s >= catalog.size() {
                return Err(Error::Config(format!("start state {s} outside catalog")));
            }
        }
        if let Some(&bad) = self.eval_points.iter().find(|&&e| e == 0 || e > self.episodes) {
            return Err(Error::Config(format!("eval point {bad} outside [1, episodes]")));
        }
        if self.solver_threshold.is_nan() || self.solver_threshold <= 0.0 {
            return Err(Error::Config("solver_threshold must be positive".into()));
        }
        Ok(())
    }
}
