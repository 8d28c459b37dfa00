//! Item catalog and per-step cost model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base cost of every item without an explicit override.
pub const DEFAULT_BASE_COST: f64 = 20.0;
/// Upper end of the additive `Uniform(0, NOISE_WIDTH)` cost noise.
pub const NOISE_WIDTH: f64 = 4.0;

/// How the per-step cost is realized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// `c_t = c(s_t)`.
    StateOnly,
    /// `c_t = c(s_t) + penalty * 1(s_{t+1} not in slate)`.
    SlatePenalty { penalty: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    base_costs: Vec<f64>,
    cost_seed: u64,
    penalty: f64,
}

impl Catalog {
    /// Catalog with explicit costs. Mostly useful for tests and hand-built instances.
    pub fn from_costs(base_costs: Vec<f64>, penalty: f64) -> Result<Self> {
        if base_costs.len() < 2 {
            return Err(Error::Config(format!(
                "catalog needs at least 2 items, got {}",
                base_costs.len()
            )));
        }
        if let Some((i, c)) = base_costs
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(Error::Config(format!("item {i} has invalid cost {c}")));
        }
        if !penalty.is_finite() || penalty < 0.0 {
            return Err(Error::Config(format!("penalty {penalty} must be finite and non-negative")));
        }
        Ok(Catalog {
            base_costs,
            cost_seed: 0,
            penalty,
        })
    }

    pub fn size(&self) -> usize {
        self.base_costs.len()
    }

    pub fn base_costs(&self) -> &[f64] {
        &self.base_costs
    }

    pub fn cost(&self, state: usize) -> f64 {
        self.base_costs[state]
    }

    pub fn cost_seed(&self) -> u64 {
        self.cost_seed
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn cost_mode(&self) -> CostMode {
        if self.penalty > 0.0 {
            CostMode::SlatePenalty {
                penalty: self.penalty,
            }
        } else {
            CostMode::StateOnly
        }
    }
}

/// Builds the catalog: item `i` costs `(override or default_base) + z_i`, with
/// `z_i ~ Uniform(0, 4)` drawn in id order from a generator seeded by `cost_seed`.
pub fn build_catalog(
    k: usize,
    low_cost_overrides: &[(usize, f64)],
    default_base: f64,
    cost_seed: u64,
    penalty: f64,
) -> Result<Catalog> {
    if k < 2 {
        return Err(Error::Config(format!("catalog size {k} must be at least 2")));
    }
    let mut base = vec![None; k];
    for &(id, value) in low_cost_overrides {
        if id >= k {
            return Err(Error::Config(format!("cost override for item {id} outside catalog of size {k}")));
        }
        if base[id].replace(value).is_some() {
            return Err(Error::Config(format!("duplicate cost override for item {id}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cost_seed);
    let costs = base
        .into_iter()
        .map(|b| b.unwrap_or(default_base) + rng.random_range(0.0..NOISE_WIDTH))
        .collect();
    let mut catalog = Catalog::from_costs(costs, penalty)?;
    catalog.cost_seed = cost_seed;
    Ok(catalog)
}

/// The four cheap items of the 10-item scenario, before noise.
pub fn small_scenario_overrides() -> Vec<(usize, f64)> {
    vec![(0, 5.0), (1, 0.0), (7, 4.0), (9, 8.0)]
}
