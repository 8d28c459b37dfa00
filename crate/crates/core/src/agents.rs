//! Tabular learners for slate recommendation.
//!
//! Two representations are in play. The vanilla learners keep one value per
//! `(state, slate)` in a [`SlateQTable`]. The SlateFree learners and SlateQ keep
//! one value per `(state, item)` in an [`ItemQTable`] and build slates greedily
//! from the `N` smallest entries of a row.
//!
//! Only SlateQ is handed a [`ChoiceModelOracle`]; the other learners never see
//! the user model.

use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::SlateMdp;
use crate::policy::RandomizedPolicy;
use crate::slate::{Slate, SlateSpace};
use crate::tables::{ItemQTable, SlateQTable};
use crate::user::UserModel;

/// Learning rate used throughout the reference experiments.
pub const DEFAULT_LEARNING_RATE: f64 = 0.004;
/// Exploration probability used throughout the reference experiments.
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    VanillaQ,
    VanillaSarsa,
    SlatefreeQ,
    SlatefreeSarsa,
    Slateq,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::SlatefreeQ,
        Algorithm::SlatefreeSarsa,
        Algorithm::Slateq,
        Algorithm::VanillaQ,
        Algorithm::VanillaSarsa,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::VanillaQ => "vanilla-q",
            Algorithm::VanillaSarsa => "vanilla-sarsa",
            Algorithm::SlatefreeQ => "slatefree-q",
            Algorithm::SlatefreeSarsa => "slatefree-sarsa",
            Algorithm::Slateq => "slateq",
        }
    }

    pub fn is_vanilla(self) -> bool {
        matches!(self, Algorithm::VanillaQ | Algorithm::VanillaSarsa)
    }
}

/// What SlateQ does when the user ignores the slate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectUpdate {
    /// No update.
    #[default]
    None,
    /// Update a per-state value of the "nothing selected" outcome.
    NullItem,
}

/// Which next slate SlateQ bootstraps from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlateqBootstrap {
    /// The greedy slate at the next state.
    #[default]
    Greedy,
    /// The slate actually recommended at the next state.
    Taken,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon: f64,
    pub optimistic_init: f64,
    pub seed: u64,
    /// SlateFree only: update a random subset of this many slate items per step.
    pub updates_per_step: Option<usize>,
    pub reject_update: RejectUpdate,
    pub slateq_bootstrap: SlateqBootstrap,
}

impl AgentConfig {
    pub fn new(algorithm: Algorithm, discount: f64, seed: u64) -> Self {
        AgentConfig {
            algorithm,
            learning_rate: DEFAULT_LEARNING_RATE,
            discount,
            epsilon: DEFAULT_EPSILON,
            optimistic_init: 0.0,
            seed,
            updates_per_step: None,
            reject_update: RejectUpdate::None,
            slateq_bootstrap: SlateqBootstrap::Greedy,
        }
    }

    pub fn validate(&self, slate_size: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!("learning rate {} outside (0, 1]", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::Config(format!("discount {} outside [0, 1)", self.discount)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if !self.optimistic_init.is_finite() {
            return Err(Error::Config("initial Q value must be finite".into()));
        }
        if let Some(m) = self.updates_per_step {
            if !matches!(self.algorithm, Algorithm::SlatefreeQ | Algorithm::SlatefreeSarsa) {
                return Err(Error::Config("updates_per_step applies to SlateFree agents only".into()));
            }
            if m == 0 || m > slate_size {
                return Err(Error::Config(format!(
                    "updates_per_step {m} must be in [1, {slate_size}]"
                )));
            }
        }
        Ok(())
    }
}

/// Read access to the true choice model, given to SlateQ only.
#[derive(Debug, Clone)]
pub struct ChoiceModelOracle {
    user: Arc<UserModel>,
}

impl ChoiceModelOracle {
    pub fn new(user: Arc<UserModel>) -> Self {
        ChoiceModelOracle { user }
    }

    /// Probability of each slate item being picked, renormalized over the slate.
    /// Falls back to uniform when the model puts no mass on the slate.
    pub fn within_slate(&self, state: usize, slate: &Slate, out: &mut Vec<f64>) {
        let probs = self.user.choice_distribution(state, slate);
        out.clear();
        out.extend(slate.items().iter().map(|&j| probs[j]));
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|p| *p /= total);
        } else {
            let u = 1.0 / slate.len() as f64;
            out.iter_mut().for_each(|p| *p = u);
        }
    }
}

#[inline]
fn td(q: f64, target: f64, lr: f64) -> f64 {
    q + lr * (target - q)
}

/// `Q(s,w) += lr [cost + discount Q(s',w') - Q(s,w)]`.
#[allow(clippy::too_many_arguments)]
pub fn vanilla_sarsa_update(
    table: &mut SlateQTable,
    state: usize,
    slate: &Slate,
    cost: f64,
    next: usize,
    next_slate: &Slate,
    lr: f64,
    discount: f64,
) {
    let target = cost + discount * table.get(next, next_slate);
    let q = table.get(state, slate);
    table.set(state, slate, td(q, target, lr));
}

/// `Q(s,w) += lr [cost + discount min_w' Q(s',w') - Q(s,w)]`, the min running over all of `A(s')`.
pub fn vanilla_q_update(
    table: &mut SlateQTable,
    state: usize,
    slate: &Slate,
    cost: f64,
    next: usize,
    lr: f64,
    discount: f64,
) {
    let target = cost + discount * table.min(next);
    let q = table.get(state, slate);
    table.set(state, slate, td(q, target, lr));
}

/// SlateFree-SARSA step for the items in `targets` (a subset of the slate; all
/// of it in the standard algorithm). `item_costs[i]` is the cost for `targets[i]`.
///
/// The bootstrap `(1/N) sum_{k in w'} Q(s',k)` is read once, before any write.
#[allow(clippy::too_many_arguments)]
pub fn slatefree_sarsa_update_items(
    table: &mut ItemQTable,
    state: usize,
    targets: &[usize],
    item_costs: &[f64],
    next: usize,
    next_slate: &Slate,
    lr: f64,
    discount: f64,
) -> usize {
    debug_assert_eq!(targets.len(), item_costs.len());
    let sum: f64 = next_slate.items().iter().map(|&k| table.get(next, k)).sum();
    let boot = sum / next_slate.len() as f64;
    for (&j, &c) in targets.iter().zip(item_costs) {
        let q = table.get(state, j);
        table.set(state, j, td(q, c + discount * boot, lr));
    }
    targets.len()
}

/// SlateFree-SARSA over the whole slate. Returns the number of entries updated.
#[allow(clippy::too_many_arguments)]
pub fn slatefree_sarsa_update(
    table: &mut ItemQTable,
    state: usize,
    slate: &Slate,
    item_costs: &[f64],
    next: usize,
    next_slate: &Slate,
    lr: f64,
    discount: f64,
) -> usize {
    slatefree_sarsa_update_items(table, state, slate.items(), item_costs, next, next_slate, lr, discount)
}

/// SlateFree-Q step for the items in `targets`. The bootstrap
/// `min_{l != s'} Q(s', l)` is read once, before any write.
#[allow(clippy::too_many_arguments)]
pub fn slatefree_q_update_items(
    table: &mut ItemQTable,
    state: usize,
    targets: &[usize],
    cost: f64,
    next: usize,
    lr: f64,
    discount: f64,
) -> usize {
    let target = cost + discount * table.min_valid(next);
    for &j in targets {
        let q = table.get(state, j);
        table.set(state, j, td(q, target, lr));
    }
    targets.len()
}

/// SlateFree-Q over the whole slate. Returns the number of entries updated.
pub fn slatefree_q_update(
    table: &mut ItemQTable,
    state: usize,
    slate: &Slate,
    cost: f64,
    next: usize,
    lr: f64,
    discount: f64,
) -> usize {
    slatefree_q_update_items(table, state, slate.items(), cost, next, lr, discount)
}

/// SlateQ step: only the consumed item is updated, bootstrapping on the
/// choice-weighted values of `next_slate` at `next`. Rejections (the next item is
/// not on the slate) update nothing, or the per-state null value.
#[allow(clippy::too_many_arguments)]
pub fn slateq_update(
    table: &mut ItemQTable,
    null_values: &mut [f64],
    state: usize,
    slate: &Slate,
    cost: f64,
    next: usize,
    next_slate: &Slate,
    oracle: &ChoiceModelOracle,
    reject: RejectUpdate,
    lr: f64,
    discount: f64,
) -> usize {
    let selected = slate.contains(next);
    if !selected && reject == RejectUpdate::None {
        return 0;
    }
    let mut weights = Vec::with_capacity(next_slate.len());
    oracle.within_slate(next, next_slate, &mut weights);
    let boot: f64 = next_slate
        .items()
        .iter()
        .zip(&weights)
        .map(|(&k, w)| w * table.get(next, k))
        .sum();
    let target = cost + discount * boot;
    if selected {
        let q = table.get(state, next);
        table.set(state, next, td(q, target, lr));
    } else {
        null_values[state] = td(null_values[state], target, lr);
    }
    1
}

/// The `n` items other than `state` with the smallest values, ties by lowest id.
pub fn greedy_slate(row: &[f64], state: usize, n: usize) -> Slate {
    // (value, id) kept sorted by value; equal values keep insertion (id) order
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(n + 1);
    for (j, &v) in row.iter().enumerate() {
        if j == state {
            continue;
        }
        if best.len() == n {
            if v >= best[n - 1].0 {
                continue;
            }
            best.pop();
        }
        let pos = best.partition_point(|&(b, _)| b <= v);
        best.insert(pos, (v, j));
    }
    let mut items: Vec<usize> = best.into_iter().map(|(_, j)| j).collect();
    items.sort_unstable();
    Slate::from_sorted_unchecked(items)
}

#[derive(Debug, Clone)]
enum Learner {
    Vanilla(SlateQTable),
    SlateFree(ItemQTable),
    SlateQ {
        table: ItemQTable,
        null_values: Vec<f64>,
        oracle: ChoiceModelOracle,
    },
}

/// A learning agent with its own exploration generator.
///
/// Per step the runner calls [`Agent::act`] at the next state first and then
/// [`Agent::update`] with the transition and that next slate.
#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    space: SlateSpace,
    learner: Learner,
    rng: ChaCha8Rng,
    updates: u64,
    scratch: Vec<usize>,
}

impl Agent {
    pub fn new(config: AgentConfig, mdp: &SlateMdp) -> Result<Self> {
        config.validate(mdp.slate_size())?;
        let k = mdp.num_items();
        let n = mdp.slate_size();
        let init = config.optimistic_init;
        let learner = match config.algorithm {
            Algorithm::VanillaQ | Algorithm::VanillaSarsa => Learner::Vanilla(SlateQTable::new(k, n, init)?),
            Algorithm::SlatefreeQ | Algorithm::SlatefreeSarsa => Learner::SlateFree(ItemQTable::new(k, init)),
            Algorithm::Slateq => Learner::SlateQ {
                table: ItemQTable::new(k, init),
                null_values: vec![init; k],
                oracle: ChoiceModelOracle::new(mdp.user_handle()),
            },
        };
        Ok(Agent {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            space: mdp.space().clone(),
            config,
            learner,
            updates: 0,
            scratch: Vec::new(),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    /// Total number of table entries written so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn has_oracle(&self) -> bool {
        matches!(self.learner, Learner::SlateQ { .. })
    }

    pub fn item_table(&self) -> Option<&ItemQTable> {
        match &self.learner {
            Learner::SlateFree(t) | Learner::SlateQ { table: t, .. } => Some(t),
            Learner::Vanilla(_) => None,
        }
    }

    pub fn slate_table(&self) -> Option<&SlateQTable> {
        match &self.learner {
            Learner::Vanilla(t) => Some(t),
            _ => None,
        }
    }

    pub fn greedy(&self, state: usize) -> Slate {
        match &self.learner {
            Learner::Vanilla(t) => self.space.unrank_unchecked(t.argmin(state).0 as u64, state),
            Learner::SlateFree(t) | Learner::SlateQ { table: t, .. } => {
                greedy_slate(t.row(state), state, self.space.slate_size())
            }
        }
    }

    /// Epsilon-greedy slate: uniform over `A(state)` with probability epsilon.
    pub fn act(&mut self, state: usize) -> Slate {
        if self.rng.random::<f64>() < self.config.epsilon {
            self.space.sample_uniform(state, &mut self.rng)
        } else {
            self.greedy(state)
        }
    }

    /// Learns from `state --slate--> next` with realized `cost`; `next_slate` is
    /// the slate already chosen at `next`. Returns the number of entries written.
    pub fn update(&mut self, state: usize, slate: &Slate, cost: f64, next: usize, next_slate: &Slate) -> usize {
        let lr = self.config.learning_rate;
        let discount = self.config.discount;
        let n = match &mut self.learner {
            Learner::Vanilla(t) => {
                match self.config.algorithm {
                    Algorithm::VanillaQ => vanilla_q_update(t, state, slate, cost, next, lr, discount),
                    _ => vanilla_sarsa_update(t, state, slate, cost, next, next_slate, lr, discount),
                }
                1
            }
            Learner::SlateFree(t) => {
                let targets: &[usize] = match self.config.updates_per_step {
                    Some(m) if m < slate.len() => {
                        self.scratch.clear();
                        let picked = index::sample(&mut self.rng, slate.len(), m);
                        self.scratch.extend(picked.into_iter().map(|i| slate.items()[i]));
                        &self.scratch
                    }
                    _ => slate.items(),
                };
                match self.config.algorithm {
                    Algorithm::SlatefreeQ => slatefree_q_update_items(t, state, targets, cost, next, lr, discount),
                    _ => {
                        let costs = vec![cost; targets.len()];
                        slatefree_sarsa_update_items(t, state, targets, &costs, next, next_slate, lr, discount)
                    }
                }
            }
            Learner::SlateQ {
                table,
                null_values,
                oracle,
            } => {
                let boot_slate = match self.config.slateq_bootstrap {
                    SlateqBootstrap::Greedy => greedy_slate(table.row(next), next, self.space.slate_size()),
                    SlateqBootstrap::Taken => next_slate.clone(),
                };
                slateq_update(
                    table,
                    null_values,
                    state,
                    slate,
                    cost,
                    next,
                    &boot_slate,
                    oracle,
                    self.config.reject_update,
                    lr,
                    discount,
                )
            }
        };
        self.updates += n as u64;
        n
    }

    /// The deterministic greedy policy of the current tables.
    pub fn greedy_policy(&self) -> Result<RandomizedPolicy> {
        let k = self.space.catalog_size();
        let slates = (0..k).map(|s| self.greedy(s)).collect();
        RandomizedPolicy::deterministic(k, self.space.slate_size(), slates)
    }
}
