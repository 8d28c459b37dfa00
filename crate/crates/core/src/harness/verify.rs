//! Exact solves and decomposition identity checks over every user of a config.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decomposition::{
    item_marginals, verify_property1, verify_property3, verify_theorem1, verify_theorem2, Theorem2Report,
};
use crate::error::Result;
use crate::exact::{self, ExactReport};
use crate::harness::config::ExperimentConfig;
use crate::harness::runner::derive_seed;
use crate::mdp::SlateMdp;
use crate::policy::RandomizedPolicy;
use crate::tables::check_capacity;

/// Largest support drawn for the random policies of the identity suite.
pub const RANDOM_POLICY_SUPPORT: usize = 4;

/// `max_s |sum_j r(s,j) - N|` and `max_{s,j} |sum_s' P(s'|s,j) - 1|` over defined pairs.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct MarginalSums {
    pub frequency: f64,
    pub transition: f64,
}

pub fn marginal_sums(mdp: &SlateMdp, policy: &RandomizedPolicy) -> MarginalSums {
    let k = mdp.num_items();
    let n = mdp.slate_size() as f64;
    let marg = item_marginals(mdp, policy);
    let mut out = MarginalSums::default();
    for s in 0..k {
        let total: f64 = (0..k).map(|j| marg.frequency(s, j)).sum();
        out.frequency = out.frequency.max((total - n).abs());
        for j in 0..k {
            if let Some(p) = marg.transition(s, j) {
                out.transition = out.transition.max((p.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    out
}

/// Worst residuals of every identity over a set of policies.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PolicyResiduals {
    pub theorem1: f64,
    pub property1: f64,
    pub frequency_sum: f64,
    pub transition_sum: f64,
    pub property3: f64,
}

impl PolicyResiduals {
    pub fn absorb(&mut self, other: PolicyResiduals) {
        self.theorem1 = self.theorem1.max(other.theorem1);
        self.property1 = self.property1.max(other.property1);
        self.frequency_sum = self.frequency_sum.max(other.frequency_sum);
        self.transition_sum = self.transition_sum.max(other.transition_sum);
        self.property3 = self.property3.max(other.property3);
    }
}

pub fn policy_residuals(mdp: &SlateMdp, policy: &RandomizedPolicy, discount: f64) -> Result<PolicyResiduals> {
    let k = mdp.num_items();
    let sums = marginal_sums(mdp, policy);
    let mut property3 = 0.0f64;
    for s in 0..k {
        for j in 0..k {
            if let Ok(r) = verify_property3(mdp, policy, s, j) {
                property3 = property3.max(r);
            }
        }
    }
    Ok(PolicyResiduals {
        theorem1: verify_theorem1(mdp, policy, discount)?,
        property1: verify_property1(mdp, policy),
        frequency_sum: sums.frequency,
        transition_sum: sums.transition,
        property3,
    })
}

/// The uniform policy, then `count - 1` random policies of support at most
/// [`RANDOM_POLICY_SUPPORT`].
pub fn test_policies(mdp: &SlateMdp, count: usize, seed: u64) -> Vec<RandomizedPolicy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(RandomizedPolicy::uniform(mdp.space()));
    }
    while out.len() < count {
        let support = 1 + out.len() % RANDOM_POLICY_SUPPORT;
        out.push(RandomizedPolicy::random(mdp.space(), support, &mut rng));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct UserIdentities {
    pub user: String,
    pub policies: usize,
    pub residuals: PolicyResiduals,
    pub theorem2: Theorem2Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub catalog_size: usize,
    pub slate_size: usize,
    pub discount: f64,
    pub users: Vec<UserIdentities>,
}

fn user_mdps(config: &ExperimentConfig) -> Result<Vec<(String, SlateMdp)>> {
    let catalog = config.catalog.build()?;
    config
        .users
        .iter()
        .map(|u| Ok((u.label(), SlateMdp::new(catalog.clone(), u.build(catalog.size())?, config.slate_size)?)))
        .collect()
}

/// Checks every identity for each user of the config under `policies` policies.
pub fn verify_identities(config: &ExperimentConfig, policies: usize) -> Result<IdentityReport> {
    check_capacity(config.catalog.k, config.slate_size)?;
    let mut users = Vec::new();
    for (label, mdp) in user_mdps(config)? {
        let mut residuals = PolicyResiduals::default();
        for policy in test_policies(&mdp, policies, derive_seed(config.master_seed, &["verify", &label])) {
            residuals.absorb(policy_residuals(&mdp, &policy, config.discount)?);
        }
        users.push(UserIdentities {
            user: label,
            policies,
            residuals,
            theorem2: verify_theorem2(&mdp, config.discount)?,
        });
    }
    Ok(IdentityReport {
        catalog_size: config.catalog.k,
        slate_size: config.slate_size,
        discount: config.discount,
        users,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UserSolution {
    pub user: String,
    #[serde(flatten)]
    pub report: ExactReport,
}

/// Exact optimal values and slates for each user of the config.
pub fn solve_users(config: &ExperimentConfig) -> Result<Vec<UserSolution>> {
    user_mdps(config)?
        .into_iter()
        .map(|(user, mdp)| {
            Ok(UserSolution {
                user,
                report: exact::solve_report(&mdp, config.discount, config.solver_threshold)?,
            })
        })
        .collect()
}
