use std::sync::Arc;

use crate::catalog::{Catalog, CostMode};
use crate::error::{Error, Result};
use crate::slate::{Slate, SlateSpace};
use crate::user::UserModel;

/// A catalog, a user and a slate size: everything that defines the slate-MDP
/// apart from the discount.
#[derive(Debug, Clone)]
pub struct SlateMdp {
    catalog: Catalog,
    user: Arc<UserModel>,
    space: SlateSpace,
}

impl SlateMdp {
    pub fn new(catalog: Catalog, user: UserModel, slate_size: usize) -> Result<Self> {
        if user.catalog_size() != catalog.size() {
            return Err(Error::Config(format!(
                "user model built for {} items, catalog has {}",
                user.catalog_size(),
                catalog.size()
            )));
        }
        let space = SlateSpace::new(catalog.size(), slate_size)?;
        Ok(SlateMdp {
            catalog,
            user: Arc::new(user),
            space,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn user(&self) -> &UserModel {
        &self.user
    }

    /// Shared handle to the user model, e.g. for building a [`crate::agents::ChoiceModelOracle`].
    pub fn user_handle(&self) -> Arc<UserModel> {
        Arc::clone(&self.user)
    }

    pub fn space(&self) -> &SlateSpace {
        &self.space
    }

    pub fn num_items(&self) -> usize {
        self.catalog.size()
    }

    pub fn slate_size(&self) -> usize {
        self.space.slate_size()
    }

    pub fn cost_mode(&self) -> CostMode {
        self.catalog.cost_mode()
    }

    /// Cost observed after `state --slate--> next`.
    #[inline]
    pub fn realized_cost(&self, state: usize, slate: &Slate, next: usize) -> f64 {
        let base = self.catalog.cost(state);
        match self.catalog.cost_mode() {
            CostMode::StateOnly => base,
            CostMode::SlatePenalty { penalty } => {
                if slate.contains(next) {
                    base
                } else {
                    base + penalty
                }
            }
        }
    }

    /// Expected one-step cost `c(s, w)` given the next-state distribution `probs`
    /// of `(state, slate)`.
    pub fn expected_cost_with(&self, state: usize, slate: &Slate, probs: &[f64]) -> f64 {
        let base = self.catalog.cost(state);
        match self.catalog.cost_mode() {
            CostMode::StateOnly => base,
            CostMode::SlatePenalty { penalty } => {
                let follow: f64 = slate.items().iter().map(|&j| probs[j]).sum();
                base + penalty * (1.0 - follow)
            }
        }
    }

    pub fn expected_cost(&self, state: usize, slate: &Slate) -> f64 {
        let probs = self.user.choice_distribution(state, slate);
        self.expected_cost_with(state, slate, &probs)
    }
}
