//! Stationary slate policies.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::slate::{Slate, SlateSpace};

const PROB_SUM_TOL: f64 = 1e-12;

/// Per-state distribution over `A(s)` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedPolicy {
    k: usize,
    n: usize,
    support: Vec<Vec<(Slate, f64)>>,
}

impl RandomizedPolicy {
    pub fn new(k: usize, n: usize, support: Vec<Vec<(Slate, f64)>>) -> Result<Self> {
        if support.len() != k {
            return Err(Error::Domain(format!(
                "policy covers {} states, catalog has {k}",
                support.len()
            )));
        }
        for (s, row) in support.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Domain(format!("policy has empty support at state {s}")));
            }
            let mut seen = BTreeSet::new();
            let mut total = 0.0;
            for (slate, p) in row {
                slate.validate(k, s, n)?;
                if !seen.insert(slate) {
                    return Err(Error::Domain(format!("slate {slate} listed twice at state {s}")));
                }
                if !p.is_finite() || *p < 0.0 {
                    return Err(Error::Domain(format!("invalid probability {p} at state {s}")));
                }
                total += p;
            }
            if (total - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::Domain(format!(
                    "probabilities at state {s} sum to {total}, not 1"
                )));
            }
        }
        Ok(RandomizedPolicy { k, n, support })
    }

    /// The policy that always recommends `slates[s]` at state `s`.
    pub fn deterministic(k: usize, n: usize, slates: Vec<Slate>) -> Result<Self> {
        Self::new(k, n, slates.into_iter().map(|w| vec![(w, 1.0)]).collect())
    }

    /// Uniform over every slate of every `A(s)`. Enumerates the full action sets.
    pub fn uniform(space: &SlateSpace) -> Self {
        let k = space.catalog_size();
        let support = (0..k)
            .map(|s| {
                let all = space.enumerate(s);
                let p = 1.0 / all.len() as f64;
                all.into_iter().map(|w| (w, p)).collect()
            })
            .collect();
        RandomizedPolicy {
            k,
            n: space.slate_size(),
            support,
        }
    }

    /// Random test policy: up to `max_support` distinct slates per state drawn
    /// uniformly, weighted by a symmetric Dirichlet(1) draw.
    pub fn random<R: Rng + ?Sized>(space: &SlateSpace, max_support: usize, rng: &mut R) -> Self {
        let k = space.catalog_size();
        let cap = (max_support.max(1) as u64).min(space.slates_per_state()) as usize;
        let support = (0..k)
            .map(|s| {
                let m = rng.random_range(1..=cap);
                let mut slates = BTreeSet::new();
                while slates.len() < m {
                    slates.insert(space.sample_uniform(s, rng));
                }
                let weights: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let total: f64 = weights.iter().sum();
                slates
                    .into_iter()
                    .zip(weights)
                    .map(|(w, x)| (w, x / total))
                    .collect()
            })
            .collect();
        RandomizedPolicy {
            k,
            n: space.slate_size(),
            support,
        }
    }

    pub fn catalog_size(&self) -> usize {
        self.k
    }

    pub fn slate_size(&self) -> usize {
        self.n
    }

    pub fn support(&self, state: usize) -> &[(Slate, f64)] {
        &self.support[state]
    }

    /// The single slate at `state` if the policy is deterministic there.
    pub fn deterministic_slate(&self, state: usize) -> Option<&Slate> {
        match self.support[state].as_slice() {
            [(w, p)] if *p == 1.0 => Some(w),
            _ => None,
        }
    }
}
