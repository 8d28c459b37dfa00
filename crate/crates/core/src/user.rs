//! Synthetic Markovian user-choice models.
//!
//! Each model gives the exact next-item distribution `P[s' | s, w]` and a
//! sampler drawing from that same distribution. None of them looks at the
//! recommending policy: the choice depends only on the current item and the
//! slate on screen.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::RandomizedPolicy;
use crate::slate::Slate;

/// Where a User-3 goes when the slate holds no required item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionPool {
    /// Uniform over all `K` items.
    #[default]
    Catalog,
    /// Uniform over the items outside the required set.
    ExcludeRequired,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UserVariant {
    /// Follows the slate with probability `alpha` (uniform pick), otherwise
    /// picks uniformly from the whole catalog.
    User1 { alpha: f64 },
    /// Like `User1`, but never picks an item of `excluded`, in either branch.
    User2 { alpha: f64, excluded: Vec<usize> },
    /// Picks uniformly from the slate iff it contains an item of `required`.
    User3 {
        required: Vec<usize>,
        rejection: RejectionPool,
    },
}

#[derive(Debug, Clone)]
pub struct UserModel {
    k: usize,
    variant: UserVariant,
    // membership in X (User-2) or Y (User-3)
    marked: Vec<bool>,
    // items reachable through the library branch
    library: Vec<usize>,
}

impl UserModel {
    pub fn new(k: usize, variant: UserVariant) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("catalog size {k} must be at least 2")));
        }
        let mut marked = vec![false; k];
        let mut mark = |ids: &[usize], what: &str| -> Result<()> {
            for &id in ids {
                if id >= k {
                    return Err(Error::Config(format!("{what} item {id} outside catalog of size {k}")));
                }
                marked[id] = true;
            }
            Ok(())
        };
        let check_alpha = |alpha: f64| {
            if (0.0..=1.0).contains(&alpha) {
                Ok(())
            } else {
                Err(Error::Config(format!("retention probability {alpha} outside [0, 1]")))
            }
        };
        match &variant {
            UserVariant::User1 { alpha } => check_alpha(*alpha)?,
            UserVariant::User2 { alpha, excluded } => {
                check_alpha(*alpha)?;
                mark(excluded, "excluded")?;
            }
            UserVariant::User3 { required, .. } => {
                if required.is_empty() {
                    return Err(Error::Config("User-3 needs a non-empty required set".into()));
                }
                mark(required, "required")?;
            }
        }
        let library: Vec<usize> = match &variant {
            UserVariant::User1 { .. } => (0..k).collect(),
            UserVariant::User2 { .. } => (0..k).filter(|&j| !marked[j]).collect(),
            UserVariant::User3 { rejection, .. } => match rejection {
                RejectionPool::Catalog => (0..k).collect(),
                RejectionPool::ExcludeRequired => (0..k).filter(|&j| !marked[j]).collect(),
            },
        };
        if library.is_empty() {
            return Err(Error::Config(
                "user model leaves no item reachable outside the slate".into(),
            ));
        }
        Ok(UserModel {
            k,
            variant,
            marked,
            library,
        })
    }

    pub fn user1(k: usize, alpha: f64) -> Result<Self> {
        Self::new(k, UserVariant::User1 { alpha })
    }

    pub fn user2(k: usize, alpha: f64, excluded: Vec<usize>) -> Result<Self> {
        Self::new(k, UserVariant::User2 { alpha, excluded })
    }

    pub fn user3(k: usize, required: Vec<usize>, rejection: RejectionPool) -> Result<Self> {
        Self::new(k, UserVariant::User3 { required, rejection })
    }

    pub fn catalog_size(&self) -> usize {
        self.k
    }

    pub fn variant(&self) -> &UserVariant {
        &self.variant
    }

    /// Writes `P[. | s, slate]` into `out` (length `K`).
    pub fn choice_into(&self, _state: usize, slate: &Slate, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.k);
        out.fill(0.0);
        let lib_share = |mass: f64, out: &mut [f64]| {
            let p = mass / self.library.len() as f64;
            for &j in &self.library {
                out[j] += p;
            }
        };
        match &self.variant {
            UserVariant::User1 { alpha } => {
                lib_share(1.0 - alpha, out);
                let p = alpha / slate.len() as f64;
                for &j in slate.items() {
                    out[j] += p;
                }
            }
            UserVariant::User2 { alpha, .. } => {
                let wanted = slate.items().iter().filter(|&&j| !self.marked[j]).count();
                if wanted == 0 {
                    // nothing acceptable on screen: the retention mass goes to the library
                    lib_share(1.0, out);
                } else {
                    lib_share(1.0 - alpha, out);
                    let p = alpha / wanted as f64;
                    for &j in slate.items() {
                        if !self.marked[j] {
                            out[j] += p;
                        }
                    }
                }
            }
            UserVariant::User3 { .. } => {
                if self.accepts(slate) {
                    let p = 1.0 / slate.len() as f64;
                    for &j in slate.items() {
                        out[j] = p;
                    }
                } else {
                    lib_share(1.0, out);
                }
            }
        }
    }

    /// Exact next-state distribution for `(s, slate)`.
    pub fn choice_distribution(&self, state: usize, slate: &Slate) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.choice_into(state, slate, &mut out);
        out
    }

    fn accepts(&self, slate: &Slate) -> bool {
        slate.items().iter().any(|&j| self.marked[j])
    }

    /// One draw from `choice_distribution(state, slate)`.
    pub fn sample_next_state<R: Rng + ?Sized>(&self, _state: usize, slate: &Slate, rng: &mut R) -> usize {
        let items = slate.items();
        match &self.variant {
            UserVariant::User1 { alpha } => {
                if rng.random::<f64>() < *alpha {
                    items[rng.random_range(0..items.len())]
                } else {
                    rng.random_range(0..self.k)
                }
            }
            UserVariant::User2 { alpha, .. } => {
                let wanted = items.iter().filter(|&&j| !self.marked[j]).count();
                if wanted > 0 && rng.random::<f64>() < *alpha {
                    let pick = rng.random_range(0..wanted);
                    *items
                        .iter()
                        .filter(|&&j| !self.marked[j])
                        .nth(pick)
                        .expect("pick < wanted")
                } else {
                    self.library[rng.random_range(0..self.library.len())]
                }
            }
            UserVariant::User3 { .. } => {
                if self.accepts(slate) {
                    items[rng.random_range(0..items.len())]
                } else {
                    self.library[rng.random_range(0..self.library.len())]
                }
            }
        }
    }

    /// `K x K` matrix with row `s = sum_w pi_s(w) P[. | s, w]`.
    pub fn transition_matrix_for_policy(&self, policy: &RandomizedPolicy) -> DMatrix<f64> {
        let k = self.k;
        let mut m = DMatrix::zeros(k, k);
        let mut buf = vec![0.0; k];
        for s in 0..k {
            for (slate, p) in policy.support(s) {
                self.choice_into(s, slate, &mut buf);
                for (t, q) in buf.iter().enumerate() {
                    m[(s, t)] += p * q;
                }
            }
        }
        m
    }
}
