//! Slates and the combinatorics of the per-state action sets.
//!
//! A slate at state `s` is an unordered set of `n` distinct items drawn from
//! `[0, k) \ {s}`. Slates are kept in canonical (ascending) form, and the
//! action set of a state is indexed densely through the lexicographic
//! combinatorial number system.

use std::fmt;

use num_bigint::BigUint;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An unordered set of distinct item ids, stored sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Slate(Vec<usize>);

impl Slate {
    /// Builds a slate from any ordering of distinct ids.
    pub fn new(mut items: Vec<usize>) -> Result<Self> {
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("slate has duplicate items: {items:?}")));
        }
        Ok(Slate(items))
    }

    /// Caller guarantees the ids are strictly increasing.
    pub(crate) fn from_sorted_unchecked(items: Vec<usize>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Slate(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// Checks that this slate is a member of `A(excluded)` for a catalog of `k` items.
    pub fn validate(&self, k: usize, excluded: usize, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::Domain(format!(
                "slate {self} has {} items, expected {n}",
                self.0.len()
            )));
        }
        if let Some(&bad) = self.0.iter().find(|&&j| j >= k) {
            return Err(Error::Domain(format!("item {bad} outside catalog of size {k}")));
        }
        if self.contains(excluded) {
            return Err(Error::Domain(format!(
                "slate {self} contains the current item {excluded}"
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Slate {
    type Error = Error;

    fn try_from(items: Vec<usize>) -> Result<Self> {
        Slate::new(items)
    }
}

impl From<Slate> for Vec<usize> {
    fn from(slate: Slate) -> Self {
        slate.0
    }
}

impl fmt::Display for Slate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// Exact binomial coefficient `C(k, n)`, zero when `n > k`.
pub fn count_slates(k: u64, n: u64) -> BigUint {
    if n > k {
        return BigUint::from(0u32);
    }
    let n = n.min(k - n);
    let mut acc = BigUint::from(1u32);
    for i in 0..n {
        acc *= k - i;
        acc /= i + 1;
    }
    acc
}

/// Dense indexing of `A(s)` for a fixed catalog size and slate size.
///
/// Ranks follow the lexicographic order of the sorted item sequence, so rank 0
/// is the slate of the `n` smallest admissible ids.
#[derive(Debug, Clone)]
pub struct SlateSpace {
    k: usize,
    n: usize,
    // binom[a][b] = C(a, b) for a < k, b <= n
    binom: Vec<Vec<u64>>,
}

impl SlateSpace {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("catalog size {k} must be at least 2")));
        }
        if n == 0 || n > k - 1 {
            return Err(Error::Domain(format!(
                "slate size {n} must be in [1, {}] for a catalog of {k} items",
                k - 1
            )));
        }
        let mut binom = vec![vec![0u64; n + 1]; k];
        for a in 0..k {
            binom[a][0] = 1;
            for b in 1..=n.min(a) {
                let v = binom[a - 1][b - 1].checked_add(if b < a { binom[a - 1][b] } else { 0 });
                binom[a][b] = v.ok_or_else(|| {
                    Error::Domain(format!("C({a},{b}) overflows 64-bit slate ranks"))
                })?;
            }
        }
        Ok(SlateSpace { k, n, binom })
    }

    pub fn catalog_size(&self) -> usize {
        self.k
    }

    pub fn slate_size(&self) -> usize {
        self.n
    }

    /// `|A(s)| = C(k-1, n)`.
    pub fn slates_per_state(&self) -> u64 {
        self.binom[self.k - 1][self.n]
    }

    fn choose(&self, a: usize, b: usize) -> u64 {
        if b > a {
            0
        } else {
            self.binom[a][b]
        }
    }

    pub fn rank(&self, slate: &Slate, excluded: usize) -> Result<u64> {
        slate.validate(self.k, excluded, self.n)?;
        Ok(self.rank_unchecked(slate.items(), excluded))
    }

    /// Rank of a sorted, valid item sequence. No validation.
    pub(crate) fn rank_unchecked(&self, items: &[usize], excluded: usize) -> u64 {
        let m = self.k - 1;
        let n = self.n;
        let mut rank = 0u64;
        let mut next = 0usize;
        for (i, &item) in items.iter().enumerate() {
            let c = if item > excluded { item - 1 } else { item };
            for v in next..c {
                rank += self.choose(m - 1 - v, n - 1 - i);
            }
            next = c + 1;
        }
        rank
    }

    pub fn unrank(&self, rank: u64, excluded: usize) -> Result<Slate> {
        if excluded >= self.k {
            return Err(Error::Domain(format!(
                "state {excluded} outside catalog of size {}",
                self.k
            )));
        }
        if rank >= self.slates_per_state() {
            return Err(Error::Domain(format!(
                "rank {rank} out of range for {} slates",
                self.slates_per_state()
            )));
        }
        Ok(self.unrank_unchecked(rank, excluded))
    }

    pub(crate) fn unrank_unchecked(&self, mut rank: u64, excluded: usize) -> Slate {
        let m = self.k - 1;
        let n = self.n;
        let mut items = Vec::with_capacity(n);
        let mut v = 0usize;
        for i in 0..n {
            loop {
                let block = self.choose(m - 1 - v, n - 1 - i);
                if rank < block {
                    break;
                }
                rank -= block;
                v += 1;
            }
            items.push(if v >= excluded { v + 1 } else { v });
            v += 1;
        }
        Slate::from_sorted_unchecked(items)
    }

    /// All slates of `A(excluded)` in rank order.
    pub fn enumerate(&self, excluded: usize) -> Vec<Slate> {
        let mut out = Vec::with_capacity(self.slates_per_state() as usize);
        let mut idx: Vec<usize> = (0..self.n).collect();
        let m = self.k - 1;
        let to_item = |x: usize| if x >= excluded { x + 1 } else { x };
        loop {
            out.push(Slate::from_sorted_unchecked(idx.iter().map(|&x| to_item(x)).collect()));
            // advance to the next n-combination of [0, m) in lexicographic order
            let mut i = self.n;
            while i > 0 && idx[i - 1] == m - self.n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return out;
            }
            i -= 1;
            idx[i] += 1;
            for t in i + 1..self.n {
                idx[t] = idx[t - 1] + 1;
            }
        }
    }

    /// Uniform draw over `A(excluded)`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, excluded: usize, rng: &mut R) -> Slate {
        let picked = index::sample(rng, self.k - 1, self.n);
        let mut items: Vec<usize> = picked
            .into_iter()
            .map(|x| if x >= excluded { x + 1 } else { x })
            .collect();
        items.sort_unstable();
        Slate::from_sorted_unchecked(items)
    }
}

/// All `C(k-1, n)` slates over `[0, k) \ {excluded}` in lexicographic order.
pub fn enumerate_slates(k: usize, excluded: usize, n: usize) -> Result<Vec<Slate>> {
    if excluded >= k {
        return Err(Error::Domain(format!("state {excluded} outside catalog of size {k}")));
    }
    Ok(SlateSpace::new(k, n)?.enumerate(excluded))
}

pub fn rank_slate(slate: &Slate, k: usize, excluded: usize) -> Result<u64> {
    SlateSpace::new(k, slate.len())?.rank(slate, excluded)
}

pub fn unrank_slate(rank: u64, k: usize, excluded: usize, n: usize) -> Result<Slate> {
    SlateSpace::new(k, n)?.unrank(rank, excluded)
}
