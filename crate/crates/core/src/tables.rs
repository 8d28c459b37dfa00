//! Tabular value storage: per-item `Q(s, j)` and per-slate `Q(s, w)`.

use crate::error::{Error, Result};
use crate::slate::{Slate, SlateSpace};

/// Largest number of `(state, slate)` pairs any dense slate table may hold.
pub const MAX_STATE_SLATE_PAIRS: u128 = 1_000_000;

/// Number of `(state, slate)` pairs, or a capacity error past the limit.
pub fn check_capacity(k: usize, n: usize) -> Result<SlateSpace> {
    let per_state = crate::slate::count_slates((k - 1) as u64, n as u64);
    let pairs = per_state * k as u64;
    let pairs: u128 = pairs.try_into().unwrap_or(u128::MAX);
    if pairs > MAX_STATE_SLATE_PAIRS {
        return Err(Error::Capacity {
            pairs,
            limit: MAX_STATE_SLATE_PAIRS,
        });
    }
    SlateSpace::new(k, n)
}

/// `K x K` table of state-item values, row = state, column = item.
///
/// Diagonal entries are never valid. Off-diagonal entries can additionally be
/// marked undefined (zero recommendation frequency in a marginal table).
#[derive(Debug, Clone, PartialEq)]
pub struct ItemQTable {
    k: usize,
    values: Vec<f64>,
    defined: Vec<bool>,
}

impl ItemQTable {
    pub fn new(k: usize, init: f64) -> Self {
        let defined = (0..k * k).map(|i| i / k != i % k).collect();
        ItemQTable {
            k,
            values: vec![init; k * k],
            defined,
        }
    }

    /// Table with explicit values and definedness; the diagonal is forced undefined.
    pub fn from_parts(k: usize, values: Vec<f64>, mut defined: Vec<bool>) -> Result<Self> {
        if values.len() != k * k || defined.len() != k * k {
            return Err(Error::Domain(format!("item table for {k} items needs {} entries", k * k)));
        }
        for s in 0..k {
            defined[s * k + s] = false;
        }
        Ok(ItemQTable { k, values, defined })
    }

    pub fn catalog_size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, state: usize, item: usize) -> f64 {
        self.values[state * self.k + item]
    }

    #[inline]
    pub fn set(&mut self, state: usize, item: usize, value: f64) {
        self.values[state * self.k + item] = value;
    }

    #[inline]
    pub fn is_defined(&self, state: usize, item: usize) -> bool {
        self.defined[state * self.k + item]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.k..(state + 1) * self.k]
    }

    /// Smallest defined entry of a row; the diagonal is skipped.
    pub fn min_valid(&self, state: usize) -> f64 {
        let base = state * self.k;
        let mut best = f64::INFINITY;
        for j in 0..self.k {
            if self.defined[base + j] && self.values[base + j] < best {
                best = self.values[base + j];
            }
        }
        best
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Dense `Q(s, w)` table over every slate of every state, indexed by slate rank.
#[derive(Debug, Clone)]
pub struct SlateQTable {
    space: SlateSpace,
    rows: Vec<Vec<f64>>,
}

impl SlateQTable {
    pub fn new(k: usize, n: usize, init: f64) -> Result<Self> {
        let space = check_capacity(k, n)?;
        let per_state = space.slates_per_state() as usize;
        Ok(SlateQTable {
            space,
            rows: vec![vec![init; per_state]; k],
        })
    }

    pub(crate) fn from_rows(space: SlateSpace, rows: Vec<Vec<f64>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() as u64 == space.slates_per_state()));
        SlateQTable { space, rows }
    }

    pub fn space(&self) -> &SlateSpace {
        &self.space
    }

    pub fn catalog_size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    /// Value of a slate assumed valid for `state`.
    pub fn get(&self, state: usize, slate: &Slate) -> f64 {
        self.rows[state][self.space.rank_unchecked(slate.items(), state) as usize]
    }

    pub fn get_rank(&self, state: usize, rank: usize) -> f64 {
        self.rows[state][rank]
    }

    pub fn set(&mut self, state: usize, slate: &Slate, value: f64) {
        let r = self.space.rank_unchecked(slate.items(), state) as usize;
        self.rows[state][r] = value;
    }

    /// Lowest-valued slate rank at `state`, ties broken by lowest rank.
    pub fn argmin(&self, state: usize) -> (usize, f64) {
        let mut best = (0, self.rows[state][0]);
        for (r, &v) in self.rows[state].iter().enumerate().skip(1) {
            if v < best.1 {
                best = (r, v);
            }
        }
        best
    }

    pub fn min(&self, state: usize) -> f64 {
        self.argmin(state).1
    }
}
