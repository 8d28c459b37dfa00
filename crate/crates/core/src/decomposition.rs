//! Item-level marginals of a slate policy and numeric checks of the
//! decomposed Bellman equations.
//!
//! For a policy `pi` and item `j` at state `s`:
//!
//! * `r(s,j) = sum_{w ∋ j} pi_s(w)` is the recommendation frequency,
//! * `P(s'|s,j) = (1/r) sum_{w ∋ j} pi_s(w) P[s'|s,w]` the item-conditional transition,
//! * `c(s,j) = (1/r) sum_{w ∋ j} pi_s(w) c(s,w)` the marginal cost,
//! * `Q(s,j) = (1/r) sum_{w ∋ j} pi_s(w) Q(s,w)` the state-item value.
//!
//! All of them are undefined where `r(s,j) = 0`; such pairs are masked, never
//! filled with sentinels.

use serde::Serialize;

use crate::agents::greedy_slate;
use crate::catalog::CostMode;
use crate::error::{Error, Result};
use crate::exact::{self, ExactSolution};
use crate::mdp::SlateMdp;
use crate::policy::RandomizedPolicy;
use crate::slate::Slate;
use crate::tables::{ItemQTable, SlateQTable};

/// Frequencies at or below this are treated as zero.
const FREQ_EPS: f64 = 0.0;

#[derive(Debug, Clone)]
pub struct ItemMarginals {
    k: usize,
    frequencies: Vec<f64>,
    item_transitions: Vec<Option<Vec<f64>>>,
    item_costs: Vec<f64>,
    defined: Vec<bool>,
}

impl ItemMarginals {
    pub fn frequency(&self, state: usize, item: usize) -> f64 {
        self.frequencies[state * self.k + item]
    }

    pub fn is_defined(&self, state: usize, item: usize) -> bool {
        self.defined[state * self.k + item]
    }

    pub fn transition(&self, state: usize, item: usize) -> Option<&[f64]> {
        self.item_transitions[state * self.k + item].as_deref()
    }

    pub fn cost(&self, state: usize, item: usize) -> Option<f64> {
        self.is_defined(state, item).then(|| self.item_costs[state * self.k + item])
    }
}

/// `r(s, j)` as a `K x K` row-major table.
pub fn item_frequencies(policy: &RandomizedPolicy) -> Vec<Vec<f64>> {
    let k = policy.catalog_size();
    (0..k)
        .map(|s| {
            let mut row = vec![0.0; k];
            for (w, p) in policy.support(s) {
                for &j in w.items() {
                    row[j] += p;
                }
            }
            row
        })
        .collect()
}

fn frequency(policy: &RandomizedPolicy, state: usize, item: usize) -> f64 {
    policy
        .support(state)
        .iter()
        .filter(|(w, _)| w.contains(item))
        .map(|(_, p)| p)
        .sum()
}

fn require_defined(policy: &RandomizedPolicy, state: usize, item: usize) -> Result<f64> {
    let r = frequency(policy, state, item);
    if r > FREQ_EPS {
        Ok(r)
    } else {
        Err(Error::UndefinedMarginal { state, item })
    }
}

/// `P(. | s, j)` under `policy`.
pub fn item_transition(mdp: &SlateMdp, policy: &RandomizedPolicy, state: usize, item: usize) -> Result<Vec<f64>> {
    let r = require_defined(policy, state, item)?;
    let k = mdp.num_items();
    let mut acc = vec![0.0; k];
    let mut buf = vec![0.0; k];
    for (w, p) in policy.support(state).iter().filter(|(w, _)| w.contains(item)) {
        mdp.user().choice_into(state, w, &mut buf);
        for (a, q) in acc.iter_mut().zip(&buf) {
            *a += p * q;
        }
    }
    acc.iter_mut().for_each(|a| *a /= r);
    Ok(acc)
}

/// Marginal cost `c(s, j)`. Equal to `c(s)` whenever the cost ignores the slate.
pub fn item_costs(mdp: &SlateMdp, policy: &RandomizedPolicy, state: usize, item: usize) -> Result<f64> {
    let r = require_defined(policy, state, item)?;
    match mdp.cost_mode() {
        CostMode::StateOnly => Ok(mdp.catalog().cost(state)),
        CostMode::SlatePenalty { .. } => {
            let total: f64 = policy
                .support(state)
                .iter()
                .filter(|(w, _)| w.contains(item))
                .map(|(w, p)| p * mdp.expected_cost(state, w))
                .sum();
            Ok(total / r)
        }
    }
}

/// All marginals of a policy at once.
pub fn item_marginals(mdp: &SlateMdp, policy: &RandomizedPolicy) -> ItemMarginals {
    let k = mdp.num_items();
    let freqs = item_frequencies(policy);
    let mut frequencies = Vec::with_capacity(k * k);
    let mut item_transitions = Vec::with_capacity(k * k);
    let mut costs = Vec::with_capacity(k * k);
    let mut defined = Vec::with_capacity(k * k);
    for (s, row) in freqs.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            frequencies.push(r);
            let ok = r > FREQ_EPS;
            defined.push(ok);
            item_transitions.push(ok.then(|| item_transition(mdp, policy, s, j).expect("frequency checked")));
            costs.push(if ok {
                item_costs(mdp, policy, s, j).expect("frequency checked")
            } else {
                f64::NAN
            });
        }
    }
    ItemMarginals {
        k,
        frequencies,
        item_transitions,
        item_costs: costs,
        defined,
    }
}

/// State-item values of `policy` from its slate values, masked where `r(s,j) = 0`.
pub fn state_item_q(policy: &RandomizedPolicy, slate_q: &SlateQTable) -> ItemQTable {
    let k = policy.catalog_size();
    let mut weighted = vec![0.0; k * k];
    let mut freq = vec![0.0; k * k];
    for s in 0..k {
        for (w, p) in policy.support(s) {
            let q = slate_q.get(s, w);
            for &j in w.items() {
                weighted[s * k + j] += p * q;
                freq[s * k + j] += p;
            }
        }
    }
    let defined: Vec<bool> = freq.iter().map(|&r| r > FREQ_EPS).collect();
    let values = weighted
        .iter()
        .zip(&freq)
        .zip(&defined)
        .map(|((&wq, &r), &d)| if d { wq / r } else { f64::NAN })
        .collect();
    ItemQTable::from_parts(k, values, defined).expect("sizes match")
}

/// Max over defined `(s, j)` of
/// `|Q(s,j) - c(s,j) - discount * sum_s' P(s'|s,j) (1/N) sum_k r(s',k) Q(s',k)|`,
/// with `Q(s, w)` from the exact linear-solve policy evaluation.
pub fn verify_theorem1(mdp: &SlateMdp, policy: &RandomizedPolicy, discount: f64) -> Result<f64> {
    let exact = exact::policy_evaluation(mdp, policy, discount)?;
    let item_q = state_item_q(policy, &exact.slate_q);
    let marg = item_marginals(mdp, policy);
    let k = mdp.num_items();
    let n = mdp.slate_size() as f64;
    let next_value: Vec<f64> = (0..k)
        .map(|t| {
            (0..k)
                .filter(|&j| item_q.is_defined(t, j))
                .map(|j| marg.frequency(t, j) * item_q.get(t, j))
                .sum::<f64>()
                / n
        })
        .collect();
    let mut worst = 0.0f64;
    for s in 0..k {
        for j in 0..k {
            if !marg.is_defined(s, j) {
                continue;
            }
            let p = marg.transition(s, j).expect("defined");
            let future: f64 = p.iter().zip(&next_value).map(|(a, b)| a * b).sum();
            let c = marg.cost(s, j).expect("defined");
            worst = worst.max((item_q.get(s, j) - c - discount * future).abs());
        }
    }
    Ok(worst)
}

/// Entrywise residual of `sum_{w ∋ j} pi_s(w) P[s'|s,w] = r(s,j) P(s'|s,j)` over
/// all defined pairs.
pub fn verify_property1(mdp: &SlateMdp, policy: &RandomizedPolicy) -> f64 {
    let k = mdp.num_items();
    let freqs = item_frequencies(policy);
    let mut buf = vec![0.0; k];
    let mut worst = 0.0f64;
    for (s, freq_row) in freqs.iter().enumerate() {
        for (j, &r) in freq_row.iter().enumerate() {
            let Ok(pj) = item_transition(mdp, policy, s, j) else {
                continue;
            };
            let mut lhs = vec![0.0; k];
            for (w, p) in policy.support(s) {
                if !w.contains(j) {
                    continue;
                }
                mdp.user().choice_into(s, w, &mut buf);
                for t in 0..k {
                    lhs[t] += p * buf[t];
                }
            }
            for (l, p) in lhs.iter().zip(&pj) {
                worst = worst.max((l - r * p).abs());
            }
        }
    }
    worst
}

/// Residual between `P(.|s,j)` and the mixture `sum_{w ∋ j} P[.|s,w] P(w|s,j)`
/// with `P(w|s,j) = pi_s(w) / r(s,j)`.
pub fn verify_property3(mdp: &SlateMdp, policy: &RandomizedPolicy, state: usize, item: usize) -> Result<f64> {
    let direct = item_transition(mdp, policy, state, item)?;
    let freqs = item_frequencies(policy);
    let r = freqs[state][item];
    let k = mdp.num_items();
    let mut mixture = vec![0.0; k];
    for (w, p) in policy.support(state).iter().filter(|(w, _)| w.contains(item)) {
        let weight = p / r;
        let probs = mdp.user().choice_distribution(state, w);
        for (m, q) in mixture.iter_mut().zip(probs) {
            *m += q * weight;
        }
    }
    Ok(direct
        .iter()
        .zip(&mixture)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// The optimal slate policy and its decomposed value table.
///
/// Entries on the optimal slate hold `Q(s, w*(s)) = V*(s)`. Off-slate entries have
/// zero frequency under the optimal policy and are not pinned down by the
/// optimality system; they are filled with the uniform average of `Q*(s, w)` over
/// the slates containing the item, which is one admissible convex combination.
#[derive(Debug, Clone)]
pub struct OptimalDecomposition {
    pub solution: ExactSolution,
    pub evaluation: ExactSolution,
    pub optimal_slates: Vec<Slate>,
    pub item_q: ItemQTable,
}

pub fn optimal_decomposition(mdp: &SlateMdp, discount: f64, threshold: f64) -> Result<OptimalDecomposition> {
    let solution = exact::value_iteration(mdp, discount, threshold)?;
    let optimal_slates = solution.optimal_slates.clone().expect("value iteration fills slates");
    let k = mdp.num_items();
    let n = mdp.slate_size();
    let policy = RandomizedPolicy::deterministic(k, n, optimal_slates.clone())?;
    let evaluation = exact::policy_evaluation(mdp, &policy, discount)?;
    let on_slate = state_item_q(&policy, &evaluation.slate_q);

    let mut values = vec![0.0; k * k];
    let mut defined = vec![true; k * k];
    for s in 0..k {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (r, w) in mdp.space().enumerate(s).iter().enumerate() {
            let q = evaluation.slate_q.get_rank(s, r);
            for &j in w.items() {
                sums[j] += q;
                counts[j] += 1;
            }
        }
        for j in 0..k {
            values[s * k + j] = if j == s {
                defined[s * k + j] = false;
                f64::NAN
            } else if on_slate.is_defined(s, j) {
                on_slate.get(s, j)
            } else {
                sums[j] / counts[j] as f64
            };
        }
    }
    Ok(OptimalDecomposition {
        solution,
        evaluation,
        optimal_slates,
        item_q: ItemQTable::from_parts(k, values, defined)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem2Report {
    /// Max over `s`, `j in w*(s)` of the optimality-system residual.
    pub residual: f64,
    /// Max over `s`, `j in w*(s)` of `|Q(s,j) - V*(s)|`.
    pub on_slate_spread: f64,
    /// Max over `s` of `|min_l Q(s,l) - V*(s)|`.
    pub min_gap: f64,
    /// Whether the `N` smallest entries of every row are exactly `w*(s)`.
    pub greedy_matches_optimal: bool,
    /// States whose optimal slate is not unique (another slate within 1e-9).
    pub tied_states: Vec<usize>,
}

/// Checks `Q(s,j) = c(s,j) + discount * sum_s' P(s'|s,j) min_l Q(s',l)` for
/// `j in w*(s)` on the decomposed optimal table, plus the on-slate structure.
pub fn verify_theorem2(mdp: &SlateMdp, discount: f64) -> Result<Theorem2Report> {
    let dec = optimal_decomposition(mdp, discount, exact::DEFAULT_THRESHOLD)?;
    let k = mdp.num_items();
    let v_star = &dec.evaluation.values;
    let row_min: Vec<f64> = (0..k).map(|s| dec.item_q.min_valid(s)).collect();
    let mut residual = 0.0f64;
    let mut spread = 0.0f64;
    let mut min_gap = 0.0f64;
    let mut greedy_ok = true;
    let mut tied = Vec::new();
    for s in 0..k {
        let w = &dec.optimal_slates[s];
        let p = mdp.user().choice_distribution(s, w);
        let c = mdp.expected_cost_with(s, w, &p);
        let future: f64 = p.iter().zip(&row_min).map(|(a, b)| a * b).sum();
        for &j in w.items() {
            let q = dec.item_q.get(s, j);
            residual = residual.max((q - c - discount * future).abs());
            spread = spread.max((q - v_star[s]).abs());
        }
        min_gap = min_gap.max((row_min[s] - v_star[s]).abs());
        if &greedy_slate(dec.item_q.row(s), s, mdp.slate_size()) != w {
            greedy_ok = false;
        }
        let (best_rank, best) = dec.evaluation.slate_q.argmin(s);
        if dec
            .evaluation
            .slate_q
            .row(s)
            .iter()
            .enumerate()
            .any(|(r, &q)| r != best_rank && (q - best).abs() <= 1e-9)
        {
            tied.push(s);
        }
    }
    Ok(Theorem2Report {
        residual,
        on_slate_spread: spread,
        min_gap,
        greedy_matches_optimal: greedy_ok,
        tied_states: tied,
    })
}
