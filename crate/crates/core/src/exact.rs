//! Brute-force ground truth over the full slate action space.
//!
//! Everything here enumerates `A(s)` for every state, so it only runs on
//! instances below [`MAX_STATE_SLATE_PAIRS`](crate::tables::MAX_STATE_SLATE_PAIRS).
//! The one exception is [`evaluate_values`], which needs only the `K x K`
//! transition matrix of the policy and therefore works at any scale.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::agents::greedy_slate;
use crate::error::{Error, Result};
use crate::mdp::SlateMdp;
use crate::policy::RandomizedPolicy;
use crate::slate::Slate;
use crate::tables::{check_capacity, ItemQTable, SlateQTable};

/// Default sup-norm convergence threshold on `||V - V*||`.
pub const DEFAULT_THRESHOLD: f64 = 1e-12;
const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub slate_q: SlateQTable,
    pub values: Vec<f64>,
    /// Argmin slate per state, lowest rank on ties. Value iteration only.
    pub optimal_slates: Option<Vec<Slate>>,
    pub iterations: usize,
    pub final_delta: f64,
    /// Sup-norm change of every sweep, in order.
    pub deltas: Vec<f64>,
}

/// Summary written by the `solve-exact` command.
#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub values: Vec<f64>,
    pub optimal_slates: Vec<Slate>,
    pub iterations: usize,
    pub final_delta: f64,
    /// `max_s |V(s) - min_w [c(s,w) + discount * E V(s')]|` at the returned values.
    pub bellman_residual: f64,
}

fn check_discount(discount: f64) -> Result<()> {
    if (0.0..1.0).contains(&discount) {
        Ok(())
    } else {
        Err(Error::Config(format!("discount {discount} outside [0, 1)")))
    }
}

fn check_policy(mdp: &SlateMdp, policy: &RandomizedPolicy) -> Result<()> {
    if policy.catalog_size() != mdp.num_items() || policy.slate_size() != mdp.slate_size() {
        return Err(Error::Config(format!(
            "policy over K={}, N={} does not match instance K={}, N={}",
            policy.catalog_size(),
            policy.slate_size(),
            mdp.num_items(),
            mdp.slate_size()
        )));
    }
    Ok(())
}

/// `c(s, w) + discount * sum_s' P[s'|s,w] V(s')`.
fn backup(mdp: &SlateMdp, state: usize, slate: &Slate, values: &[f64], discount: f64, buf: &mut [f64]) -> f64 {
    mdp.user().choice_into(state, slate, buf);
    let future: f64 = buf.iter().zip(values).map(|(p, v)| p * v).sum();
    mdp.expected_cost_with(state, slate, buf) + discount * future
}

/// Policy transition matrix and expected one-step cost vector.
fn policy_dynamics(mdp: &SlateMdp, policy: &RandomizedPolicy) -> (DMatrix<f64>, DVector<f64>) {
    let k = mdp.num_items();
    let p = mdp.user().transition_matrix_for_policy(policy);
    let c = DVector::from_iterator(
        k,
        (0..k).map(|s| {
            policy
                .support(s)
                .iter()
                .map(|(w, pi)| pi * mdp.expected_cost(s, w))
                .sum::<f64>()
        }),
    );
    (p, c)
}

/// `V_pi` by a direct solve of `(I - discount P_pi) V = c_pi`.
pub fn evaluate_values(mdp: &SlateMdp, policy: &RandomizedPolicy, discount: f64) -> Result<Vec<f64>> {
    check_discount(discount)?;
    check_policy(mdp, policy)?;
    let k = mdp.num_items();
    let (p, c) = policy_dynamics(mdp, policy);
    let a = DMatrix::identity(k, k) - p * discount;
    let v = a.lu().solve(&c).ok_or(Error::Singular)?;
    Ok(v.iter().copied().collect())
}

/// `V_pi` by successive approximation. Independent of the linear solve.
pub fn evaluate_values_iterative(
    mdp: &SlateMdp,
    policy: &RandomizedPolicy,
    discount: f64,
    threshold: f64,
) -> Result<Vec<f64>> {
    check_discount(discount)?;
    check_policy(mdp, policy)?;
    let k = mdp.num_items();
    let (p, c) = policy_dynamics(mdp, policy);
    let mut v = vec![0.0; k];
    let mut next = vec![0.0; k];
    for _ in 0..MAX_SWEEPS {
        for s in 0..k {
            next[s] = c[s] + discount * (0..k).map(|t| p[(s, t)] * v[t]).sum::<f64>();
        }
        let delta = sup_diff(&next, &v);
        std::mem::swap(&mut v, &mut next);
        if delta <= stop_tolerance(threshold, discount, &v) {
            return Ok(v);
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_SWEEPS,
        delta: f64::NAN,
    })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// A sweep delta of d bounds the distance to the fixed point by d * discount / (1 - discount).
// Round-off puts a floor under the reachable delta, proportional to the magnitude of V.
fn stop_tolerance(threshold: f64, discount: f64, values: &[f64]) -> f64 {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 16.0 * f64::EPSILON * scale;
    if discount == 0.0 {
        f64::INFINITY
    } else {
        (threshold * (1.0 - discount) / discount).max(floor)
    }
}

/// Exact `Q_pi(s, w)` over every slate: linear solve for `V_pi`, then one backup.
pub fn policy_evaluation(mdp: &SlateMdp, policy: &RandomizedPolicy, discount: f64) -> Result<ExactSolution> {
    let space = check_capacity(mdp.num_items(), mdp.slate_size())?;
    let values = evaluate_values(mdp, policy, discount)?;
    let k = mdp.num_items();
    let mut buf = vec![0.0; k];
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|s| {
            space
                .enumerate(s)
                .iter()
                .map(|w| backup(mdp, s, w, &values, discount, &mut buf))
                .collect()
        })
        .collect();
    let slate_q = SlateQTable::from_rows(space, rows);
    let final_delta = (0..k)
        .map(|s| {
            let v: f64 = policy
                .support(s)
                .iter()
                .map(|(w, p)| p * slate_q.get(s, w))
                .sum();
            (v - values[s]).abs()
        })
        .fold(0.0, f64::max);
    Ok(ExactSolution {
        slate_q,
        values,
        optimal_slates: None,
        iterations: 1,
        final_delta,
        deltas: vec![final_delta],
    })
}

/// Value iteration over the full slate space with Jacobi sweeps.
///
/// Stops once a sweep changes `V` by at most `threshold * (1 - discount) / discount`,
/// so the returned values are within `threshold` of `V*` (up to round-off).
pub fn value_iteration(mdp: &SlateMdp, discount: f64, threshold: f64) -> Result<ExactSolution> {
    check_discount(discount)?;
    if threshold <= 0.0 || !threshold.is_finite() {
        return Err(Error::Config(format!("threshold {threshold} must be positive")));
    }
    let space = check_capacity(mdp.num_items(), mdp.slate_size())?;
    let k = mdp.num_items();
    let slates: Vec<Vec<Slate>> = (0..k).map(|s| space.enumerate(s)).collect();
    let mut buf = vec![0.0; k];
    let mut values = vec![0.0; k];
    let mut next = vec![0.0; k];
    let mut deltas = Vec::new();
    loop {
        for s in 0..k {
            next[s] = slates[s]
                .iter()
                .map(|w| backup(mdp, s, w, &values, discount, &mut buf))
                .fold(f64::INFINITY, f64::min);
        }
        let delta = sup_diff(&next, &values);
        std::mem::swap(&mut values, &mut next);
        deltas.push(delta);
        if delta <= stop_tolerance(threshold, discount, &values) {
            break;
        }
        if deltas.len() >= MAX_SWEEPS {
            return Err(Error::NotConverged {
                iterations: deltas.len(),
                delta,
            });
        }
    }
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|s| {
            slates[s]
                .iter()
                .map(|w| backup(mdp, s, w, &values, discount, &mut buf))
                .collect()
        })
        .collect();
    let slate_q = SlateQTable::from_rows(space, rows);
    let mut optimal = Vec::with_capacity(k);
    for s in 0..k {
        let (rank, best) = slate_q.argmin(s);
        values[s] = best;
        optimal.push(slates[s][rank].clone());
    }
    Ok(ExactSolution {
        slate_q,
        values,
        optimal_slates: Some(optimal),
        iterations: deltas.len(),
        final_delta: *deltas.last().expect("at least one sweep"),
        deltas,
    })
}

/// Value iteration plus the Bellman residual of the result, for reporting.
pub fn solve_report(mdp: &SlateMdp, discount: f64, threshold: f64) -> Result<ExactReport> {
    let sol = value_iteration(mdp, discount, threshold)?;
    let k = mdp.num_items();
    let mut buf = vec![0.0; k];
    let bellman_residual = (0..k)
        .map(|s| {
            let best = mdp
                .space()
                .enumerate(s)
                .iter()
                .map(|w| backup(mdp, s, w, &sol.values, discount, &mut buf))
                .fold(f64::INFINITY, f64::min);
            (best - sol.values[s]).abs()
        })
        .fold(0.0, f64::max);
    Ok(ExactReport {
        values: sol.values,
        optimal_slates: sol.optimal_slates.unwrap_or_default(),
        iterations: sol.iterations,
        final_delta: sol.final_delta,
        bellman_residual,
    })
}

/// The deterministic policy picking the `N` smallest entries of each row.
pub fn greedy_policy(item_q: &ItemQTable, slate_size: usize) -> Result<RandomizedPolicy> {
    let k = item_q.catalog_size();
    let slates = (0..k)
        .map(|s| greedy_slate(item_q.row(s), s, slate_size))
        .collect();
    RandomizedPolicy::deterministic(k, slate_size, slates)
}

/// Exact value of the greedy slate policy read off an item table.
pub fn evaluate_policy_of_item_table(item_q: &ItemQTable, mdp: &SlateMdp, discount: f64) -> Result<Vec<f64>> {
    if item_q.catalog_size() != mdp.num_items() {
        return Err(Error::Config("item table does not match the catalog".into()));
    }
    let policy = greedy_policy(item_q, mdp.slate_size())?;
    evaluate_values(mdp, &policy, discount)
}
