//! Episode simulation and experiment execution.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::agents::{Agent, AgentConfig, Algorithm};
use crate::error::{Error, Result};
use crate::exact;
use crate::harness::config::{ExperimentConfig, ReturnMode, StartState};
use crate::harness::metrics::{smooth, tail_mean};
use crate::mdp::SlateMdp;
use crate::slate::Slate;

pub const CSV_HEADER: &str = "episode,agent,user,seed,return,length,updates";

/// Stable 64-bit seed from a base seed and a list of labels.
pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub state: usize,
    pub slate: Slate,
    pub cost: f64,
    pub next: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub ret: f64,
    pub length: usize,
    pub updates: usize,
}

/// One episode: the agent recommends epsilon-greedily, the user moves, the cost
/// is realized and the agent learns; after every step the episode ends with
/// probability `1 - discount`.
pub fn run_episode<R: Rng + ?Sized>(
    mdp: &SlateMdp,
    agent: &mut Agent,
    discount: f64,
    start: StartState,
    mode: ReturnMode,
    rng: &mut R,
    mut transcript: Option<&mut Vec<Transition>>,
) -> EpisodeOutcome {
    let mut state = match start {
        StartState::Uniform => rng.random_range(0..mdp.num_items()),
        StartState::Fixed(s) => s,
    };
    let mut slate = agent.act(state);
    let mut ret = 0.0;
    let mut weight = 1.0;
    let mut length = 0;
    let mut updates = 0;
    loop {
        let next = mdp.user().sample_next_state(state, &slate, rng);
        let cost = mdp.realized_cost(state, &slate, next);
        ret += weight * cost;
        if mode == ReturnMode::Discounted {
            weight *= discount;
        }
        // the bootstrap slate is drawn even when the episode is about to end
        let next_slate = agent.act(next);
        updates += agent.update(state, &slate, cost, next, &next_slate);
        length += 1;
        if let Some(t) = transcript.as_deref_mut() {
            t.push(Transition {
                state,
                slate: slate.clone(),
                cost,
                next,
            });
        }
        if rng.random::<f64>() >= discount {
            break;
        }
        state = next;
        slate = next_slate;
    }
    EpisodeOutcome { ret, length, updates }
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub episode: usize,
    pub greedy_values: Vec<f64>,
    pub greedy_value_mean: f64,
}

/// Everything one `(agent, user, replicate)` cell produced.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub agent: String,
    pub algorithm: Algorithm,
    pub user: String,
    pub replicate: usize,
    pub seed: u64,
    pub returns: Vec<f64>,
    pub lengths: Vec<u32>,
    pub updates: Vec<u32>,
    pub snapshots: Vec<Snapshot>,
    pub final_greedy_values: Vec<f64>,
    pub final_agent: Agent,
}

impl CellResult {
    pub fn total_steps(&self) -> u64 {
        self.lengths.iter().map(|&l| l as u64).sum()
    }

    pub fn total_updates(&self) -> u64 {
        self.updates.iter().map(|&u| u as u64).sum()
    }

    pub fn final_greedy_mean(&self) -> f64 {
        mean(&self.final_greedy_values)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Simulation settings shared by every cell of an experiment.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub episodes: usize,
    pub discount: f64,
    pub start: StartState,
    pub return_mode: ReturnMode,
    pub eval_points: Vec<usize>,
}

/// Runs one learner for `plan.episodes` episodes. The environment stream and the
/// agent's exploration stream are both derived from `cell_seed`, so two agents
/// given the same `cell_seed` face the same start states and user draws as long
/// as they make the same recommendations.
pub fn run_cell(
    mdp: &SlateMdp,
    mut agent_config: AgentConfig,
    plan: &CellPlan,
    cell_seed: u64,
    labels: (&str, &str, usize),
) -> Result<CellResult> {
    agent_config.seed = derive_seed(cell_seed, &["agent"]);
    let algorithm = agent_config.algorithm;
    let mut agent = Agent::new(agent_config, mdp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cell_seed, &["env"]));
    let mut returns = Vec::with_capacity(plan.episodes);
    let mut lengths = Vec::with_capacity(plan.episodes);
    let mut updates = Vec::with_capacity(plan.episodes);
    let mut snapshots = Vec::new();
    let mut eval_points = plan.eval_points.clone();
    eval_points.sort_unstable();
    eval_points.dedup();
    let mut next_eval = eval_points.iter().peekable();
    for episode in 1..=plan.episodes {
        let out = run_episode(mdp, &mut agent, plan.discount, plan.start, plan.return_mode, &mut rng, None);
        returns.push(out.ret);
        lengths.push(out.length as u32);
        updates.push(out.updates as u32);
        if next_eval.peek() == Some(&&episode) {
            next_eval.next();
            let values = greedy_values(mdp, &agent, plan.discount)?;
            snapshots.push(Snapshot {
                episode,
                greedy_value_mean: mean(&values),
                greedy_values: values,
            });
        }
    }
    let final_greedy_values = greedy_values(mdp, &agent, plan.discount)?;
    Ok(CellResult {
        agent: labels.0.to_string(),
        algorithm,
        user: labels.1.to_string(),
        replicate: labels.2,
        seed: cell_seed,
        returns,
        lengths,
        updates,
        snapshots,
        final_greedy_values,
        final_agent: agent,
    })
}

/// Exact values of the agent's current greedy policy.
pub fn greedy_values(mdp: &SlateMdp, agent: &Agent, discount: f64) -> Result<Vec<f64>> {
    exact::evaluate_values(mdp, &agent.greedy_policy()?, discount)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub user: String,
    pub values: Vec<f64>,
    pub value_mean: f64,
    pub optimal_slates: Vec<Slate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub agent: String,
    pub user: String,
    pub replicate: usize,
    pub seed: u64,
    pub episodes: usize,
    pub total_steps: u64,
    pub total_updates: u64,
    pub mean_length: f64,
    /// Mean of the last `smoothing_window` episode returns.
    pub tail_mean: f64,
    pub final_smoothed: f64,
    pub final_greedy_value_mean: f64,
    pub final_greedy_values: Vec<f64>,
    /// `final_greedy_value_mean / oracle mean - 1`, when the oracle is tractable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub oracles: Vec<OracleSummary>,
    pub cells: Vec<CellSummary>,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
    pub oracles: Vec<OracleSummary>,
    pub notices: Vec<String>,
}

/// Runs every `(user, agent, replicate)` cell of the configuration, in that
/// nesting order. Vanilla learners on instances past the slate-table capacity
/// are skipped with a notice, as are oracle computations.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let catalog = config.catalog.build()?;
    let plan = CellPlan {
        episodes: config.episodes,
        discount: config.discount,
        start: config.start_state,
        return_mode: config.return_mode,
        eval_points: config.eval_points.clone(),
    };
    let mut cells = Vec::new();
    let mut oracles = Vec::new();
    let mut notices = Vec::new();
    for user_spec in &config.users {
        let user_label = user_spec.label();
        let user = user_spec.build(catalog.size())?;
        let mdp = SlateMdp::new(catalog.clone(), user, config.slate_size)?;
        match exact::value_iteration(&mdp, config.discount, config.solver_threshold) {
            Ok(sol) => oracles.push(OracleSummary {
                user: user_label.clone(),
                value_mean: mean(&sol.values),
                values: sol.values,
                optimal_slates: sol.optimal_slates.unwrap_or_default(),
            }),
            Err(e @ Error::Capacity { .. }) => {
                notices.push(format!("oracle skipped for {user_label}: {e}"));
            }
            Err(e) => return Err(e),
        }
        for agent_spec in &config.agents {
            let agent_label = agent_spec.label();
            let base = agent_spec.seed.unwrap_or(config.master_seed);
            for replicate in 0..config.replicates {
                let cell_seed = derive_seed(base, &[&user_label, &replicate.to_string()]);
                let agent_config = agent_spec.agent_config(config.discount, 0);
                match run_cell(&mdp, agent_config, &plan, cell_seed, (&agent_label, &user_label, replicate)) {
                    Ok(cell) => cells.push(cell),
                    Err(e @ Error::Capacity { .. }) => {
                        notices.push(format!("{agent_label} skipped for {user_label}: {e}"));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(ExperimentResult { cells, oracles, notices })
}

impl ExperimentResult {
    pub fn summary(&self, config: &ExperimentConfig) -> Summary {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let smoothed = smooth(&c.returns, config.smoothing_window);
                let oracle = self.oracles.iter().find(|o| o.user == c.user);
                CellSummary {
                    agent: c.agent.clone(),
                    user: c.user.clone(),
                    replicate: c.replicate,
                    seed: c.seed,
                    episodes: c.returns.len(),
                    total_steps: c.total_steps(),
                    total_updates: c.total_updates(),
                    mean_length: c.total_steps() as f64 / c.returns.len() as f64,
                    tail_mean: tail_mean(&c.returns, config.smoothing_window),
                    final_smoothed: *smoothed.last().expect("episodes > 0"),
                    final_greedy_value_mean: c.final_greedy_mean(),
                    final_greedy_values: c.final_greedy_values.clone(),
                    oracle_gap: oracle.map(|o| c.final_greedy_mean() / o.value_mean - 1.0),
                    snapshots: c.snapshots.clone(),
                }
            })
            .collect();
        Summary {
            master_seed: config.master_seed,
            config: config.clone(),
            oracles: self.oracles.clone(),
            cells,
            notices: self.notices.clone(),
        }
    }

    /// Writes one row per episode per cell, cells in run order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER.split(','))?;
        for c in &self.cells {
            let seed = c.seed.to_string();
            for (i, ((r, l), u)) in c.returns.iter().zip(&c.lengths).zip(&c.updates).enumerate() {
                w.write_record([
                    (i + 1).to_string().as_str(),
                    &c.agent,
                    &c.user,
                    &seed,
                    &r.to_string(),
                    &l.to_string(),
                    &u.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the experiment and writes `episodes.csv` and `summary.json` to `out_dir`.
pub fn run_to_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    let result = run_experiment(config)?;
    fs::create_dir_all(out_dir)?;
    result.write_csv(BufWriter::new(File::create(out_dir.join("episodes.csv"))?))?;
    let summary = result.summary(config);
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    fs::write(out_dir.join("summary.json"), json)?;
    Ok(summary)
}
