//! Outer training loop: parallel rollouts from a parameter snapshot, reward
//! finalization, one learner update per batch, best-tree tracking.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{
    finalize_rewards, penalized_costs, run_rollout, EnvConfig, Experience, Rollout, RolloutError,
    OBS_LEN,
};
use crate::nn::{PolicyParams, PolicySampler};
use crate::ppo::{PpoError, PpoLearner, TrainConfig, UpdateDiagnostics};
use crate::ruleset::RuleSet;
use crate::stats::tree_stats;
use crate::tree::{DecisionTree, TreeError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid environment config: {0}")]
    Env(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("cannot train on an empty rule set")]
    EmptyRules,
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Update(#[from] PpoError),
}

/// Best tree seen so far, summarized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestTree {
    pub rollout: u64,
    /// `c f(T) + (1 - c) f(S)` with truncation penalties; lower is better.
    pub objective: f64,
    pub time: u64,
    pub bytes: u64,
    pub bytes_per_rule: f64,
    pub truncated: bool,
}

impl BestTree {
    /// Complete trees always rank above truncated ones; within a class the
    /// lower objective wins and ties keep the earlier tree.
    pub fn is_beaten_by(&self, truncated: bool, objective: f64) -> bool {
        match (self.truncated, truncated) {
            (true, false) => true,
            (false, true) => false,
            _ => objective < self.objective,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub rollouts: usize,
    pub timesteps: usize,
    pub mean_reward: f64,
    /// Mean root reward over this iteration's rollouts.
    pub mean_root_reward: f64,
    pub truncated_rollouts: usize,
    pub best_truncated: bool,
    pub best_objective: f64,
    pub best_time: u64,
    pub best_bytes_per_rule: f64,
    pub entropy: f64,
    pub kl: f64,
    pub kl_coeff: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    TimestepBudget,
    RolloutBudget,
    /// A complete tree reached the configured target objective.
    TargetReached,
    /// The root was already terminal; there is nothing to learn.
    TrivialRuleSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub env: EnvConfig,
    pub config: TrainConfig,
    pub iterations: Vec<IterationMetrics>,
    pub best: Option<BestTree>,
    pub total_rollouts: usize,
    pub total_timesteps: usize,
    pub stop: StopReason,
    /// Wall-clock seconds per iteration. Not reproducible, so excluded from
    /// [`TrainReport::same_results`].
    pub wall_clock: Vec<f64>,
}

impl TrainReport {
    /// Equality ignoring wall-clock timings.
    pub fn same_results(&self, other: &TrainReport) -> bool {
        TrainReport {
            wall_clock: Vec::new(),
            ..self.clone()
        } == TrainReport {
            wall_clock: Vec::new(),
            ..other.clone()
        }
    }

    pub const CSV_HEADER: &'static str =
        "iteration,rollouts,timesteps,mean_reward,mean_root_reward,truncated_rollouts,best_truncated,best_objective,best_time,best_bytes_per_rule,entropy,kl,kl_coeff,loss";

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for m in &self.iterations {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                m.iteration,
                m.rollouts,
                m.timesteps,
                m.mean_reward,
                m.mean_root_reward,
                m.truncated_rollouts,
                m.best_truncated,
                m.best_objective,
                m.best_time,
                m.best_bytes_per_rule,
                m.entropy,
                m.kl,
                m.kl_coeff,
                m.loss
            ));
        }
        out
    }
}

pub struct TrainOutcome {
    pub report: TrainReport,
    pub best_tree: Option<DecisionTree>,
    /// Experiences (with rewards) of the rollout that produced `best_tree`.
    pub best_experiences: Vec<Experience>,
    pub learner: PpoLearner,
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Learner state plus the environment it was trained in.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub env: EnvConfig,
    pub learner: PpoLearner,
}

impl Checkpoint {
    pub fn new(env: &EnvConfig, learner: &PpoLearner) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            env: env.clone(),
            learner: learner.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(format!("unsupported checkpoint version {}", ck.version));
        }
        if ck.learner.params.data.len()
            != PolicyParams::num_params(ck.learner.params.input, &ck.learner.params.hidden)
        {
            return Err("checkpoint parameter count does not match its layer sizes".into());
        }
        if ck.learner.params.input != OBS_LEN {
            return Err(format!(
                "checkpoint expects {} inputs, environment produces {OBS_LEN}",
                ck.learner.params.input
            ));
        }
        Ok(ck)
    }
}

/// Seed for rollout `index` of a run; independent of worker count and scheduling.
fn rollout_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index + 1);
    rng
}

fn update_rng(seed: u64, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(iteration as u64);
    rng
}

struct Finished {
    index: u64,
    rollout: Rollout,
    experiences: Vec<Experience>,
    objective: f64,
}

fn one_rollout(
    rules: &Arc<RuleSet>,
    env: &EnvConfig,
    params: &PolicyParams,
    seed: u64,
    index: u64,
) -> Result<Finished, TrainError> {
    let mut sampler = PolicySampler {
        params,
        rng: rollout_rng(seed, index),
    };
    let rollout = run_rollout(rules, env, &mut sampler)?;
    let root_cost = penalized_costs(&rollout.tree)?[rollout.tree.root];
    let mut experiences = finalize_rewards(&rollout.tree, rollout.experiences.clone(), env)?;
    for e in &mut experiences {
        e.rollout = index;
    }
    Ok(Finished {
        index,
        objective: env.objective(root_cost),
        rollout,
        experiences,
    })
}

/// Trains a policy from freshly initialized parameters.
pub fn train(
    rules: Arc<RuleSet>,
    env: &EnvConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = PolicyParams::init(OBS_LEN, &cfg.hidden, &mut rng);
    train_from(rules, env, PpoLearner::new(params, cfg.clone()))
}

/// Continues training an existing learner (its config carries the budgets).
pub fn train_from(
    rules: Arc<RuleSet>,
    env: &EnvConfig,
    mut learner: PpoLearner,
) -> Result<TrainOutcome, TrainError> {
    let cfg = learner.cfg.clone();
    env.validate().map_err(TrainError::Env)?;
    cfg.validate().map_err(TrainError::Config)?;
    if rules.is_empty() {
        return Err(TrainError::EmptyRules);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| TrainError::Pool(e.to_string()))?;

    let mut report = TrainReport {
        env: env.clone(),
        config: cfg.clone(),
        iterations: Vec::new(),
        best: None,
        total_rollouts: 0,
        total_timesteps: 0,
        stop: StopReason::TimestepBudget,
        wall_clock: Vec::new(),
    };
    let mut best_tree: Option<DecisionTree> = None;
    let mut best_experiences = Vec::new();
    let rollout_cap = cfg.max_rollouts.unwrap_or(usize::MAX);

    'outer: loop {
        let started = Instant::now();
        let mut batch: Vec<Experience> = Vec::new();
        let mut finished_here = 0usize;
        let mut truncated_here = 0usize;
        let mut root_reward_sum = 0.0;
        while batch.len() < cfg.batch_size && report.total_rollouts < rollout_cap {
            let round = cfg.workers.min(rollout_cap - report.total_rollouts);
            let first = report.total_rollouts as u64;
            let params = &learner.params;
            let results: Vec<Result<Finished, TrainError>> = pool.install(|| {
                (first..first + round as u64)
                    .into_par_iter()
                    .map(|i| one_rollout(&rules, env, params, cfg.seed, i))
                    .collect()
            });
            for r in results {
                // Surplus rollouts from the last round are dropped so batches do
                // not depend on the worker count.
                if batch.len() >= cfg.batch_size {
                    break;
                }
                let f = r?;
                report.total_rollouts += 1;
                finished_here += 1;
                truncated_here += usize::from(f.rollout.truncated);
                root_reward_sum -= f.objective;
                if report
                    .best
                    .as_ref()
                    .is_none_or(|b| b.is_beaten_by(f.rollout.truncated, f.objective))
                {
                    let stats = tree_stats(std::slice::from_ref(&f.rollout.tree))?;
                    report.best = Some(BestTree {
                        rollout: f.index,
                        objective: f.objective,
                        time: stats.time,
                        bytes: stats.bytes,
                        bytes_per_rule: stats.bytes_per_rule,
                        truncated: f.rollout.truncated,
                    });
                    best_tree = Some(f.rollout.tree);
                    best_experiences.clone_from(&f.experiences);
                }
                if f.experiences.is_empty() {
                    report.stop = StopReason::TrivialRuleSet;
                    report.wall_clock.push(started.elapsed().as_secs_f64());
                    break 'outer;
                }
                batch.extend(f.experiences);
            }
        }
        if batch.is_empty() {
            report.stop = StopReason::RolloutBudget;
            break;
        }
        let mut upd_rng = update_rng(cfg.seed, report.iterations.len());
        let diag: UpdateDiagnostics = learner.update(&batch, &mut upd_rng)?;
        report.total_timesteps += batch.len();
        let best = report.best.as_ref().expect("at least one rollout finished");
        report.iterations.push(IterationMetrics {
            iteration: report.iterations.len(),
            rollouts: finished_here,
            timesteps: batch.len(),
            mean_reward: batch.iter().map(|e| e.reward.unwrap_or(0.0)).sum::<f64>()
                / batch.len() as f64,
            mean_root_reward: root_reward_sum / finished_here.max(1) as f64,
            truncated_rollouts: truncated_here,
            best_truncated: best.truncated,
            best_objective: best.objective,
            best_time: best.time,
            best_bytes_per_rule: best.bytes_per_rule,
            entropy: diag.entropy,
            kl: diag.kl,
            kl_coeff: diag.kl_coeff,
            loss: diag.loss.total,
        });
        report.wall_clock.push(started.elapsed().as_secs_f64());
        log::info!(
            "iter {} rollouts {} steps {} mean root reward {:.3} best objective {:.3} (time {}, {:.1} B/rule) kl {:.4}",
            report.iterations.len() - 1,
            report.total_rollouts,
            report.total_timesteps,
            root_reward_sum / finished_here.max(1) as f64,
            best.objective,
            best.time,
            best.bytes_per_rule,
            diag.kl
        );
        if cfg
            .target_objective
            .is_some_and(|t| !best.truncated && best.objective <= t)
        {
            report.stop = StopReason::TargetReached;
            break;
        }
        if report.total_timesteps >= cfg.total_timesteps {
            report.stop = StopReason::TimestepBudget;
            break;
        }
        if report.total_rollouts >= rollout_cap {
            report.stop = StopReason::RolloutBudget;
            break;
        }
    }
    Ok(TrainOutcome {
        report,
        best_tree,
        best_experiences,
        learner,
    })
}
