//! Packet classification with decision trees.
//!
//! Trees are grown three ways: the HiCuts-style heuristic, an EffiCuts-style
//! separable partition followed by per-partition cutting, and a stochastic
//! policy trained with PPO over a branching tree-growth environment. Every
//! tree can be checked against the linear-scan matcher and costed for lookup
//! time (internal nodes traversed) and memory (bytes per rule).

pub mod baselines;
pub mod env;
pub mod export;
pub mod nn;
pub mod ppo;
pub mod ruleset;
pub mod stats;
pub mod synth;
pub mod train;
pub mod tree;

pub use baselines::{build_efficuts_baseline, build_hicuts, HiCutsParams, DEFAULT_MAX_NODES};
pub use env::{
    finalize_rewards, run_rollout, ActionMask, ActionSampler, ActionSpec, EnvConfig, Experience,
    Observation, PartitionMode, RewardScale, Rollout,
};
pub use nn::{PolicyOutput, PolicyParams};
pub use ppo::{Algorithm, PpoLearner, TrainConfig, UpdateDiagnostics};
pub use ruleset::{Dim, Interval, Packet, ParseError, Rule, RuleSet, NUM_DIMS};
pub use stats::{tree_stats, StatsReport};
pub use train::{train, train_from, Checkpoint, TrainError, TrainOutcome, TrainReport};
pub use tree::{
    Action, Cost, DecisionTree, ForcedReason, MemoryModel, Node, NodeId, NodeKind, Region,
    TreeError,
};
