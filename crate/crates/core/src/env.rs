//! Tree-growth environment.
//!
//! A rollout grows one tree in DFS order, asking a sampler for an action at
//! every open leaf. Each action is an independent one-step decision: once the
//! tree is complete its reward is the negated, scaled time/space objective of
//! the subtree that action produced.
//!
//! # Observation layout
//!
//! | bits      | content                                                    |
//! |-----------|------------------------------------------------------------|
//! | 0..208    | per dimension: region lo then hi, MSB first (32/32/16/16/8) |
//! | 208..288  | per dimension: one-hot min level then one-hot max level (8 each) |
//! | 288..321  | one-hot EffiCuts partition id (slot 0 = none, 1 + signature) |
//! | 321..326  | dimension-head mask                                         |
//! | 326..338  | operation-head mask                                         |

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ruleset::{Dim, RuleSet, NUM_DIMS};
use crate::tree::{
    Action, Cost, DecisionTree, ForcedReason, NodeId, TreeError, CUT_SIZES, DEFAULT_BINTH,
};

pub const NUM_LEVELS: usize = crate::tree::COVERAGE_LEVELS.len();
/// 5 cut sizes, 6 simple-partition levels (2%..64%), 1 EffiCuts partition.
pub const NUM_OPS: usize = 12;
const SIMPLE_OP_BASE: usize = 5;
const EFFICUTS_OP: usize = 11;

pub const RANGE_BITS: usize = 2 * (32 + 32 + 16 + 16 + 8);
pub const PARTITION_BITS: usize = NUM_DIMS * 2 * NUM_LEVELS;
pub const EFFICUTS_BITS: usize = 33;
pub const MASK_BITS: usize = NUM_DIMS + NUM_OPS;
pub const OBS_LEN: usize = RANGE_BITS + PARTITION_BITS + EFFICUTS_BITS + MASK_BITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardScale {
    Linear,
    Log,
}

impl RewardScale {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            RewardScale::Linear => x,
            RewardScale::Log => x.max(1.0).ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    None,
    Simple,
    Efficuts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Weight on time versus space, in `[0, 1]`.
    pub c: f64,
    pub reward_scale: RewardScale,
    pub max_actions: usize,
    pub max_depth: u32,
    pub binth: usize,
    pub partition: PartitionMode,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            c: 1.0,
            reward_scale: RewardScale::Linear,
            max_actions: 15_000,
            max_depth: 100,
            binth: DEFAULT_BINTH,
            partition: PartitionMode::None,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(format!("c = {} is outside [0, 1]", self.c));
        }
        if self.max_actions == 0 || self.max_depth == 0 {
            return Err("truncation limits must be positive".into());
        }
        Ok(())
    }

    /// `c * f(time) + (1 - c) * f(space)`; lower is better.
    pub fn objective(&self, cost: Cost) -> f64 {
        let f = self.reward_scale;
        self.c * f.apply(cost.time as f64) + (1.0 - self.c) * f.apply(cost.space as f64)
    }
}

/// Two-headed action: a dimension and an operation index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionSpec {
    pub dim: usize,
    pub op: usize,
}

impl ActionSpec {
    pub fn decode(self) -> Action {
        let dim = Dim::from_index(self.dim).expect("dimension index in range");
        match self.op {
            op @ 0..SIMPLE_OP_BASE => Action::Cut {
                dim,
                k: CUT_SIZES[op],
            },
            op @ SIMPLE_OP_BASE..EFFICUTS_OP => Action::PartitionSimple {
                dim,
                level: (op - SIMPLE_OP_BASE + 1) as u8,
            },
            EFFICUTS_OP => Action::PartitionEffiCuts,
            op => panic!("operation index {op} out of range"),
        }
    }

    pub fn encode(action: Action) -> ActionSpec {
        match action {
            Action::Cut { dim, k } => ActionSpec {
                dim: dim.index(),
                op: CUT_SIZES
                    .iter()
                    .position(|&c| c == k)
                    .expect("standard cut size"),
            },
            Action::PartitionSimple { dim, level } => {
                assert!(
                    (1..=6).contains(&level),
                    "simple partition action levels are 1..=6"
                );
                ActionSpec {
                    dim: dim.index(),
                    op: SIMPLE_OP_BASE + level as usize - 1,
                }
            }
            Action::PartitionEffiCuts => ActionSpec {
                dim: 0,
                op: EFFICUTS_OP,
            },
        }
    }
}

/// Independent per-head masks; the joint mask is their product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMask {
    pub dims: [bool; NUM_DIMS],
    pub ops: [bool; NUM_OPS],
}

impl ActionMask {
    pub fn allows(&self, spec: ActionSpec) -> bool {
        spec.dim < NUM_DIMS && spec.op < NUM_OPS && self.dims[spec.dim] && self.ops[spec.op]
    }

    pub fn all() -> Self {
        ActionMask {
            dims: [true; NUM_DIMS],
            ops: [true; NUM_OPS],
        }
    }
}

/// Legal actions at an open leaf, or `None` when nothing can be applied.
pub fn valid_action_mask(tree: &DecisionTree, id: NodeId, cfg: &EnvConfig) -> Option<ActionMask> {
    let node = &tree.nodes[id];
    let dims = Dim::ALL.map(|d| node.region.width(d) >= 2);
    if !dims.iter().any(|&d| d) {
        return None;
    }
    let mut ops = [false; NUM_OPS];
    ops[..SIMPLE_OP_BASE].fill(true);
    if id == tree.root {
        match cfg.partition {
            PartitionMode::None => {}
            PartitionMode::Simple => ops[SIMPLE_OP_BASE..EFFICUTS_OP].fill(true),
            PartitionMode::Efficuts => ops[EFFICUTS_OP] = true,
        }
    }
    Some(ActionMask { dims, ops })
}

/// Fixed-length 0/1 node encoding.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation(pub Vec<u8>);

impl Observation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn write_f64(&self, out: &mut [f64]) {
        for (o, &b) in out.iter_mut().zip(&self.0) {
            *o = f64::from(b);
        }
    }
}

pub fn encode_observation(tree: &DecisionTree, id: NodeId, mask: &ActionMask) -> Observation {
    let node = &tree.nodes[id];
    let mut bits = Vec::with_capacity(OBS_LEN);
    for d in Dim::ALL {
        let iv = node.region.get(d);
        for v in [iv.lo, iv.hi] {
            bits.extend((0..d.bits()).rev().map(|b| ((v >> b) & 1) as u8));
        }
    }
    for (lo, hi) in node.partition.bounds {
        for level in [lo, hi] {
            bits.extend((0..NUM_LEVELS).map(|i| u8::from(i == level as usize)));
        }
    }
    let slot = node.partition.efficuts_id.map_or(0, |s| 1 + s as usize);
    bits.extend((0..EFFICUTS_BITS).map(|i| u8::from(i == slot)));
    bits.extend(mask.dims.iter().map(|&m| u8::from(m)));
    bits.extend(mask.ops.iter().map(|&m| u8::from(m)));
    debug_assert_eq!(bits.len(), OBS_LEN);
    Observation(bits)
}

/// What the sampler knew when it chose an action; PPO needs it for ratios and clipping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Behaviour {
    pub probs_dim: [f64; NUM_DIMS],
    pub probs_op: [f64; NUM_OPS],
    pub value: f64,
}

impl Behaviour {
    /// Point mass on `spec`, zero value estimate.
    pub fn deterministic(spec: ActionSpec) -> Self {
        let mut probs_dim = [0.0; NUM_DIMS];
        let mut probs_op = [0.0; NUM_OPS];
        probs_dim[spec.dim] = 1.0;
        probs_op[spec.op] = 1.0;
        Behaviour {
            probs_dim,
            probs_op,
            value: 0.0,
        }
    }

    pub fn log_prob(&self, spec: ActionSpec) -> f64 {
        self.probs_dim[spec.dim].ln() + self.probs_op[spec.op].ln()
    }
}

pub trait ActionSampler {
    fn sample(&mut self, obs: &Observation, mask: &ActionMask) -> (ActionSpec, Behaviour);
}

/// Uniform over the unmasked entries of each head.
pub struct UniformSampler<R> {
    pub rng: R,
}

impl<R: rand::Rng> ActionSampler for UniformSampler<R> {
    fn sample(&mut self, _obs: &Observation, mask: &ActionMask) -> (ActionSpec, Behaviour) {
        let dims: Vec<usize> = (0..NUM_DIMS).filter(|&i| mask.dims[i]).collect();
        let ops: Vec<usize> = (0..NUM_OPS).filter(|&i| mask.ops[i]).collect();
        let spec = ActionSpec {
            dim: dims[self.rng.random_range(0..dims.len())],
            op: ops[self.rng.random_range(0..ops.len())],
        };
        let mut b = Behaviour {
            probs_dim: [0.0; NUM_DIMS],
            probs_op: [0.0; NUM_OPS],
            value: 0.0,
        };
        for &d in &dims {
            b.probs_dim[d] = 1.0 / dims.len() as f64;
        }
        for &o in &ops {
            b.probs_op[o] = 1.0 / ops.len() as f64;
        }
        (spec, b)
    }
}

/// Scripted sampler driven by a closure.
pub struct FnSampler<F>(pub F);

impl<F: FnMut(&Observation, &ActionMask) -> ActionSpec> ActionSampler for FnSampler<F> {
    fn sample(&mut self, obs: &Observation, mask: &ActionMask) -> (ActionSpec, Behaviour) {
        let spec = (self.0)(obs, mask);
        (spec, Behaviour::deterministic(spec))
    }
}

/// One node's decision and, once the tree is complete, its reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub obs: Observation,
    pub mask: ActionMask,
    pub action: ActionSpec,
    pub behaviour: Behaviour,
    pub node: NodeId,
    /// Rollout this experience came from, assigned by the collector.
    pub rollout: u64,
    pub reward: Option<f64>,
    pub cost: Option<Cost>,
}

#[derive(Debug, thiserror::Error)]
pub enum RolloutError {
    #[error("sampler emitted masked action {0:?}")]
    MaskedAction(ActionSpec),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Clone, Debug)]
pub struct Rollout {
    pub tree: DecisionTree,
    pub experiences: Vec<Experience>,
    pub truncated: bool,
}

/// Grows a tree from a fresh root, DFS, until no open leaf remains or a limit hits.
pub fn run_rollout(
    rules: &Arc<RuleSet>,
    cfg: &EnvConfig,
    sampler: &mut dyn ActionSampler,
) -> Result<Rollout, RolloutError> {
    let mut tree = DecisionTree::new(rules.clone(), cfg.binth);
    let mut experiences = Vec::new();
    let mut truncated = false;
    let mut stack = vec![tree.root];
    while let Some(id) = stack.pop() {
        if tree.is_terminal(id) {
            continue;
        }
        if experiences.len() >= cfg.max_actions {
            truncated = true;
            tree.force_leaf(id, ForcedReason::ActionLimit);
            for &rest in &stack {
                if !tree.is_terminal(rest) {
                    tree.force_leaf(rest, ForcedReason::ActionLimit);
                }
            }
            break;
        }
        if tree.nodes[id].depth >= cfg.max_depth {
            truncated = true;
            tree.force_leaf(id, ForcedReason::DepthLimit);
            continue;
        }
        let Some(mask) = valid_action_mask(&tree, id, cfg) else {
            log::debug!("node {id} has no valid action; forcing leaf");
            tree.force_leaf(id, ForcedReason::Unsplittable);
            continue;
        };
        let obs = encode_observation(&tree, id, &mask);
        let (spec, behaviour) = sampler.sample(&obs, &mask);
        if !mask.allows(spec) {
            return Err(RolloutError::MaskedAction(spec));
        }
        let children = tree.apply(id, spec.decode())?;
        stack.extend(children.into_iter().rev());
        experiences.push(Experience {
            obs,
            mask,
            action: spec,
            behaviour,
            node: id,
            rollout: 0,
            reward: None,
            cost: None,
        });
    }
    Ok(Rollout {
        tree,
        experiences,
        truncated,
    })
}

/// Subtree costs with truncation penalties: leaves forced by the action or depth
/// limit are charged the worst unpenalized subtree time seen in the tree.
pub fn penalized_costs(tree: &DecisionTree) -> Result<Vec<Cost>, TreeError> {
    let plain = tree.subtree_costs()?;
    let worst = plain.iter().map(|c| c.time).max().unwrap_or(0).max(1);
    tree.subtree_costs_with(|reason| match reason {
        ForcedReason::ActionLimit | ForcedReason::DepthLimit => worst,
        ForcedReason::Unsplittable | ForcedReason::Inseparable => 0,
    })
}

/// Attaches `R = -(c f(T) + (1 - c) f(S))` of each experience's own subtree.
pub fn finalize_rewards(
    tree: &DecisionTree,
    mut experiences: Vec<Experience>,
    cfg: &EnvConfig,
) -> Result<Vec<Experience>, TreeError> {
    let costs = penalized_costs(tree)?;
    for e in &mut experiences {
        let cost = costs[e.node];
        e.cost = Some(cost);
        e.reward = Some(-cfg.objective(cost));
    }
    Ok(experiences)
}
