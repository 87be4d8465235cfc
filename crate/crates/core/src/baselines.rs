//! Heuristic tree builders used as comparison anchors.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ruleset::{Dim, RuleSet};
use crate::tree::{
    cut_child_counts, largeness_signature, DecisionTree, ForcedReason, NodeId, PartitionState,
    Region, TreeError, CUT_SIZES, DEFAULT_BINTH,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiCutsParams {
    /// Space-measure factor: a cut is acceptable while `sum(child rules) + k <= spfac * rules`.
    pub spfac: f64,
    pub max_cuts_per_node: u32,
    pub binth: usize,
    /// Building fails once the tree (or forest) holds more nodes than this.
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
}

/// Small binth values on overlapping rules can need tens of millions of nodes.
pub const DEFAULT_MAX_NODES: usize = 2_000_000;

fn default_max_nodes() -> usize {
    DEFAULT_MAX_NODES
}

impl Default for HiCutsParams {
    fn default() -> Self {
        HiCutsParams {
            spfac: 1.0,
            max_cuts_per_node: 32,
            binth: DEFAULT_BINTH,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

impl HiCutsParams {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.spfac.is_nan()
            || self.spfac <= 0.0
            || !(2..=32).contains(&self.max_cuts_per_node)
            || self.max_nodes == 0
        {
            return Err(TreeError::Malformed(format!(
                "invalid HiCuts parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Dimension with the most distinct clipped rule endpoints, skipping dimensions
/// that are unit-width or that every rule covers completely.
fn pick_dimension(tree: &DecisionTree, id: NodeId) -> Option<Dim> {
    let node = &tree.nodes[id];
    let mut best: Option<(usize, Dim)> = None;
    for dim in Dim::ALL {
        let iv = node.region.get(dim);
        if iv.len() < 2 {
            continue;
        }
        let mut ends = HashSet::new();
        let mut separating = false;
        for &r in &node.rules {
            let clip = tree.rules.rules[r as usize]
                .range(dim)
                .intersect(&iv)
                .expect("rule intersects node");
            separating |= clip != iv;
            ends.insert(clip.lo);
            ends.insert(clip.hi);
        }
        if separating && best.is_none_or(|(n, _)| ends.len() > n) {
            best = Some((ends.len(), dim));
        }
    }
    best.map(|(_, d)| d)
}

fn pick_cuts(tree: &DecisionTree, id: NodeId, dim: Dim, params: &HiCutsParams) -> u32 {
    let node = &tree.nodes[id];
    let budget = params.spfac * node.rules.len() as f64;
    let width = node.region.width(dim);
    for &k in CUT_SIZES.iter().rev() {
        if k > params.max_cuts_per_node {
            continue;
        }
        let eff = u64::from(k).min(width);
        let counts = cut_child_counts(&tree.rules, &node.rules, &node.region, dim, k);
        let measure = counts.iter().sum::<usize>() as f64 + eff as f64;
        if measure <= budget {
            return k;
        }
    }
    2
}

/// Grows `tree` until every leaf is terminal; `budget` caps its node count.
fn grow_hicuts(
    tree: &mut DecisionTree,
    params: &HiCutsParams,
    budget: usize,
) -> Result<(), TreeError> {
    let mut stack = vec![tree.root];
    while let Some(id) = stack.pop() {
        if tree.is_terminal(id) {
            continue;
        }
        let Some(dim) = pick_dimension(tree, id) else {
            tree.force_leaf(id, ForcedReason::Inseparable);
            continue;
        };
        let k = pick_cuts(tree, id, dim, params);
        let kids = tree.apply_cut(id, dim, k)?;
        if tree.nodes.len() > budget {
            return Err(TreeError::TooLarge(params.max_nodes));
        }
        stack.extend(kids.into_iter().rev());
    }
    Ok(())
}

/// HiCuts-style tree: one dimension per node, fan-out bounded by the space measure.
pub fn build_hicuts(rs: Arc<RuleSet>, params: &HiCutsParams) -> Result<DecisionTree, TreeError> {
    params.validate()?;
    if rs.is_empty() {
        return Err(TreeError::Malformed(
            "cannot build a tree over an empty rule set".into(),
        ));
    }
    let mut tree = DecisionTree::new(rs, params.binth);
    grow_hicuts(&mut tree, params, params.max_nodes)?;
    Ok(tree)
}

/// EffiCuts-style forest: rules grouped by largeness signature, one HiCuts tree per group.
pub fn build_efficuts_baseline(
    rs: Arc<RuleSet>,
    params: &HiCutsParams,
) -> Result<Vec<DecisionTree>, TreeError> {
    params.validate()?;
    if rs.is_empty() {
        return Err(TreeError::Malformed(
            "cannot build a tree over an empty rule set".into(),
        ));
    }
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); 32];
    for (i, r) in rs.rules.iter().enumerate() {
        groups[largeness_signature(r) as usize].push(i as u32);
    }
    let mut forest = Vec::new();
    let mut used = 0;
    for (sig, ids) in groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
    {
        let partition = PartitionState {
            efficuts_id: Some(sig as u8),
            ..PartitionState::default()
        };
        let mut tree =
            DecisionTree::with_root(rs.clone(), params.binth, Region::full(), ids, partition);
        grow_hicuts(&mut tree, params, params.max_nodes.saturating_sub(used))?;
        used += tree.nodes.len();
        if used > params.max_nodes {
            return Err(TreeError::TooLarge(params.max_nodes));
        }
        forest.push(tree);
    }
    Ok(forest)
}
