//! Decision-tree arena: regions, cut and partition actions, lookup, and the
//! per-subtree time/space recurrences.
//!
//! Time of a subtree is the number of internal nodes a lookup traverses in
//! the worst case. Cut nodes add one to the slowest child; partition nodes
//! add one to the sum of their children, since a lookup must visit every
//! partition. Space is the node's own bytes plus all children's bytes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ruleset::{Dim, Interval, Packet, Rule, RuleSet, NUM_DIMS};

pub type NodeId = usize;

/// Cut fan-outs available to every builder.
pub const CUT_SIZES: [u32; 5] = [2, 4, 8, 16, 32];

/// Coverage thresholds (percent) indexed by partition level.
pub const COVERAGE_LEVELS: [u32; 8] = [0, 2, 4, 8, 16, 32, 64, 100];
pub const TOP_LEVEL: u8 = (COVERAGE_LEVELS.len() - 1) as u8;

pub const DEFAULT_BINTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is not a leaf")]
    NotALeaf(NodeId),
    #[error("node {0} is terminal and cannot be split")]
    Terminal(NodeId),
    #[error("node {0} has unit width in {1} and cannot be cut")]
    UnitWidth(NodeId, Dim),
    #[error("cut size {0} is not one of 2, 4, 8, 16, 32")]
    BadCutSize(u32),
    #[error("partition level {0} out of range")]
    BadLevel(u8),
    #[error("EffiCuts partition is only valid at the root, not node {0}")]
    NotRoot(NodeId),
    #[error("subtree contains unbuilt non-terminal leaf {0}")]
    Unbuilt(NodeId),
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("tree exceeds the budget of {0} nodes")]
    TooLarge(usize),
}

/// Axis-aligned box of header space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region(pub [Interval; NUM_DIMS]);

impl Region {
    pub fn full() -> Self {
        Region(Dim::ALL.map(Interval::full))
    }

    #[inline]
    pub fn get(&self, dim: Dim) -> Interval {
        self.0[dim.index()]
    }

    #[inline]
    pub fn width(&self, dim: Dim) -> u64 {
        self.get(dim).len()
    }

    #[inline]
    pub fn contains(&self, pkt: &Packet) -> bool {
        self.0
            .iter()
            .zip(pkt.0.iter())
            .all(|(iv, &v)| iv.contains(v))
    }

    pub fn point(pkt: &Packet) -> Self {
        Region(pkt.0.map(Interval::point))
    }

    pub fn is_well_formed(&self) -> bool {
        Dim::ALL
            .iter()
            .all(|&d| self.get(d).lo <= self.get(d).hi && self.get(d).hi <= d.max_value())
    }
}

#[inline]
pub fn rule_intersects(rule: &Rule, region: &Region) -> bool {
    rule.ranges
        .iter()
        .zip(region.0.iter())
        .all(|(a, b)| a.overlaps(b))
}

/// A tree-growing action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Cut { dim: Dim, k: u32 },
    PartitionSimple { dim: Dim, level: u8 },
    PartitionEffiCuts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Leaf,
    Cut,
    Partition,
}

/// Why a leaf holds more than `binth` rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcedReason {
    /// Rollout hit its action budget.
    ActionLimit,
    /// Node reached the depth cap.
    DepthLimit,
    /// No valid action remains (unit width in every dimension).
    Unsplittable,
    /// Heuristic found no dimension in which the rules differ.
    Inseparable,
}

/// Partition bookkeeping carried into the observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionState {
    /// Per dimension, (min, max) coverage level the node's rules are known to lie within.
    pub bounds: [(u8, u8); NUM_DIMS],
    /// 5-bit largeness signature when the node descends from an EffiCuts partition.
    pub efficuts_id: Option<u8>,
}

impl Default for PartitionState {
    fn default() -> Self {
        PartitionState {
            bounds: [(0, TOP_LEVEL); NUM_DIMS],
            efficuts_id: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub region: Region,
    /// Indices into the rule set, ascending (so the first match is the best).
    pub rules: Vec<u32>,
    pub partition: PartitionState,
    pub depth: u32,
    pub kind: NodeKind,
    pub action: Option<Action>,
    pub children: Vec<NodeId>,
    pub forced: Option<ForcedReason>,
    /// Requested cut size when it exceeded the region width.
    pub clamped_from: Option<u32>,
    /// Partition that left every rule on one side.
    pub degenerate: bool,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Leaf
    }
}

/// Byte cost of nodes: a fixed header plus 4-byte references.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryModel {
    pub header: u64,
    pub child_ref: u64,
    pub rule_ref: u64,
}

impl Default for MemoryModel {
    fn default() -> Self {
        MemoryModel {
            header: 16,
            child_ref: 4,
            rule_ref: 4,
        }
    }
}

impl MemoryModel {
    pub fn node_bytes(&self, node: &Node) -> u64 {
        match node.kind {
            NodeKind::Leaf => self.header + self.rule_ref * node.rules.len() as u64,
            _ => self.header + self.child_ref * node.children.len() as u64,
        }
    }
}

/// Subtree time and space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub time: u64,
    pub space: u64,
}

#[derive(Clone, Debug)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub root: NodeId,
    pub binth: usize,
    pub memory: MemoryModel,
    pub rules: Arc<RuleSet>,
}

/// Sizes of the `k` near-equal pieces of `[lo, hi]`; the first `len mod k` get one extra unit.
pub fn split_bounds(iv: Interval, k: u32) -> Vec<Interval> {
    let len = iv.len();
    let k = u64::from(k).min(len);
    let base = len / k;
    let rem = len % k;
    let mut lo = u64::from(iv.lo);
    (0..k)
        .map(|i| {
            let w = base + u64::from(i < rem);
            let piece = Interval::new(lo as u32, (lo + w - 1) as u32);
            lo += w;
            piece
        })
        .collect()
}

/// Index of the piece of a near-equal `k`-way split of `iv` that holds `v`.
#[inline]
pub fn split_index(iv: Interval, k: u64, v: u32) -> usize {
    let len = iv.len();
    let base = len / k;
    let rem = len % k;
    let off = u64::from(v) - u64::from(iv.lo);
    let big = rem * (base + 1);
    if off < big {
        (off / (base + 1)) as usize
    } else {
        (rem + (off - big) / base) as usize
    }
}

/// Per-child rule counts for a prospective cut, without building nodes.
pub fn cut_child_counts(
    rules: &RuleSet,
    ids: &[u32],
    region: &Region,
    dim: Dim,
    k: u32,
) -> Vec<usize> {
    let iv = region.get(dim);
    let k = u64::from(k).min(iv.len());
    let mut diff = vec![0i64; k as usize + 1];
    for &r in ids {
        let rr = rules.rules[r as usize].range(dim);
        let Some(clip) = rr.intersect(&iv) else {
            continue;
        };
        diff[split_index(iv, k, clip.lo)] += 1;
        diff[split_index(iv, k, clip.hi) + 1] -= 1;
    }
    let mut acc = 0i64;
    diff[..k as usize]
        .iter()
        .map(|d| {
            acc += d;
            acc as usize
        })
        .collect()
}

/// `true` when `overlap / width >= percent / 100`, evaluated exactly.
#[inline]
pub(crate) fn coverage_at_least(overlap: u64, width: u64, percent: u32) -> bool {
    u128::from(overlap) * 100 >= u128::from(percent) * u128::from(width)
}

/// EffiCuts largeness signature: bit `d` set when the rule spans at least half of dimension `d`.
pub fn largeness_signature(rule: &Rule) -> u8 {
    Dim::ALL.iter().fold(0u8, |sig, &d| {
        if 2 * rule.range(d).len() >= d.domain_size() {
            sig | (1 << d.index())
        } else {
            sig
        }
    })
}

impl DecisionTree {
    /// Single-leaf tree over the full space holding every rule.
    pub fn new(rules: Arc<RuleSet>, binth: usize) -> Self {
        let ids = (0..rules.len() as u32).collect();
        Self::with_root(rules, binth, Region::full(), ids, PartitionState::default())
    }

    pub fn with_root(
        rules: Arc<RuleSet>,
        binth: usize,
        region: Region,
        rule_ids: Vec<u32>,
        partition: PartitionState,
    ) -> Self {
        let root = Node {
            id: 0,
            region,
            rules: rule_ids,
            partition,
            depth: 0,
            kind: NodeKind::Leaf,
            action: None,
            children: Vec::new(),
            forced: None,
            clamped_from: None,
            degenerate: false,
        };
        DecisionTree {
            nodes: vec![root],
            root: 0,
            binth,
            memory: MemoryModel::default(),
            rules,
        }
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, TreeError> {
        self.nodes.get(id).ok_or(TreeError::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_terminal(&self, id: NodeId) -> bool {
        self.nodes[id].rules.len() <= self.binth
    }

    /// Leaf that still needs an action: not terminal, not forced.
    pub fn is_open(&self, id: NodeId) -> bool {
        let n = &self.nodes[id];
        n.is_leaf() && n.forced.is_none() && !self.is_terminal(id)
    }

    pub fn force_leaf(&mut self, id: NodeId, reason: ForcedReason) {
        debug_assert!(self.nodes[id].is_leaf());
        self.nodes[id].forced = Some(reason);
    }

    fn check_splittable(&self, id: NodeId) -> Result<&Node, TreeError> {
        let n = self.node(id)?;
        if !n.is_leaf() {
            return Err(TreeError::NotALeaf(id));
        }
        if n.rules.len() <= self.binth {
            return Err(TreeError::Terminal(id));
        }
        Ok(n)
    }

    fn push_child(
        &mut self,
        parent: NodeId,
        region: Region,
        rules: Vec<u32>,
        partition: PartitionState,
    ) -> NodeId {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(Node {
            id,
            region,
            rules,
            partition,
            depth,
            kind: NodeKind::Leaf,
            action: None,
            children: Vec::new(),
            forced: None,
            clamped_from: None,
            degenerate: false,
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Splits a node's region into `k` near-equal pieces along `dim`.
    /// `k` larger than the region width is clamped to the width.
    pub fn apply_cut(&mut self, id: NodeId, dim: Dim, k: u32) -> Result<Vec<NodeId>, TreeError> {
        if !CUT_SIZES.contains(&k) {
            return Err(TreeError::BadCutSize(k));
        }
        let node = self.check_splittable(id)?;
        let iv = node.region.get(dim);
        if iv.len() < 2 {
            return Err(TreeError::UnitWidth(id, dim));
        }
        let eff_k = u64::from(k).min(iv.len()) as u32;
        let pieces = split_bounds(iv, eff_k);
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); pieces.len()];
        for &r in &node.rules {
            let rr = self.rules.rules[r as usize].range(dim);
            let clip = rr
                .intersect(&iv)
                .expect("node rules intersect the node region");
            let first = split_index(iv, u64::from(eff_k), clip.lo);
            let last = split_index(iv, u64::from(eff_k), clip.hi);
            for b in &mut buckets[first..=last] {
                b.push(r);
            }
        }
        let (region, partition) = (node.region, node.partition);
        let children = pieces
            .into_iter()
            .zip(buckets)
            .map(|(piece, rules)| {
                let mut r = region;
                r.0[dim.index()] = piece;
                self.push_child(id, r, rules, partition)
            })
            .collect();
        let n = &mut self.nodes[id];
        n.kind = NodeKind::Cut;
        n.action = Some(Action::Cut { dim, k: eff_k });
        if eff_k != k {
            n.clamped_from = Some(k);
        }
        Ok(children)
    }

    /// Splits a node's rules by how much of the node's `dim` range they cover.
    /// Rules at or above the threshold go to the first child, the rest to the second;
    /// empty sides are dropped.
    pub fn apply_partition_simple(
        &mut self,
        id: NodeId,
        dim: Dim,
        level: u8,
    ) -> Result<Vec<NodeId>, TreeError> {
        if level > TOP_LEVEL {
            return Err(TreeError::BadLevel(level));
        }
        let node = self.check_splittable(id)?;
        let iv = node.region.get(dim);
        let pct = COVERAGE_LEVELS[level as usize];
        let (large, small): (Vec<u32>, Vec<u32>) = node.rules.iter().partition(|&&r| {
            let overlap = self.rules.rules[r as usize]
                .range(dim)
                .intersect(&iv)
                .map_or(0, |c| c.len());
            coverage_at_least(overlap, iv.len(), pct)
        });
        let (region, partition) = (node.region, node.partition);
        let degenerate = large.is_empty() || small.is_empty();
        let mut children = Vec::with_capacity(2);
        if !large.is_empty() {
            let mut p = partition;
            p.bounds[dim.index()].0 = level;
            children.push(self.push_child(id, region, large, p));
        }
        if !small.is_empty() {
            let mut p = partition;
            p.bounds[dim.index()].1 = level;
            children.push(self.push_child(id, region, small, p));
        }
        let n = &mut self.nodes[id];
        n.kind = NodeKind::Partition;
        n.action = Some(Action::PartitionSimple { dim, level });
        n.degenerate = degenerate;
        Ok(children)
    }

    /// Groups the root's rules by largeness signature, one child per nonempty group.
    pub fn apply_partition_efficuts(&mut self, id: NodeId) -> Result<Vec<NodeId>, TreeError> {
        if id != self.root {
            return Err(TreeError::NotRoot(id));
        }
        let node = self.check_splittable(id)?;
        let mut groups: Vec<Vec<u32>> = vec![Vec::new(); 1 << NUM_DIMS];
        for &r in &node.rules {
            groups[largeness_signature(&self.rules.rules[r as usize]) as usize].push(r);
        }
        let (region, partition) = (node.region, node.partition);
        let children: Vec<NodeId> = groups
            .into_iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .map(|(sig, rules)| {
                let mut p = partition;
                p.efficuts_id = Some(sig as u8);
                self.push_child(id, region, rules, p)
            })
            .collect();
        let n = &mut self.nodes[id];
        n.kind = NodeKind::Partition;
        n.action = Some(Action::PartitionEffiCuts);
        n.degenerate = children.len() == 1;
        Ok(children)
    }

    pub fn apply(&mut self, id: NodeId, action: Action) -> Result<Vec<NodeId>, TreeError> {
        match action {
            Action::Cut { dim, k } => self.apply_cut(id, dim, k),
            Action::PartitionSimple { dim, level } => self.apply_partition_simple(id, dim, level),
            Action::PartitionEffiCuts => self.apply_partition_efficuts(id),
        }
    }

    /// Best matching rule index in this tree.
    pub fn lookup(&self, pkt: &Packet) -> Option<usize> {
        let mut best: Option<u32> = None;
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            match n.kind {
                NodeKind::Leaf => {
                    let hit = n
                        .rules
                        .iter()
                        .copied()
                        .find(|&r| self.rules.rules[r as usize].matches(pkt));
                    if let Some(r) = hit {
                        best = Some(best.map_or(r, |b| b.min(r)));
                    }
                }
                NodeKind::Cut => {
                    if let Some(&c) = n
                        .children
                        .iter()
                        .find(|&&c| self.nodes[c].region.contains(pkt))
                    {
                        stack.push(c);
                    }
                }
                NodeKind::Partition => stack.extend(n.children.iter().copied()),
            }
        }
        best.map(|b| b as usize)
    }

    /// Time and space of every node's subtree; a forced leaf's time is `forced_time(reason)`.
    pub fn subtree_costs_with(
        &self,
        forced_time: impl Fn(ForcedReason) -> u64,
    ) -> Result<Vec<Cost>, TreeError> {
        let mut costs = vec![Cost::default(); self.nodes.len()];
        // Children are always allocated after their parent.
        for id in (0..self.nodes.len()).rev() {
            let n = &self.nodes[id];
            let own = self.memory.node_bytes(n);
            costs[id] = match n.kind {
                NodeKind::Leaf => {
                    let time = match n.forced {
                        Some(reason) => forced_time(reason),
                        None if n.rules.len() > self.binth => return Err(TreeError::Unbuilt(id)),
                        None => 0,
                    };
                    Cost { time, space: own }
                }
                kind => {
                    let mut space = own;
                    let mut agg = 0u64;
                    for &c in &n.children {
                        if c <= id || c >= self.nodes.len() {
                            return Err(TreeError::Malformed(format!(
                                "child {c} of node {id} out of order"
                            )));
                        }
                        space += costs[c].space;
                        agg = if kind == NodeKind::Cut {
                            agg.max(costs[c].time)
                        } else {
                            agg + costs[c].time
                        };
                    }
                    Cost {
                        time: 1 + agg,
                        space,
                    }
                }
            };
        }
        Ok(costs)
    }

    pub fn subtree_costs(&self) -> Result<Vec<Cost>, TreeError> {
        self.subtree_costs_with(|_| 0)
    }

    /// Worst-case internal nodes traversed below and including `id`.
    pub fn subtree_time(&self, id: NodeId) -> Result<u64, TreeError> {
        self.node(id)?;
        Ok(self.subtree_costs()?[id].time)
    }

    /// Bytes used by the subtree rooted at `id`.
    pub fn subtree_space(&self, id: NodeId) -> Result<u64, TreeError> {
        self.node(id)?;
        Ok(self.subtree_costs()?[id].space)
    }

    /// Ids reachable from `id`, pre-order, children left to right.
    pub fn preorder(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Structural checks: single root, children after parents, regions and rule sets consistent.
    pub fn validate(&self) -> Result<(), TreeError> {
        let bad = |m: String| Err(TreeError::Malformed(m));
        let mut parents = vec![0usize; self.nodes.len()];
        for n in &self.nodes {
            if n.is_leaf() != n.children.is_empty() {
                return bad(format!("node {}: leaf kind does not match children", n.id));
            }
            for &c in &n.children {
                if c <= n.id || c >= self.nodes.len() {
                    return bad(format!("node {}: child {c} out of order", n.id));
                }
                parents[c] += 1;
            }
            if n.is_leaf() && n.rules.len() > self.binth && n.forced.is_none() {
                return Err(TreeError::Unbuilt(n.id));
            }
            if let Some(r) = n
                .rules
                .iter()
                .find(|&&r| !rule_intersects(&self.rules.rules[r as usize], &n.region))
            {
                return bad(format!(
                    "node {}: rule {r} lies outside the node region",
                    n.id
                ));
            }
            if n.kind == NodeKind::Cut {
                let Some(Action::Cut { dim, .. }) = n.action else {
                    return bad(format!("node {}: cut node without cut action", n.id));
                };
                let mut next = u64::from(n.region.get(dim).lo);
                for &c in &n.children {
                    let cr = self.nodes[c].region;
                    if u64::from(cr.get(dim).lo) != next {
                        return bad(format!("node {}: children do not tile the cut range", n.id));
                    }
                    next = u64::from(cr.get(dim).hi) + 1;
                }
                if next != u64::from(n.region.get(dim).hi) + 1 {
                    return bad(format!(
                        "node {}: children do not cover the cut range",
                        n.id
                    ));
                }
            }
        }
        for (id, &p) in parents.iter().enumerate() {
            let expect = usize::from(id != self.root);
            if p != expect {
                return bad(format!("node {id} has {p} parents"));
            }
        }
        Ok(())
    }
}

/// Best match across a forest of trees built over the same rule set.
pub fn lookup(trees: &[DecisionTree], pkt: &Packet) -> Option<usize> {
    trees.iter().filter_map(|t| t.lookup(pkt)).min()
}
