//! Aggregate tree metrics: lookup time, bytes per rule, replication, and
//! per-level node histograms.

use serde::{Deserialize, Serialize};

use crate::ruleset::NUM_DIMS;
use crate::tree::{Action, DecisionTree, NodeKind, TreeError};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub nodes: usize,
    pub leaves: usize,
    pub partitions: usize,
    /// Cut nodes at this level, by cut dimension.
    pub cuts: [usize; NUM_DIMS],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub trees: usize,
    pub rules: usize,
    /// Worst-case internal nodes traversed (max over trees).
    pub time: u64,
    pub bytes: u64,
    pub bytes_per_rule: f64,
    pub nodes: usize,
    pub leaves: usize,
    pub forced_leaves: usize,
    /// Rule references stored in leaves.
    pub stored_rules: usize,
    pub replication: f64,
    pub max_depth: u32,
    pub levels: Vec<LevelStats>,
}

pub fn tree_stats(trees: &[DecisionTree]) -> Result<StatsReport, TreeError> {
    let rules = trees.first().map_or(0, |t| t.rules.len());
    let mut report = StatsReport {
        trees: trees.len(),
        rules,
        time: 0,
        bytes: 0,
        bytes_per_rule: 0.0,
        nodes: 0,
        leaves: 0,
        forced_leaves: 0,
        stored_rules: 0,
        replication: 0.0,
        max_depth: 0,
        levels: Vec::new(),
    };
    for t in trees {
        let costs = t.subtree_costs()?;
        report.time = report.time.max(costs[t.root].time);
        report.bytes += costs[t.root].space;
        for id in t.preorder(t.root) {
            let n = &t.nodes[id];
            let level = n.depth as usize;
            if report.levels.len() <= level {
                report.levels.resize_with(level + 1, LevelStats::default);
            }
            let ls = &mut report.levels[level];
            ls.nodes += 1;
            report.nodes += 1;
            report.max_depth = report.max_depth.max(n.depth);
            match n.kind {
                NodeKind::Leaf => {
                    ls.leaves += 1;
                    report.leaves += 1;
                    report.stored_rules += n.rules.len();
                    report.forced_leaves += usize::from(n.forced.is_some());
                }
                NodeKind::Partition => ls.partitions += 1,
                NodeKind::Cut => {
                    if let Some(Action::Cut { dim, .. }) = n.action {
                        ls.cuts[dim.index()] += 1;
                    }
                }
            }
        }
    }
    for (i, l) in report.levels.iter_mut().enumerate() {
        l.level = i;
    }
    if rules > 0 {
        report.bytes_per_rule = report.bytes as f64 / rules as f64;
        report.replication = report.stored_rules as f64 / rules as f64;
    }
    Ok(report)
}

impl StatsReport {
    /// `level,nodes,leaves,partitions,cut_<dim>...` rows.
    pub fn levels_csv(&self) -> String {
        let mut out = String::from("level,nodes,leaves,partitions");
        for d in crate::ruleset::Dim::ALL {
            out.push_str(&format!(",cut_{}", d.name()));
        }
        out.push('\n');
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{}",
                l.level, l.nodes, l.leaves, l.partitions
            ));
            for c in l.cuts {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "trees={} time={} bytes/rule={:.2} nodes={} replication={:.3} forced_leaves={}",
            self.trees,
            self.time,
            self.bytes_per_rule,
            self.nodes,
            self.replication,
            self.forced_leaves
        )
    }
}
