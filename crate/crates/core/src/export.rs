//! Tree serialization: versioned JSON (round-trippable), Graphviz DOT, and
//! JSON-lines traces of rollout experiences.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Experience;
use crate::ruleset::RuleSet;
use crate::tree::{Action, DecisionTree, MemoryModel, Node, NodeId, NodeKind};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("malformed tree file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported tree file version {0}")]
    Version(u32),
    #[error(
        "tree was built for rules with hash {expected}, but the rules file hashes to {actual}"
    )]
    HashMismatch { expected: String, actual: String },
    #[error("tree was built for {expected} rules, but the rules file has {actual}")]
    RuleCount { expected: usize, actual: usize },
    #[error("tree {tree}: {msg}")]
    Structure { tree: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportedTree {
    pub root: NodeId,
    pub nodes: Vec<Node>,
}

/// One or more trees over the same rule file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeExport {
    pub version: u32,
    /// Hex SHA-256 of the rules file the trees were built from.
    pub rules_sha256: String,
    pub rule_count: usize,
    pub binth: usize,
    pub memory: MemoryModel,
    /// Free-form provenance, e.g. `"hicuts"` or `"trained"`.
    pub builder: String,
    pub trees: Vec<ExportedTree>,
}

impl TreeExport {
    pub fn new(trees: &[DecisionTree], rules_sha256: &str, builder: &str) -> Self {
        let first = trees.first();
        TreeExport {
            version: FORMAT_VERSION,
            rules_sha256: rules_sha256.to_string(),
            rule_count: first.map_or(0, |t| t.rules.len()),
            binth: first.map_or(0, |t| t.binth),
            memory: first.map_or_else(MemoryModel::default, |t| t.memory),
            builder: builder.to_string(),
            trees: trees
                .iter()
                .map(|t| ExportedTree {
                    root: t.root,
                    nodes: t.nodes.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree export is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ExportError> {
        let ex: TreeExport = serde_json::from_str(text)?;
        if ex.version != FORMAT_VERSION {
            return Err(ExportError::Version(ex.version));
        }
        Ok(ex)
    }

    /// Rebuilds trees against `rules`, refusing a different rules file. Only the
    /// checks needed for lookups to be memory-safe are enforced here; region
    /// consistency is left to [`DecisionTree::validate`] and the oracle.
    pub fn into_trees(
        self,
        rules: Arc<RuleSet>,
        rules_sha256: &str,
    ) -> Result<Vec<DecisionTree>, ExportError> {
        if self.rules_sha256 != rules_sha256 {
            return Err(ExportError::HashMismatch {
                expected: self.rules_sha256,
                actual: rules_sha256.to_string(),
            });
        }
        if self.rule_count != rules.len() {
            return Err(ExportError::RuleCount {
                expected: self.rule_count,
                actual: rules.len(),
            });
        }
        let (binth, memory) = (self.binth, self.memory);
        self.trees
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                check_indices(&t, rules.len())
                    .map_err(|msg| ExportError::Structure { tree: i, msg })?;
                Ok(DecisionTree {
                    nodes: t.nodes,
                    root: t.root,
                    binth,
                    memory,
                    rules: rules.clone(),
                })
            })
            .collect()
    }
}

fn check_indices(t: &ExportedTree, rule_count: usize) -> Result<(), String> {
    if t.root >= t.nodes.len() {
        return Err(format!("root {} out of range", t.root));
    }
    for (i, n) in t.nodes.iter().enumerate() {
        if n.id != i {
            return Err(format!("node at position {i} has id {}", n.id));
        }
        if let Some(&c) = n.children.iter().find(|&&c| c <= i || c >= t.nodes.len()) {
            return Err(format!("node {i}: child {c} out of range"));
        }
        if let Some(&r) = n.rules.iter().find(|&&r| r as usize >= rule_count) {
            return Err(format!("node {i}: rule {r} out of range"));
        }
        if n.is_leaf() != n.children.is_empty() {
            return Err(format!("node {i}: leaf kind does not match children"));
        }
    }
    Ok(())
}

fn action_label(a: &Option<Action>) -> String {
    match a {
        Some(Action::Cut { dim, k }) => format!("cut {} x{k}", dim.name()),
        Some(Action::PartitionSimple { dim, level }) => {
            format!("partition {} level {level}", dim.name())
        }
        Some(Action::PartitionEffiCuts) => "partition largeness".to_string(),
        None => String::new(),
    }
}

/// Graphviz rendering; leaves list their rule count, internal nodes their action.
pub fn to_dot(trees: &[DecisionTree]) -> String {
    let mut out = String::from("digraph trees {\n  node [shape=box, fontname=monospace];\n");
    for (t, tree) in trees.iter().enumerate() {
        for id in tree.preorder(tree.root) {
            let n = &tree.nodes[id];
            let label = match n.kind {
                NodeKind::Leaf => match n.forced {
                    Some(r) => format!("leaf {} rules ({r:?})", n.rules.len()),
                    None => format!("leaf {} rules", n.rules.len()),
                },
                _ => format!("{}\\n{} rules", action_label(&n.action), n.rules.len()),
            };
            let _ = writeln!(out, "  t{t}n{id} [label=\"{label}\"];");
            for &c in &n.children {
                let _ = writeln!(out, "  t{t}n{id} -> t{t}n{c};");
            }
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct TraceLine<'a> {
    rollout: u64,
    node: NodeId,
    dim: usize,
    op: usize,
    log_prob: f64,
    value: f64,
    reward: Option<f64>,
    time: Option<u64>,
    space: Option<u64>,
    obs_ones: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    obs: Option<&'a [u8]>,
}

/// One JSON object per experience; observations are included only when `with_obs`.
pub fn experiences_jsonl(exps: &[Experience], with_obs: bool) -> String {
    let mut out = String::new();
    for e in exps {
        let line = TraceLine {
            rollout: e.rollout,
            node: e.node,
            dim: e.action.dim,
            op: e.action.op,
            log_prob: e.behaviour.log_prob(e.action),
            value: e.behaviour.value,
            reward: e.reward,
            time: e.cost.map(|c| c.time),
            space: e.cost.map(|c| c.space),
            obs_ones: e.obs.0.iter().filter(|&&b| b != 0).count(),
            obs: with_obs.then_some(e.obs.0.as_slice()),
        };
        out.push_str(&serde_json::to_string(&line).expect("trace lines serialize"));
        out.push('\n');
    }
    out
}
