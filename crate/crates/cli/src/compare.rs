//! Comparison table over several exported trees.

use std::fmt::Write as _;

use cutforge_core::StatsReport;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub name: String,
    pub trees: usize,
    pub time: u64,
    pub bytes_per_rule: f64,
    pub nodes: usize,
    pub replication: f64,
    /// Percent change against the first row; empty when the baseline is zero.
    pub time_delta_pct: Option<f64>,
    pub bytes_per_rule_delta_pct: Option<f64>,
    pub nodes_delta_pct: Option<f64>,
    pub replication_delta_pct: Option<f64>,
}

fn delta(value: f64, base: f64) -> Option<f64> {
    if base == 0.0 {
        (value == 0.0).then_some(0.0)
    } else {
        Some((value - base) / base * 100.0)
    }
}

pub fn rows(entries: &[(String, StatsReport)]) -> Vec<CompareRow> {
    let Some((_, base)) = entries.first() else {
        return Vec::new();
    };
    entries
        .iter()
        .map(|(name, s)| CompareRow {
            name: name.clone(),
            trees: s.trees,
            time: s.time,
            bytes_per_rule: s.bytes_per_rule,
            nodes: s.nodes,
            replication: s.replication,
            time_delta_pct: delta(s.time as f64, base.time as f64),
            bytes_per_rule_delta_pct: delta(s.bytes_per_rule, base.bytes_per_rule),
            nodes_delta_pct: delta(s.nodes as f64, base.nodes as f64),
            replication_delta_pct: delta(s.replication, base.replication),
        })
        .collect()
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:+.1}%"))
}

pub fn render_table(rows: &[CompareRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>6} {:>9}  {:>10} {:>9}  {:>8} {:>9}  {:>7} {:>9}",
        "tree",
        "trees",
        "time",
        "Δtime",
        "bytes/rule",
        "Δbytes",
        "nodes",
        "Δnodes",
        "repl",
        "Δrepl"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>6} {:>9}  {:>10.2} {:>9}  {:>8} {:>9}  {:>7.3} {:>9}",
            r.name,
            r.trees,
            r.time,
            pct(r.time_delta_pct),
            r.bytes_per_rule,
            pct(r.bytes_per_rule_delta_pct),
            r.nodes,
            pct(r.nodes_delta_pct),
            r.replication,
            pct(r.replication_delta_pct)
        );
    }
    out
}

pub fn to_csv(rows: &[CompareRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
pub fn from_csv(text: &str) -> anyhow::Result<Vec<CompareRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(time: u64, bpr: f64, nodes: usize) -> StatsReport {
        StatsReport {
            trees: 1,
            rules: 10,
            time,
            bytes: (bpr * 10.0) as u64,
            bytes_per_rule: bpr,
            nodes,
            leaves: nodes,
            forced_leaves: 0,
            stored_rules: 10,
            replication: 1.0,
            max_depth: time as u32,
            levels: Vec::new(),
        }
    }

    #[test]
    fn self_comparison_has_zero_deltas() {
        let s = stats(7, 12.5, 40);
        let rows = rows(&[("a".into(), s.clone()), ("a".into(), s)]);
        for r in &rows {
            assert_eq!(r.time_delta_pct, Some(0.0));
            assert_eq!(r.bytes_per_rule_delta_pct, Some(0.0));
            assert_eq!(r.nodes_delta_pct, Some(0.0));
            assert_eq!(r.replication_delta_pct, Some(0.0));
        }
    }

    #[test]
    fn deltas_are_relative_to_first_row() {
        let rows = rows(&[
            ("base".into(), stats(10, 20.0, 100)),
            ("new".into(), stats(8, 30.0, 50)),
        ]);
        assert_eq!(rows[1].time_delta_pct, Some(-20.0));
        assert_eq!(rows[1].bytes_per_rule_delta_pct, Some(50.0));
        assert_eq!(rows[1].nodes_delta_pct, Some(-50.0));
    }

    #[test]
    fn zero_baseline_delta() {
        let rows = rows(&[
            ("leaf".into(), stats(0, 20.0, 1)),
            ("deep".into(), stats(3, 20.0, 9)),
        ]);
        assert_eq!(rows[0].time_delta_pct, Some(0.0));
        assert_eq!(rows[1].time_delta_pct, None);
        assert!(render_table(&rows).contains("n/a"));
    }

    #[test]
    fn csv_roundtrip() {
        let rows = rows(&[
            ("base".into(), stats(10, 20.25, 100)),
            ("x,y".into(), stats(0, 30.0, 50)),
        ]);
        let text = to_csv(&rows).unwrap();
        assert_eq!(from_csv(&text).unwrap(), rows);
    }
}
