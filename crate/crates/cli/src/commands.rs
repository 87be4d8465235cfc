use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use cutforge_core::export::{experiences_jsonl, to_dot, TreeExport};
use cutforge_core::ruleset::{linear_match, sample_packets};
use cutforge_core::synth::generate;
use cutforge_core::tree::lookup;
use cutforge_core::{
    build_efficuts_baseline, build_hicuts, train_from, tree_stats, Checkpoint, DecisionTree, Dim,
    EnvConfig, HiCutsParams, Interval, PpoLearner, RewardScale, RuleSet, TrainConfig, TreeError,
};
use serde_json::json;

use crate::compare;
use crate::failure::{Classify, Failure};
use crate::manifest::{sha256_hex, RunManifest};
use crate::{BuildArgs, Builder, CompareArgs, EvalArgs, GenArgs, TrainArgs};

struct LoadedRules {
    rules: Arc<RuleSet>,
    sha256: String,
}

fn load_rules(path: &Path) -> Result<LoadedRules, Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    let text = String::from_utf8(bytes.clone())
        .with_context(|| format!("{} is not UTF-8", path.display()))
        .input()?;
    let rules = RuleSet::parse_classbench(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .input()?;
    if rules.is_empty() {
        return Err(Failure::Input(anyhow::anyhow!(
            "{} contains no rules",
            path.display()
        )));
    }
    Ok(LoadedRules {
        rules: Arc::new(rules),
        sha256: sha256_hex(&bytes),
    })
}

fn load_trees(path: &Path, rules: &LoadedRules) -> Result<Vec<DecisionTree>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    TreeExport::from_json(&text)
        .and_then(|ex| ex.into_trees(rules.rules.clone(), &rules.sha256))
        .with_context(|| format!("loading {}", path.display()))
        .input()
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .input()
}

pub fn validate(path: &Path) -> Result<(), Failure> {
    let loaded = load_rules(path)?;
    let rs = &loaded.rules;
    let match_all = rs.rules.iter().filter(|r| r.is_match_all()).count();
    let mut seen = HashSet::new();
    let duplicates = rs.rules.iter().filter(|r| !seen.insert(r.ranges)).count();
    println!("{} rules, {} match-all", rs.len(), match_all);
    println!("duplicates: {duplicates}");
    for dim in Dim::ALL {
        let wild = rs
            .rules
            .iter()
            .filter(|r| r.range(dim) == Interval::full(dim))
            .count();
        println!(
            "wildcard {:<8} {:.3}",
            dim.name(),
            wild as f64 / rs.len() as f64
        );
    }
    println!("sha256: {}", loaded.sha256);
    Ok(())
}

fn write_tree_outputs(
    manifest: &mut RunManifest,
    out: &Path,
    trees: &[DecisionTree],
    rules: &LoadedRules,
    builder: &str,
    tree_file: &str,
) -> Result<cutforge_core::StatsReport, Failure> {
    for t in trees {
        t.validate()
            .with_context(|| format!("{builder} produced a malformed tree"))
            .internal()?;
    }
    let stats = tree_stats(trees).internal()?;
    let export = TreeExport::new(trees, &rules.sha256, builder);
    manifest.write_output(out, tree_file, &export.to_json())?;
    manifest.write_output(out, "levels.csv", &stats.levels_csv())?;
    manifest.write_output(
        out,
        "stats.json",
        &serde_json::to_string_pretty(&stats).internal()?,
    )?;
    manifest.write_output(out, "tree.dot", &to_dot(trees))?;
    Ok(stats)
}

fn print_stats(stats: &cutforge_core::StatsReport) {
    println!("trees: {}", stats.trees);
    println!("depth-time: {}", stats.time);
    println!("bytes/rule: {:.2}", stats.bytes_per_rule);
    println!("nodes: {}", stats.nodes);
    println!("replication: {:.3}", stats.replication);
}

pub fn build(a: &BuildArgs) -> Result<(), Failure> {
    let params = HiCutsParams {
        spfac: a.spfac,
        max_cuts_per_node: a.max_cuts,
        binth: a.binth,
        max_nodes: a.max_nodes,
    };
    params.validate().usage()?;
    let rules = load_rules(&a.rules)?;
    create_dir(&a.out)?;
    let builder = match a.builder {
        Builder::Hicuts => "hicuts",
        Builder::Efficuts => "efficuts",
    };
    let mut manifest = RunManifest::new(
        "build",
        json!({ "builder": builder, "params": params }),
        None,
    );
    manifest
        .inputs
        .insert(a.rules.display().to_string(), rules.sha256.clone());
    let built = match a.builder {
        Builder::Hicuts => build_hicuts(rules.rules.clone(), &params).map(|t| vec![t]),
        Builder::Efficuts => build_efficuts_baseline(rules.rules.clone(), &params),
    };
    let trees = match built {
        Err(e @ TreeError::TooLarge(_)) => {
            return Err(Failure::usage(format!("{e}; raise --binth or --max-nodes")));
        }
        other => other.internal()?,
    };
    let stats = write_tree_outputs(&mut manifest, &a.out, &trees, &rules, builder, "tree.json")?;
    manifest.finish(&a.out)?;
    print_stats(&stats);
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<(), Failure> {
    let env = EnvConfig {
        c: a.c,
        reward_scale: a.reward_scale.into(),
        max_actions: a.max_rollout_len,
        max_depth: a.max_depth,
        binth: a.binth,
        partition: a.partition.into(),
    };
    env.validate().map_err(Failure::usage)?;
    if env.c < 1.0 && env.reward_scale == RewardScale::Linear {
        log::warn!("c < 1 with linear reward scaling: memory terms dominate; --reward-scale log is usually better");
    }
    let cfg = TrainConfig {
        algorithm: a.algorithm.into(),
        lr: a.lr,
        entropy_coeff: a.entropy_coeff,
        sgd_iters: a.sgd_iters,
        minibatch: a.minibatch,
        batch_size: a.batch,
        total_timesteps: a.timesteps,
        max_rollouts: a.rollouts,
        target_objective: a.target_objective,
        workers: a.workers,
        hidden: a.hidden.clone(),
        seed: a.seed,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(Failure::usage)?;
    let rules = load_rules(&a.rules)?;
    create_dir(&a.out)?;

    let mut manifest =
        RunManifest::new("train", json!({ "env": env, "train": cfg }), Some(cfg.seed));
    manifest
        .inputs
        .insert(a.rules.display().to_string(), rules.sha256.clone());
    let resumed = match &a.resume {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .input()?;
            let ck = Checkpoint::from_json(&text)
                .map_err(|e| Failure::Input(anyhow::anyhow!("{}: {e}", path.display())))?;
            if ck.learner.params.hidden != cfg.hidden {
                return Err(Failure::usage(format!(
                    "--hidden {:?} does not match the checkpoint's {:?}",
                    cfg.hidden, ck.learner.params.hidden
                )));
            }
            manifest
                .inputs
                .insert(path.display().to_string(), sha256_hex(text.as_bytes()));
            Some(PpoLearner {
                cfg: cfg.clone(),
                ..ck.learner
            })
        }
        None => None,
    };

    let result = match resumed {
        Some(learner) => train_from(rules.rules.clone(), &env, learner),
        None => cutforge_core::train(rules.rules.clone(), &env, &cfg),
    };
    let outcome = result.map_err(|e| match e {
        cutforge_core::TrainError::Env(_) | cutforge_core::TrainError::Config(_) => {
            Failure::Usage(e.into())
        }
        other => Failure::Internal(other.into()),
    })?;
    let mut report = outcome.report;
    manifest.timings = Some(json!({ "iteration_seconds": std::mem::take(&mut report.wall_clock) }));
    manifest.write_output(
        &a.out,
        "report.json",
        &serde_json::to_string_pretty(&report).internal()?,
    )?;
    manifest.write_output(&a.out, "metrics.csv", &report.metrics_csv())?;
    manifest.write_output(
        &a.out,
        "checkpoint.json",
        &Checkpoint::new(&env, &outcome.learner).to_json(),
    )?;
    let tree = outcome
        .best_tree
        .ok_or_else(|| Failure::internal("training finished without any rollout"))?;
    let stats = write_tree_outputs(
        &mut manifest,
        &a.out,
        std::slice::from_ref(&tree),
        &rules,
        "trained",
        "best_tree.json",
    )?;
    if a.trace {
        manifest.write_output(
            &a.out,
            "best_rollout.jsonl",
            &experiences_jsonl(&outcome.best_experiences, false),
        )?;
    }
    manifest.finish(&a.out)?;

    println!(
        "iterations: {}  rollouts: {}  timesteps: {}  stop: {:?}",
        report.iterations.len(),
        report.total_rollouts,
        report.total_timesteps,
        report.stop
    );
    if let Some(best) = &report.best {
        println!(
            "best rollout: {}  objective: {:.4}{}",
            best.rollout,
            best.objective,
            if best.truncated { "  (truncated)" } else { "" }
        );
    }
    print_stats(&stats);
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    if a.packets == 0 {
        return Err(Failure::usage("--packets must be at least 1"));
    }
    let rules = load_rules(&a.rules)?;
    let trees = load_trees(&a.tree, &rules)?;
    let mut structure_ok = true;
    for (i, t) in trees.iter().enumerate() {
        if let Err(e) = t.validate() {
            structure_ok = false;
            println!("tree {i}: structure check failed: {e}");
        }
    }
    let packets = sample_packets(&rules.rules, a.packets, a.seed).usage()?;
    let mut mismatches = 0usize;
    let mut first = None;
    for p in &packets {
        let want = linear_match(&rules.rules, p);
        let got = lookup(&trees, p);
        if got != want {
            mismatches += 1;
            first.get_or_insert((*p, got, want));
        }
    }
    println!("packets: {}", packets.len());
    println!("mismatches: {mismatches}");
    if let Some((p, got, want)) = first {
        println!(
            "first mismatch: packet {:?} tree {:?} linear {:?}",
            p.0, got, want
        );
    }
    match tree_stats(&trees) {
        Ok(stats) => print_stats(&stats),
        Err(e) => println!("stats unavailable: {e}"),
    }
    if mismatches > 0 || !structure_ok {
        return Err(Failure::internal(format!(
            "tree disagrees with the linear matcher on {mismatches} of {} packets",
            packets.len()
        )));
    }
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<(), Failure> {
    let rules = load_rules(&a.rules)?;
    let mut entries = Vec::new();
    for path in &a.trees {
        let trees = load_trees(path, &rules)?;
        let stats = tree_stats(&trees)
            .with_context(|| format!("costing {}", path.display()))
            .input()?;
        entries.push((path.display().to_string(), stats));
    }
    let rows = compare::rows(&entries);
    print!("{}", compare::render_table(&rows));
    if let Some(csv_path) = &a.csv {
        let text = compare::to_csv(&rows).internal()?;
        fs::write(csv_path, text)
            .with_context(|| format!("writing {}", csv_path.display()))
            .input()?;
    }
    Ok(())
}

pub fn gen(a: &GenArgs) -> Result<(), Failure> {
    if a.rules == 0 {
        return Err(Failure::usage("--rules must be at least 1"));
    }
    let rs = generate(a.style, a.rules, a.seed);
    let text = rs.to_classbench().internal()?;
    fs::write(&a.out, text)
        .with_context(|| format!("writing {}", a.out.display()))
        .input()?;
    println!("wrote {} rules to {}", rs.len(), a.out.display());
    Ok(())
}
