//! End-to-end acceptance checks, one test per criterion.
//!
//! Each test writes a single `criterion N: PASS|FAIL ...` line straight to the
//! process's stderr so the verdicts show up in `cargo test` output even when
//! the harness captures test output.

use std::io::Write as _;
use std::sync::Arc;
use std::time::Instant;

use cutforge_core::env::{finalize_rewards, run_rollout, FnSampler, UniformSampler};
use cutforge_core::nn::{head_outputs, PolicySampler};
use cutforge_core::ppo::{loss_and_grad, Batch, LossCoeffs};
use cutforge_core::ruleset::{linear_match, sample_packets};
use cutforge_core::synth::{generate, SynthStyle};
use cutforge_core::tree::lookup;
use cutforge_core::*;
use ndarray::Array2;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {criterion}: {status} {detail}"
    );
}

fn deterministic_runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn style(i: usize) -> SynthStyle {
    [SynthStyle::Firewall, SynthStyle::Acl, SynthStyle::Ipc][i % 3]
}

/// Independent post-order evaluator: leaves cost 0 time, cut nodes take the
/// max over children, partition nodes the sum; space is header plus one
/// reference per child or rule, summed over the subtree.
fn brute_cost(t: &DecisionTree, id: usize) -> (u64, u64) {
    let n = &t.nodes[id];
    if n.children.is_empty() {
        return (0, 16 + 4 * n.rules.len() as u64);
    }
    let kids: Vec<(u64, u64)> = n.children.iter().map(|&c| brute_cost(t, c)).collect();
    let time = match n.kind {
        NodeKind::Cut => 1 + kids.iter().map(|k| k.0).max().unwrap(),
        NodeKind::Partition => 1 + kids.iter().map(|k| k.0).sum::<u64>(),
        NodeKind::Leaf => unreachable!("leaf with children"),
    };
    let space = 16 + 4 * n.children.len() as u64 + kids.iter().map(|k| k.1).sum::<u64>();
    (time, space)
}

// ---------------------------------------------------------------------------
// 1. Lookup agrees with the linear matcher for every builder.

fn trained_policy_trees(rules: &Arc<RuleSet>, seed: u64) -> Vec<DecisionTree> {
    let env = EnvConfig::default();
    let cfg = TrainConfig {
        hidden: vec![16, 16],
        batch_size: 2000,
        minibatch: 2000,
        sgd_iters: 1,
        lr: 1e-3,
        total_timesteps: usize::MAX / 2,
        max_rollouts: Some(2),
        seed,
        ..TrainConfig::default()
    };
    let out = train(rules.clone(), &env, &cfg).expect("training runs");
    assert!(
        !out.report.iterations.is_empty(),
        "policy was updated at least once"
    );
    let mut sampler = PolicySampler {
        params: &out.learner.params,
        rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed),
    };
    let fresh = run_rollout(rules, &env, &mut sampler)
        .expect("rollout")
        .tree;
    let mut trees = vec![fresh];
    trees.extend(out.best_tree);
    trees
}

#[test]
fn criterion_1_oracle_exactness() {
    let start = Instant::now();
    let mut runner = deterministic_runner(10);
    let checked = std::cell::Cell::new(0usize);
    let result = runner.run(
        &(0usize..3, 10usize..=1000, any::<u64>()),
        |(s, n, seed)| {
            let rules = Arc::new(generate(style(s), n, seed));
            let packets = sample_packets(&rules, 100_000, seed.wrapping_add(1)).unwrap();
            let want: Vec<Option<usize>> =
                packets.iter().map(|p| linear_match(&rules, p)).collect();

            let params = HiCutsParams::default();
            let mut builders: Vec<(&str, Vec<DecisionTree>)> = vec![
                (
                    "hicuts",
                    vec![build_hicuts(rules.clone(), &params).unwrap()],
                ),
                (
                    "efficuts",
                    build_efficuts_baseline(rules.clone(), &params).unwrap(),
                ),
            ];
            for t in trained_policy_trees(&rules, seed) {
                builders.push(("trained", vec![t]));
            }
            let mut uniform = UniformSampler {
                rng: ChaCha8Rng::seed_from_u64(seed),
            };
            let random = run_rollout(
                &rules,
                &EnvConfig {
                    partition: PartitionMode::Simple,
                    ..EnvConfig::default()
                },
                &mut uniform,
            )
            .unwrap()
            .tree;
            builders.push(("random", vec![random]));

            for (name, trees) in &builders {
                for t in trees {
                    prop_assert!(t.validate().is_ok(), "{name} tree malformed");
                }
                let mismatches = packets
                    .iter()
                    .zip(&want)
                    .filter(|(p, w)| lookup(trees, p) != **w)
                    .count();
                prop_assert_eq!(
                    mismatches,
                    0,
                    "{} on {} rules ({:?}, seed {})",
                    name,
                    n,
                    style(s),
                    seed
                );
                checked.set(checked.get() + 1);
            }
            Ok(())
        },
    );
    let secs = start.elapsed().as_secs_f64();
    let pass = result.is_ok() && secs < 300.0;
    verdict(
        1,
        pass,
        &format!(
            "{} builder/rule-set pairs x 1e5 packets, 0 mismatches required, {secs:.0}s",
            checked.get()
        ),
    );
    result.unwrap();
    assert!(secs < 300.0, "took {secs:.0}s");
}

// ---------------------------------------------------------------------------
// 2. Library cost recurrences equal the brute-force evaluator.

#[test]
fn criterion_2_recurrence_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut trees = 0;
    let mut nodes_checked = 0;
    let mut partitions = 0;
    while trees < 100 {
        let n = rng.random_range(5..60);
        let rules = Arc::new(generate(style(rng.random_range(0..3)), n, rng.random()));
        let env = EnvConfig {
            binth: rng.random_range(1..5),
            max_actions: rng.random_range(1..25),
            max_depth: rng.random_range(2..8),
            partition: [
                PartitionMode::None,
                PartitionMode::Simple,
                PartitionMode::Efficuts,
            ][rng.random_range(0..3)],
            ..EnvConfig::default()
        };
        let mut sampler = UniformSampler {
            rng: ChaCha8Rng::seed_from_u64(rng.random()),
        };
        let tree = run_rollout(&rules, &env, &mut sampler).unwrap().tree;
        if tree.len() > 200 || tree.len() < 2 {
            continue;
        }
        let costs = tree.subtree_costs().unwrap();
        for id in 0..tree.len() {
            let (time, space) = brute_cost(&tree, id);
            assert_eq!(costs[id], Cost { time, space }, "node {id}");
            assert_eq!(tree.subtree_time(id).unwrap(), time);
            assert_eq!(tree.subtree_space(id).unwrap(), space);
            nodes_checked += 1;
        }
        partitions += tree
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Partition)
            .count();
        trees += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(partitions > 0, "sample should include partition nodes");
    verdict(
        2,
        secs < 60.0,
        &format!("{trees} trees, {nodes_checked} nodes, {partitions} partition nodes, {secs:.1}s"),
    );
    assert!(secs < 60.0);
}

// ---------------------------------------------------------------------------
// 3. A root cut into four children, one of which needs one more cut.

#[test]
fn criterion_3_worked_example() {
    let port = |lo, hi| {
        let mut r = Dim::ALL.map(Interval::full);
        r[Dim::SrcPort.index()] = Interval::new(lo, hi);
        r
    };
    let rules = Arc::new(RuleSet::from_ranges([
        port(50_000, 50_100),
        port(60_000, 60_100),
    ]));
    let env = EnvConfig {
        c: 1.0,
        binth: 1,
        ..EnvConfig::default()
    };
    let script = [
        Action::Cut {
            dim: Dim::SrcPort,
            k: 4,
        },
        Action::Cut {
            dim: Dim::SrcPort,
            k: 2,
        },
    ];
    let mut step = 0;
    let mut sampler = FnSampler(|_: &env::Observation, _: &env::ActionMask| {
        step += 1;
        env::ActionSpec::encode(script[step - 1])
    });
    let rollout = run_rollout(&rules, &env, &mut sampler).unwrap();
    let exps = finalize_rewards(&rollout.tree, rollout.experiences, &env).unwrap();
    let root = &rollout.tree.nodes[rollout.tree.root];
    let rewards: Vec<f64> = exps.iter().map(|e| e.reward.unwrap()).collect();
    let pass = exps.len() == 2
        && root.children.len() == 4
        && exps[1].node == root.children[3]
        && rollout.tree.len() == 7
        && rewards == [-2.0, -1.0];
    verdict(
        3,
        pass,
        &format!(
            "{} experiences, reward magnitudes {:?}",
            exps.len(),
            rewards.iter().map(|r| -r).collect::<Vec<_>>()
        ),
    );
    assert!(
        pass,
        "rewards {rewards:?}, tree size {}",
        rollout.tree.len()
    );
}

// ---------------------------------------------------------------------------
// 4. Greedy per-node optimization finds the exhaustive optimum.

const SMALL_ACTIONS: [(Dim, u32); 4] = [
    (Dim::SrcPort, 2),
    (Dim::SrcPort, 4),
    (Dim::DstPort, 2),
    (Dim::DstPort, 4),
];
const SMALL_DEPTH: u32 = 3;
const ENUMERATION_LIMIT: u64 = 20_000;

fn small_actions(t: &DecisionTree, id: usize) -> impl Iterator<Item = (Dim, u32)> + '_ {
    SMALL_ACTIONS
        .into_iter()
        .filter(move |&(d, _)| t.nodes[id].region.width(d) >= 2)
}

/// Seals a node that may not be split further; returns true if it did.
fn seal(t: &mut DecisionTree, id: usize) -> bool {
    if t.nodes[id].depth >= SMALL_DEPTH {
        t.force_leaf(id, ForcedReason::DepthLimit);
        true
    } else if small_actions(t, id).next().is_none() {
        t.force_leaf(id, ForcedReason::Unsplittable);
        true
    } else {
        false
    }
}

/// Every complete tree, explored by branching on the first open node; returns
/// the best root objective and the number of trees seen.
fn exhaustive(t: DecisionTree, env: &EnvConfig, best: &mut f64, count: &mut u64) {
    let Some(id) = t.preorder(t.root).into_iter().find(|&id| t.is_open(id)) else {
        let root = t.subtree_costs().unwrap()[t.root];
        *best = best.min(env.objective(root));
        *count += 1;
        return;
    };
    let mut t = t;
    if seal(&mut t, id) {
        return exhaustive(t, env, best, count);
    }
    for (d, k) in small_actions(&t, id).collect::<Vec<_>>() {
        let mut next = t.clone();
        next.apply_cut(id, d, k).unwrap();
        exhaustive(next, env, best, count);
    }
}

/// Chooses each node's action to minimize that node's own subtree objective,
/// with its children already optimized the same way.
fn greedy(t: &mut DecisionTree, id: usize, env: &EnvConfig) {
    if !t.is_open(id) || seal(t, id) {
        return;
    }
    let mut best: Option<(f64, DecisionTree)> = None;
    for (d, k) in small_actions(t, id).collect::<Vec<_>>() {
        let mut cand = t.clone();
        for child in cand.apply_cut(id, d, k).unwrap() {
            greedy(&mut cand, child, env);
        }
        let (time, space) = brute_cost(&cand, id);
        let v = env.objective(Cost { time, space });
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, cand));
        }
    }
    *t = best.unwrap().1;
}

/// Number of distinct complete trees below an open node.
fn tree_count(t: &DecisionTree, id: usize) -> u64 {
    let mut t = t.clone();
    if !t.is_open(id) || seal(&mut t, id) {
        return 1;
    }
    let mut total = 0u64;
    for (d, k) in small_actions(&t, id).collect::<Vec<_>>() {
        let mut next = t.clone();
        let kids = next.apply_cut(id, d, k).unwrap();
        total = total.saturating_add(
            kids.iter()
                .fold(1u64, |acc, &c| acc.saturating_mul(tree_count(&next, c))),
        );
    }
    total
}

fn small_instance(rng: &mut ChaCha8Rng) -> Arc<RuleSet> {
    let n = rng.random_range(2..=4);
    let mut coarse = || {
        let a = rng.random_range(0..16u32);
        let b = rng.random_range(a..16u32);
        Interval::new(a << 12, ((b + 1) << 12) - 1)
    };
    Arc::new(RuleSet::from_ranges((0..n).map(|_| {
        let mut r = Dim::ALL.map(Interval::full);
        r[Dim::SrcPort.index()] = coarse();
        r[Dim::DstPort.index()] = coarse();
        r
    })))
}

#[test]
fn criterion_4_induction_property() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut instances = 0;
    let mut trees_enumerated = 0u64;
    let mut skipped = 0;
    while instances < 60 {
        let rules = small_instance(&mut rng);
        if tree_count(&DecisionTree::new(rules.clone(), 1), 0) > ENUMERATION_LIMIT {
            skipped += 1;
            continue;
        }
        for c in [1.0, 0.0] {
            let env = EnvConfig {
                c,
                binth: 1,
                ..EnvConfig::default()
            };
            let mut best = f64::INFINITY;
            let mut count = 0;
            exhaustive(
                DecisionTree::new(rules.clone(), 1),
                &env,
                &mut best,
                &mut count,
            );
            let mut g = DecisionTree::new(rules.clone(), 1);
            let root = g.root;
            greedy(&mut g, root, &env);
            let root = g.subtree_costs().unwrap()[g.root];
            assert_eq!(
                env.objective(root),
                best,
                "c = {c}, rules {:?}",
                rules.rules
            );
            assert_eq!(count, tree_count(&DecisionTree::new(rules.clone(), 1), 0));
            trees_enumerated += count;
            instances += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(4, secs < 120.0, &format!(
            "{instances} instance/objective pairs, {trees_enumerated} trees enumerated, {skipped} oversized instances skipped, {secs:.1}s"
        ));
    assert!(secs < 120.0);
}

// ---------------------------------------------------------------------------
// 5. Analytic loss gradient against central differences.

#[test]
fn criterion_5_gradient_check() {
    let start = Instant::now();
    let rules = Arc::new(generate(SynthStyle::Acl, 40, 5));
    let env = EnvConfig {
        binth: 2,
        partition: PartitionMode::Simple,
        ..EnvConfig::default()
    };
    let mut sampler = UniformSampler {
        rng: ChaCha8Rng::seed_from_u64(5),
    };
    let rollout = run_rollout(&rules, &env, &mut sampler).unwrap();
    let exps = finalize_rewards(&rollout.tree, rollout.experiences, &env).unwrap();
    let exps = &exps[..exps.len().min(12)];

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let old = PolicyParams::init(env::OBS_LEN, &[8], &mut rng);
    let mut params = old.clone();
    for v in &mut params.data {
        *v += rng.random_range(-0.3..0.3);
    }
    let mut batch = Batch::from_experiences(&old, exps).unwrap();
    // Sanity: stored old statistics are the old network's masked outputs.
    let (pd, _, _) = head_outputs(old.forward(batch.x.view()).out.view(), &batch.masks).unwrap();
    assert!((&pd - &batch.old_probs_dim).iter().all(|d| d.abs() < 1e-12));
    batch.x = Array2::from_shape_fn(batch.x.dim(), |(i, j)| {
        batch.x[(i, j)] * (1.0 + 0.1 * ((i + j) % 3) as f64)
    });

    let mut worst: f64 = 0.0;
    for algorithm in [Algorithm::Ppo, Algorithm::ActorCritic] {
        let coeffs = LossCoeffs {
            algorithm,
            clip: 0.3,
            vf_clip: 10.0,
            vf_loss_coeff: 1.0,
            entropy_coeff: 0.01,
            kl_coeff: 0.2,
        };
        let grad = loss_and_grad(&params, &batch, &coeffs, true)
            .unwrap()
            .1
            .unwrap();
        // Smaller steps are dominated by floating-point roundoff.
        let h = 1e-5;
        for i in 0..params.data.len() {
            let orig = params.data[i];
            params.data[i] = orig + h;
            let up = loss_and_grad(&params, &batch, &coeffs, false)
                .unwrap()
                .0
                .total;
            params.data[i] = orig - h;
            let down = loss_and_grad(&params, &batch, &coeffs, false)
                .unwrap()
                .0
                .total;
            params.data[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / (fd.abs() + grad[i].abs()).max(1e-7);
            worst = worst.max(rel);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-4 && secs < 60.0;
    verdict(
        5,
        pass,
        &format!(
            "max relative error {worst:.2e} over {} params x 2 losses, {secs:.1}s",
            params.data.len()
        ),
    );
    assert!(pass, "max relative error {worst:e}");
}

// ---------------------------------------------------------------------------
// 6 and 7. Training runs at desk scale.

const TRADEOFF_ROLLOUTS: usize = 250;
/// Runs that still lack a complete tree resume for another chunk, up to this many.
const TRADEOFF_CHUNKS: usize = 4;

fn desk_config(seed: u64, max_rollouts: usize) -> TrainConfig {
    TrainConfig {
        hidden: vec![64, 64],
        batch_size: 15_000,
        minibatch: 1000,
        sgd_iters: 5,
        lr: 1e-3,
        total_timesteps: usize::MAX / 2,
        max_rollouts: Some(max_rollouts),
        workers: std::thread::available_parallelism().map_or(1, |n| n.get().min(4)),
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn criterion_6_learning_smoke_test() {
    let start = Instant::now();
    let rules = Arc::new(generate(SynthStyle::Firewall, 1000, 1));
    let baseline = build_hicuts(rules.clone(), &HiCutsParams::default()).unwrap();
    let baseline_time = baseline.subtree_time(baseline.root).unwrap();
    let env = EnvConfig {
        c: 1.0,
        partition: PartitionMode::None,
        ..EnvConfig::default()
    };
    let cfg = TrainConfig {
        target_objective: Some(baseline_time as f64),
        ..desk_config(1, 2000)
    };
    let out = train(rules.clone(), &env, &cfg).unwrap();
    let best = out.report.best.clone().expect("at least one rollout");
    let tree = out.best_tree.expect("best tree kept");
    assert_eq!(tree.subtree_time(tree.root).unwrap(), best.time);
    let secs = start.elapsed().as_secs_f64();
    let complete = !best.truncated;
    let hard = complete && best.time <= baseline_time;
    let soft = complete && best.time as f64 <= 1.1 * baseline_time as f64;
    let grade = if hard {
        "PASS"
    } else if soft {
        "SOFT-PASS (flagged)"
    } else {
        "FAIL"
    };
    verdict(
        6,
        hard || soft,
        &format!(
            "[{grade}] learned depth-time {} vs HiCuts {} after {} rollouts ({:?}), {secs:.0}s",
            best.time, baseline_time, out.report.total_rollouts, out.report.stop
        ),
    );
    assert!(
        hard || soft,
        "learned {} (truncated: {}) vs HiCuts {baseline_time}",
        best.time,
        best.truncated
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn criterion_7_tradeoff_direction() {
    let start = Instant::now();
    let rules = Arc::new(generate(SynthStyle::Firewall, 1000, 1));
    let mut summary = Vec::new();
    let mut by_c = Vec::new();
    let mut incomplete = Vec::new();
    for c in [0.0, 1.0] {
        let env = EnvConfig {
            c,
            partition: PartitionMode::Simple,
            reward_scale: RewardScale::Log,
            ..EnvConfig::default()
        };
        let (mut times, mut bpr) = (Vec::new(), Vec::new());
        let mut rollouts = Vec::new();
        for seed in [1, 2, 3] {
            let mut out =
                train(rules.clone(), &env, &desk_config(seed, TRADEOFF_ROLLOUTS)).unwrap();
            let mut best = out.report.best.clone().expect("at least one rollout");
            let mut done = out.report.total_rollouts;
            for _ in 1..TRADEOFF_CHUNKS {
                if !best.truncated {
                    break;
                }
                out = train_from(rules.clone(), &env, out.learner).unwrap();
                done += out.report.total_rollouts;
                let chunk = out.report.best.clone().expect("at least one rollout");
                if best.is_beaten_by(chunk.truncated, chunk.objective) {
                    best = chunk;
                }
            }
            if best.truncated {
                incomplete.push(format!("c={c} seed {seed}"));
            }
            times.push(best.time as f64);
            bpr.push(best.bytes_per_rule);
            rollouts.push(done);
        }
        summary.push(format!(
            "c={c}: depth {times:?} bytes/rule {:?} rollouts {rollouts:?}",
            bpr.iter().map(|b| b.round()).collect::<Vec<_>>()
        ));
        by_c.push((median(times), median(bpr)));
    }
    let (t0, s0) = by_c[0];
    let (t1, s1) = by_c[1];
    let secs = start.elapsed().as_secs_f64();
    if !incomplete.is_empty() {
        summary.push(format!("no complete tree: {}", incomplete.join(", ")));
    }
    let pass = incomplete.is_empty() && t1 < t0 && s0 < s1;
    verdict(
        7,
        pass,
        &format!("median depth c=1 {t1} < c=0 {t0}; median bytes/rule c=0 {s0:.1} < c=1 {s1:.1}; {}; {secs:.0}s", summary.join("; ")),
    );
    assert!(pass, "{}", summary.join("; "));
}

// ---------------------------------------------------------------------------
// 8. Rollout and depth truncation.

#[test]
fn criterion_8_truncation_bounds() {
    let rules = Arc::new(RuleSet::from_ranges(
        (0..17).map(|_| Dim::ALL.map(Interval::full)),
    ));
    // Always halve the first splittable dimension; identical rules never separate.
    let never_separate = |_: &env::Observation, mask: &env::ActionMask| env::ActionSpec {
        dim: mask.dims.iter().position(|&d| d).unwrap(),
        op: 0,
    };

    let env = EnvConfig::default();
    let r = run_rollout(&rules, &env, &mut FnSampler(never_separate)).unwrap();
    let action_capped = r.truncated
        && r.experiences.len() == env.max_actions
        && r.tree
            .nodes
            .iter()
            .any(|n| n.forced == Some(ForcedReason::ActionLimit))
        && r.tree.nodes.iter().all(|n| n.depth <= env.max_depth);

    let shallow = EnvConfig {
        max_depth: 6,
        max_actions: 1_000_000,
        ..EnvConfig::default()
    };
    let d = run_rollout(&rules, &shallow, &mut FnSampler(never_separate)).unwrap();
    let depth_leaves: Vec<u32> = d
        .tree
        .nodes
        .iter()
        .filter(|n| n.forced == Some(ForcedReason::DepthLimit))
        .map(|n| n.depth)
        .collect();
    let depth_capped = d.truncated
        && d.tree.nodes.iter().all(|n| n.depth <= 6)
        && depth_leaves.len() == 64
        && depth_leaves.iter().all(|&x| x == 6)
        && d.experiences.len() == 63;

    verdict(
        8,
        action_capped && depth_capped,
        &format!(
            "action cap halted at {} of {} actions; depth cap 6 gave {} forced leaves, max depth {}",
            r.experiences.len(),
            env.max_actions,
            depth_leaves.len(),
            d.tree.nodes.iter().map(|n| n.depth).max().unwrap()
        ),
    );
    assert!(action_capped && depth_capped);
}

// ---------------------------------------------------------------------------
// 9. Scope statement.

#[test]
fn criterion_9_headline_results_not_reproduced() {
    verdict(
        9,
        true,
        "NOT REPRODUCED by design: headline comparisons on the original ClassBench seed sets at ~1e7 timesteps \
         per classifier are out of desk scale; criteria 6 and 7 stand in for them",
    );
}
