use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cutforge_bench::firewall_rules;
use cutforge_core::env::{encode_observation, valid_action_mask, EnvConfig};
use cutforge_core::nn::policy_forward;
use cutforge_core::ruleset::{linear_match, sample_packets};
use cutforge_core::{build_hicuts, DecisionTree, Dim, HiCutsParams, PolicyParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lookup(c: &mut Criterion) {
    let mut group = c.benchmark_group("lookup");
    for n in [100, 1000] {
        let rules = firewall_rules(n);
        let tree = build_hicuts(rules.clone(), &HiCutsParams::default()).unwrap();
        let packets = sample_packets(&rules, 4096, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("hicuts", n), &packets, |b, pk| {
            b.iter(|| pk.iter().filter_map(|p| tree.lookup(black_box(p))).count())
        });
        group.bench_with_input(BenchmarkId::new("linear", n), &packets, |b, pk| {
            b.iter(|| {
                pk.iter()
                    .filter_map(|p| linear_match(&rules, black_box(p)))
                    .count()
            })
        });
    }
    group.finish();
}

fn cut(c: &mut Criterion) {
    let rules = firewall_rules(1000);
    let fresh = DecisionTree::new(rules, 16);
    c.bench_function("root_cut_1k_rules_x32", |b| {
        b.iter_batched(
            || fresh.clone(),
            |mut t| t.apply_cut(0, Dim::SrcIp, 32).unwrap().len(),
            criterion::BatchSize::SmallInput,
        )
    });
}

fn forward(c: &mut Criterion) {
    let rules = firewall_rules(1000);
    let tree = DecisionTree::new(rules, 16);
    let mask = valid_action_mask(&tree, 0, &EnvConfig::default()).unwrap();
    let obs = encode_observation(&tree, 0, &mask);
    let params = PolicyParams::default_network(&mut ChaCha8Rng::seed_from_u64(0));
    c.bench_function("policy_forward_512x512", |b| {
        b.iter(|| policy_forward(&params, black_box(&obs), &mask).unwrap())
    });
}

criterion_group!(benches, lookup, cut, forward);
criterion_main!(benches);
