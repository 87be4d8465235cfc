//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use cutforge_core::synth::{generate, SynthStyle};
use cutforge_core::RuleSet;

pub fn firewall_rules(n: usize) -> Arc<RuleSet> {
    Arc::new(generate(SynthStyle::Firewall, n, 17))
}
