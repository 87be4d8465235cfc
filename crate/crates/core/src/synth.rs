//! Seeded synthetic rule sets in three flavours loosely shaped like common
//! classifier families. Every set ends with a match-all default rule.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ruleset::{Dim, Interval, RuleSet, NUM_DIMS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthStyle {
    /// Many wildcard addresses, port ranges, mixed protocols.
    Firewall,
    /// Specific address prefixes, exact destination ports, mostly TCP.
    Acl,
    /// A broad mix of prefix lengths and port shapes.
    Ipc,
}

impl std::str::FromStr for SynthStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "firewall" | "fw" => Ok(SynthStyle::Firewall),
            "acl" => Ok(SynthStyle::Acl),
            "ipc" => Ok(SynthStyle::Ipc),
            other => Err(format!(
                "unknown rule style '{other}' (expected firewall, acl or ipc)"
            )),
        }
    }
}

const WELL_KNOWN: [u32; 12] = [20, 21, 22, 23, 25, 53, 80, 110, 123, 143, 443, 8080];
const PROTOCOLS: [u32; 3] = [6, 17, 1];

/// Per-style distribution parameters.
struct Profile {
    /// Probability that the source, respectively the destination, is wildcard.
    /// The two are drawn jointly so both-wildcard rules stay rare.
    src_wild: f64,
    dst_wild: f64,
    src_lens: &'static [u8],
    dst_lens: &'static [u8],
    /// (wildcard, exact) probabilities; the rest are ranges.
    sport: (f64, f64),
    dport: (f64, f64),
    proto_wild: f64,
}

const FIREWALL: Profile = Profile {
    src_wild: 0.35,
    dst_wild: 0.15,
    src_lens: &[16, 24, 28, 32],
    dst_lens: &[24, 28, 32],
    sport: (0.9, 0.0),
    dport: (0.2, 0.5),
    proto_wild: 0.2,
};

const ACL: Profile = Profile {
    src_wild: 0.05,
    dst_wild: 0.02,
    src_lens: &[16, 20, 24, 28, 32],
    dst_lens: &[24, 28, 32],
    sport: (0.95, 0.0),
    dport: (0.05, 0.85),
    proto_wild: 0.05,
};

const IPC: Profile = Profile {
    src_wild: 0.2,
    dst_wild: 0.2,
    src_lens: &[8, 12, 16, 20, 24, 28, 32],
    dst_lens: &[8, 12, 16, 20, 24, 28, 32],
    sport: (0.5, 0.2),
    dport: (0.3, 0.4),
    proto_wild: 0.2,
};

struct Gen {
    rng: ChaCha8Rng,
    /// Address blocks rules cluster under, so prefixes overlap realistically.
    bases: Vec<u32>,
}

impl Gen {
    fn prefix(&mut self, len: u8) -> Interval {
        let base = *self.bases.choose(&mut self.rng).expect("nonempty bases");
        let noise: u32 = self.rng.random();
        // Keep the top 12 bits of the base so short prefixes share blocks.
        let addr = (base & 0xFFF0_0000) | (noise & 0x000F_FFFF);
        Interval::from_prefix(addr, len).expect("valid prefix length")
    }

    fn address(&mut self, wild: bool, lens: &[u8]) -> Interval {
        if wild {
            return Interval::full(Dim::SrcIp);
        }
        let len = *lens.choose(&mut self.rng).expect("nonempty lengths");
        self.prefix(len)
    }

    fn port(&mut self, (wildcard, exact): (f64, f64)) -> Interval {
        let r: f64 = self.rng.random();
        if r < wildcard {
            Interval::full(Dim::SrcPort)
        } else if r < wildcard + exact {
            if self.rng.random_bool(0.5) {
                Interval::point(*WELL_KNOWN.choose(&mut self.rng).expect("nonempty"))
            } else {
                Interval::point(self.rng.random_range(1024..=65535))
            }
        } else {
            match self.rng.random_range(0..4) {
                0 => Interval::new(0, 1023),
                1 => Interval::new(1024, 65535),
                _ => {
                    let lo = self.rng.random_range(0..65000);
                    Interval::new(lo, lo + self.rng.random_range(1..=535))
                }
            }
        }
    }

    fn proto(&mut self, wildcard: f64) -> Interval {
        if self.rng.random_bool(wildcard) {
            Interval::full(Dim::Proto)
        } else {
            let p = if self.rng.random_bool(0.75) {
                PROTOCOLS[0]
            } else {
                *PROTOCOLS.choose(&mut self.rng).expect("nonempty")
            };
            Interval::point(p)
        }
    }

    fn rule(&mut self, p: &Profile) -> [Interval; NUM_DIMS] {
        let r: f64 = self.rng.random();
        let (src_wild, dst_wild) = if r < p.src_wild {
            (true, false)
        } else if r < p.src_wild + p.dst_wild {
            (false, true)
        } else {
            (false, false)
        };
        [
            self.address(src_wild, p.src_lens),
            self.address(dst_wild, p.dst_lens),
            self.port(p.sport),
            self.port(p.dport),
            self.proto(p.proto_wild),
        ]
    }
}

/// `n` rules (including the final match-all), deterministic in `(style, n, seed)`.
pub fn generate(style: SynthStyle, n: usize, seed: u64) -> RuleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases = (0..16).map(|_| rng.random()).collect();
    let mut g = Gen { rng, bases };
    let profile = match style {
        SynthStyle::Firewall => &FIREWALL,
        SynthStyle::Acl => &ACL,
        SynthStyle::Ipc => &IPC,
    };
    let mut ranges: Vec<[Interval; NUM_DIMS]> =
        (0..n.saturating_sub(1)).map(|_| g.rule(profile)).collect();
    if n > 0 {
        ranges.push(Dim::ALL.map(Interval::full));
    }
    RuleSet::from_ranges(ranges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        for style in [SynthStyle::Firewall, SynthStyle::Acl, SynthStyle::Ipc] {
            let a = generate(style, 200, 4);
            assert_eq!(a, generate(style, 200, 4));
            assert_ne!(a, generate(style, 200, 5));
            assert_eq!(a.len(), 200);
            assert!(a.rules.last().unwrap().is_match_all());
            assert!(a.rules.iter().all(|r| r.is_valid()));
        }
        assert!(generate(SynthStyle::Acl, 0, 1).is_empty());
    }

    #[test]
    fn roundtrips_through_classbench_text() {
        for style in [SynthStyle::Firewall, SynthStyle::Acl, SynthStyle::Ipc] {
            let rs = generate(style, 300, 9);
            let text = rs.to_classbench().unwrap();
            assert_eq!(RuleSet::parse_classbench(&text).unwrap(), rs);
        }
    }

    #[test]
    fn styles_differ_in_wildcard_density() {
        let wild = |rs: &RuleSet| {
            rs.rules
                .iter()
                .filter(|r| r.range(Dim::SrcIp) == Interval::full(Dim::SrcIp))
                .count()
        };
        assert!(
            wild(&generate(SynthStyle::Firewall, 1000, 1))
                > wild(&generate(SynthStyle::Acl, 1000, 1))
        );
    }
}
