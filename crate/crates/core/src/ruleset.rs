//! Five-tuple rules, packets, and the linear-scan reference matcher.

use std::fmt;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_DIMS: usize = 5;

/// Header fields, in the order used by every per-dimension array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim {
    SrcIp,
    DstIp,
    SrcPort,
    DstPort,
    Proto,
}

impl Dim {
    pub const ALL: [Dim; NUM_DIMS] = [
        Dim::SrcIp,
        Dim::DstIp,
        Dim::SrcPort,
        Dim::DstPort,
        Dim::Proto,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Dim> {
        Self::ALL.get(i).copied()
    }

    /// Field width in bits.
    pub fn bits(self) -> u32 {
        match self {
            Dim::SrcIp | Dim::DstIp => 32,
            Dim::SrcPort | Dim::DstPort => 16,
            Dim::Proto => 8,
        }
    }

    pub fn max_value(self) -> u32 {
        if self.bits() == 32 {
            u32::MAX
        } else {
            (1u32 << self.bits()) - 1
        }
    }

    /// Number of distinct values in the field.
    pub fn domain_size(self) -> u64 {
        1u64 << self.bits()
    }

    pub fn name(self) -> &'static str {
        match self {
            Dim::SrcIp => "src_ip",
            Dim::DstIp => "dst_ip",
            Dim::SrcPort => "src_port",
            Dim::DstPort => "dst_port",
            Dim::Proto => "proto",
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct Interval {
    pub lo: u32,
    pub hi: u32,
}

impl From<(u32, u32)> for Interval {
    fn from((lo, hi): (u32, u32)) -> Self {
        Interval { lo, hi }
    }
}

impl From<Interval> for (u32, u32) {
    fn from(iv: Interval) -> Self {
        (iv.lo, iv.hi)
    }
}

impl Interval {
    pub fn new(lo: u32, hi: u32) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn full(dim: Dim) -> Self {
        Interval {
            lo: 0,
            hi: dim.max_value(),
        }
    }

    pub fn point(v: u32) -> Self {
        Interval { lo: v, hi: v }
    }

    /// Number of values covered; `u64` because a full 32-bit field has 2^32.
    #[inline]
    pub fn len(&self) -> u64 {
        u64::from(self.hi) - u64::from(self.lo) + 1
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        self.lo <= v && v <= self.hi
    }

    #[inline]
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn covers(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Interval of an IPv4 prefix `addr/len`; host bits of `addr` are masked off.
    pub fn from_prefix(addr: u32, len: u8) -> Option<Interval> {
        if len > 32 {
            return None;
        }
        if len == 0 {
            return Some(Interval {
                lo: 0,
                hi: u32::MAX,
            });
        }
        let host_bits = 32 - u32::from(len);
        let mask = if host_bits == 32 {
            0
        } else {
            u32::MAX << host_bits
        };
        let lo = addr & mask;
        Some(Interval { lo, hi: lo | !mask })
    }

    /// Inverse of [`Interval::from_prefix`]; `None` if the interval is not a prefix block.
    pub fn to_prefix(&self) -> Option<(u32, u8)> {
        let len = self.len();
        if !len.is_power_of_two() {
            return None;
        }
        let host_bits = len.trailing_zeros();
        if host_bits < 32 && u64::from(self.lo) % len != 0 {
            return None;
        }
        Some((self.lo, (32 - host_bits) as u8))
    }
}

/// Prioritized hyper-rectangle. Lower `priority` wins.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub priority: usize,
    pub ranges: [Interval; NUM_DIMS],
}

impl Rule {
    pub fn match_all(priority: usize) -> Self {
        Rule {
            priority,
            ranges: Dim::ALL.map(Interval::full),
        }
    }

    #[inline]
    pub fn range(&self, dim: Dim) -> Interval {
        self.ranges[dim.index()]
    }

    #[inline]
    pub fn matches(&self, pkt: &Packet) -> bool {
        self.ranges
            .iter()
            .zip(pkt.0.iter())
            .all(|(iv, &v)| iv.contains(v))
    }

    pub fn is_match_all(&self) -> bool {
        Dim::ALL.iter().all(|&d| self.range(d) == Interval::full(d))
    }

    pub fn is_valid(&self) -> bool {
        Dim::ALL
            .iter()
            .all(|&d| self.range(d).lo <= self.range(d).hi && self.range(d).hi <= d.max_value())
    }
}

/// One header value per dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet(pub [u32; NUM_DIMS]);

impl Packet {
    #[inline]
    pub fn get(&self, dim: Dim) -> u32 {
        self.0[dim.index()]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("rule {index} cannot be written as a ClassBench line: {msg}")]
    Unrepresentable { index: usize, msg: String },
    #[error("sample size must be at least 1")]
    EmptySample,
}

fn line_err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        msg: msg.into(),
    }
}

/// Ordered rule list; position is priority.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    /// Builds a set from ranges, assigning priorities by position.
    pub fn from_ranges(ranges: impl IntoIterator<Item = [Interval; NUM_DIMS]>) -> Self {
        let rules = ranges
            .into_iter()
            .enumerate()
            .map(|(priority, ranges)| Rule { priority, ranges })
            .collect();
        RuleSet { rules }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Rule {
        &self.rules[idx]
    }

    /// Parses ClassBench filter text: one `@sip/len dip/len sp : sp dp : dp proto/mask` per line.
    pub fn parse_classbench(text: &str) -> Result<RuleSet, ParseError> {
        let mut rules = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ranges = parse_line(line, lineno)?;
            rules.push(Rule {
                priority: rules.len(),
                ranges,
            });
        }
        Ok(RuleSet { rules })
    }

    /// Writes rules back in ClassBench syntax. IP ranges must be prefix blocks and
    /// protocol ranges exact or wildcard.
    pub fn to_classbench(&self) -> Result<String, ParseError> {
        let mut out = String::new();
        for (index, rule) in self.rules.iter().enumerate() {
            let unrep = |msg: &str| ParseError::Unrepresentable {
                index,
                msg: msg.to_string(),
            };
            let (sip, slen) = rule
                .range(Dim::SrcIp)
                .to_prefix()
                .ok_or_else(|| unrep("src ip is not a prefix"))?;
            let (dip, dlen) = rule
                .range(Dim::DstIp)
                .to_prefix()
                .ok_or_else(|| unrep("dst ip is not a prefix"))?;
            let proto = rule.range(Dim::Proto);
            let proto_txt = if proto == Interval::full(Dim::Proto) {
                "0x00/0x00".to_string()
            } else if proto.lo == proto.hi {
                format!("0x{:02X}/0xFF", proto.lo)
            } else {
                return Err(unrep("protocol range is neither exact nor wildcard"));
            };
            let sp = rule.range(Dim::SrcPort);
            let dp = rule.range(Dim::DstPort);
            out.push_str(&format!(
                "@{}/{}\t{}/{}\t{} : {}\t{} : {}\t{}\n",
                Ipv4Addr::from(sip),
                slen,
                Ipv4Addr::from(dip),
                dlen,
                sp.lo,
                sp.hi,
                dp.lo,
                dp.hi,
                proto_txt
            ));
        }
        Ok(out)
    }

    /// Pretty JSON dump of every rule's `[lo, hi]` pairs and priority.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rules).expect("rules serialize")
    }
}

fn parse_prefix(tok: &str, lineno: usize) -> Result<Interval, ParseError> {
    let (addr, len) = tok
        .split_once('/')
        .ok_or_else(|| line_err(lineno, format!("expected prefix a.b.c.d/len, got {tok:?}")))?;
    let addr: Ipv4Addr = addr
        .parse()
        .map_err(|_| line_err(lineno, format!("bad IPv4 address {addr:?}")))?;
    let len: u8 = len
        .parse()
        .map_err(|_| line_err(lineno, format!("bad prefix length {len:?}")))?;
    Interval::from_prefix(u32::from(addr), len)
        .ok_or_else(|| line_err(lineno, format!("prefix length {len} exceeds 32")))
}

fn parse_port_range(tok: &str, lineno: usize) -> Result<Interval, ParseError> {
    let (lo, hi) = tok
        .split_once(':')
        .ok_or_else(|| line_err(lineno, format!("expected port range lo : hi, got {tok:?}")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u16>()
            .map_err(|_| line_err(lineno, format!("bad port {s:?}")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(line_err(lineno, format!("inverted port range {lo} : {hi}")));
    }
    Ok(Interval::new(u32::from(lo), u32::from(hi)))
}

fn parse_hex_byte(s: &str, lineno: usize) -> Result<u32, ParseError> {
    let v = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => s.parse::<u32>(),
    }
    .map_err(|_| line_err(lineno, format!("bad protocol field {s:?}")))?;
    if v > 0xFF {
        return Err(line_err(
            lineno,
            format!("protocol field {s:?} exceeds 8 bits"),
        ));
    }
    Ok(v)
}

fn parse_proto(tok: &str, lineno: usize) -> Result<Interval, ParseError> {
    let (val, mask) = tok
        .split_once('/')
        .ok_or_else(|| line_err(lineno, format!("expected protocol value/mask, got {tok:?}")))?;
    let val = parse_hex_byte(val, lineno)?;
    match parse_hex_byte(mask, lineno)? {
        0xFF => Ok(Interval::point(val)),
        0x00 => Ok(Interval::full(Dim::Proto)),
        m => Err(line_err(
            lineno,
            format!("unsupported protocol mask 0x{m:02X}"),
        )),
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<[Interval; NUM_DIMS], ParseError> {
    let body = line
        .strip_prefix('@')
        .ok_or_else(|| line_err(lineno, "rule lines must start with '@'"))?;
    let mut toks = body.split_whitespace();
    let sip = toks
        .next()
        .ok_or_else(|| line_err(lineno, "missing source prefix"))?;
    let dip = toks
        .next()
        .ok_or_else(|| line_err(lineno, "missing destination prefix"))?;
    // Port ranges appear as "lo : hi" with optional spacing around the colon.
    let rest = toks
        .collect::<Vec<_>>()
        .join(" ")
        .replace(" :", ":")
        .replace(": ", ":");
    let mut fields = rest.split_whitespace();
    let sp = fields
        .next()
        .ok_or_else(|| line_err(lineno, "missing source port range"))?;
    let dp = fields
        .next()
        .ok_or_else(|| line_err(lineno, "missing destination port range"))?;
    let proto = fields
        .next()
        .ok_or_else(|| line_err(lineno, "missing protocol"))?;
    let trailing: Vec<&str> = fields.collect();
    if !trailing.is_empty() {
        log::warn!("line {lineno}: ignoring trailing fields {trailing:?}");
    }
    Ok([
        parse_prefix(sip, lineno)?,
        parse_prefix(dip, lineno)?,
        parse_port_range(sp, lineno)?,
        parse_port_range(dp, lineno)?,
        parse_proto(proto, lineno)?,
    ])
}

#[inline]
pub fn rule_matches(rule: &Rule, pkt: &Packet) -> bool {
    rule.matches(pkt)
}

/// Index of the highest-priority (lowest-index) matching rule.
pub fn linear_match(rs: &RuleSet, pkt: &Packet) -> Option<usize> {
    rs.rules.iter().position(|r| r.matches(pkt))
}

/// Deterministic test traffic: a mix of uniform packets and packets placed at
/// rule corners or interiors, cycling through rules so each one is visited.
pub fn sample_packets(rs: &RuleSet, n: usize, seed: u64) -> Result<Vec<Packet>, ParseError> {
    if n == 0 {
        return Err(ParseError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if rs.is_empty() || rng.random_bool(0.25) {
            out.push(Packet(
                Dim::ALL.map(|d| rng.random_range(0..=d.max_value())),
            ));
            continue;
        }
        let rule = &rs.rules[(i + rng.random_range(0..rs.len())) % rs.len()];
        let interior = rng.random_bool(0.5);
        out.push(Packet(Dim::ALL.map(|d| {
            let iv = rule.range(d);
            if interior {
                rng.random_range(iv.lo..=iv.hi)
            } else if rng.random_bool(0.5) {
                iv.lo
            } else {
                iv.hi
            }
        })));
    }
    Ok(out)
}
