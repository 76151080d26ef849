//! Deterministic generators for the six base-pattern code templates.
//!
//! | label | template                                  | constraint        |
//! |-------|-------------------------------------------|-------------------|
//! | P1    | `for i { op A[i] }`                       | stride > c        |
//! | P2    | `for i { for j < period { op A[j] } }`    | stride < d        |
//! | P3    | `for i { op A[B[i]] }`                    | stride > d        |
//! | P4    | `for i { op A[random()] }`                | footprint >= 1 MiB|
//! | P5    | `for i in 1..=n { for j in 1..=i { op A[j] } }` | stride > c  |
//! | P6    | `for i { for j < period { op A[B[j]] } }` | stride > d        |
//!
//! `c` and `d` are the cache line size and prefetch trigger distance from
//! [`ClassifierConfig`].
//!
//! Random offsets come from [`SplitMix64`]; an offset below `footprint` is
//! `(next_u64() as u128 * slots as u128) >> 64` where `slots = footprint /
//! size`, scaled back by `size`. Any implementation following these two
//! rules reproduces the P4 traces bit for bit.

use std::fmt;
use std::str::FromStr;

use crate::classifier::{ClassifierConfig, PatternLabel};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::trace::{Op, Trace, TraceRecord, MAX_ACCESS_SIZE};

/// Smallest footprint for a random-access spec.
pub const MIN_RANDOM_FOOTPRINT: u64 = 1 << 20;

/// SplitMix64: `state += 0x9E3779B97F4A7C15`, then the output is `z` mixed
/// as `z = (z ^ z>>30) * 0xBF58476D1CE4E5B9; z = (z ^ z>>27) *
/// 0x94D049BB133111EB; z ^ z>>31` (wrapping arithmetic).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..bound` by multiply-shift.
    pub fn below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform float in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// What each template access does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpMix {
    Read,
    Write,
    /// A read immediately followed by a write of the same address.
    ReadModifyWrite,
}

impl OpMix {
    pub fn as_str(self) -> &'static str {
        match self {
            OpMix::Read => "read",
            OpMix::Write => "write",
            OpMix::ReadModifyWrite => "rmw",
        }
    }
}

impl fmt::Display for OpMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OpMix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "read" | "R" => Ok(OpMix::Read),
            "write" | "W" => Ok(OpMix::Write),
            "rmw" | "RMW" => Ok(OpMix::ReadModifyWrite),
            other => Err(Error::param(format!("unknown op mix {other:?} (read, write, rmw)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub pattern: PatternLabel,
    pub base_addr: u64,
    /// Byte distance between consecutive elements of the swept array.
    pub stride: u64,
    /// Accesses per repetition (P2, P6).
    pub period: u64,
    /// Outer repetitions (P2, P6) or the triangular bound `n` (P5).
    pub n_outer: u64,
    /// Address range of the random accesses (P4).
    pub footprint: u64,
    /// Number of template iterations for the single loops (P1, P3, P4).
    pub elem_count: u64,
    /// Bytes per access.
    pub size: u32,
    pub op_mix: OpMix,
    pub seed: u64,
}

impl GenSpec {
    /// A valid spec for `pattern` with modest sizes.
    pub fn default_for(pattern: PatternLabel) -> Self {
        let (stride, period, n_outer, elem_count) = match pattern {
            PatternLabel::P1 => (128, 0, 0, 100_000),
            PatternLabel::P2 => (8, 512, 200, 0),
            PatternLabel::P3 => (4096, 0, 0, 100_000),
            PatternLabel::P4 => (8, 0, 0, 50_000),
            PatternLabel::P5 => (128, 0, 450, 0),
            PatternLabel::P6 => (8192, 256, 400, 0),
        };
        Self {
            pattern,
            base_addr: 0x1000_0000,
            stride,
            period,
            n_outer,
            footprint: 1 << 30,
            elem_count,
            size: 8,
            op_mix: if pattern == PatternLabel::P4 {
                OpMix::ReadModifyWrite
            } else {
                OpMix::Read
            },
            seed: 0,
        }
    }

    /// Defaults for the pattern named by `pattern` (or the `pattern` key),
    /// overridden by any recognised keys.
    pub fn from_kv(kv: &KvConfig, pattern: Option<PatternLabel>) -> Result<Self> {
        let pattern = match pattern {
            Some(p) => p,
            None => kv
                .get::<PatternLabel>("pattern")?
                .ok_or_else(|| Error::param("generator spec needs a pattern"))?,
        };
        let mut spec = Self::default_for(pattern);
        kv.apply("base_addr", &mut spec.base_addr)?;
        kv.apply("stride", &mut spec.stride)?;
        kv.apply("period", &mut spec.period)?;
        kv.apply("n_outer", &mut spec.n_outer)?;
        kv.apply("footprint", &mut spec.footprint)?;
        kv.apply("elem_count", &mut spec.elem_count)?;
        kv.apply("size", &mut spec.size)?;
        kv.apply("op_mix", &mut spec.op_mix)?;
        kv.apply("seed", &mut spec.seed)?;
        Ok(spec)
    }

    /// Check the template constraint for this spec's pattern.
    pub fn validate(&self, cfg: &ClassifierConfig) -> Result<()> {
        self.validate_shape()?;
        let (c, d) = (cfg.c, cfg.d);
        let err = |what: String| Err(Error::param(format!("{} spec: {what}", self.pattern)));
        match self.pattern {
            PatternLabel::P1 | PatternLabel::P5 if self.stride <= c => err(format!("stride {} must exceed c={c}", self.stride)),
            PatternLabel::P3 | PatternLabel::P6 if self.stride <= d => err(format!("stride {} must exceed d={d}", self.stride)),
            PatternLabel::P2 if self.stride >= d => err(format!("stride {} must be below d={d}", self.stride)),
            PatternLabel::P4 if self.footprint < MIN_RANDOM_FOOTPRINT => {
                err(format!("footprint {} must be at least {MIN_RANDOM_FOOTPRINT}", self.footprint))
            }
            _ => Ok(()),
        }
    }

    // Constraints needed to emit a well-formed trace at all.
    fn validate_shape(&self) -> Result<()> {
        let err = |what: &str| Err(Error::param(format!("{} spec: {what}", self.pattern)));
        if self.size == 0 || self.size > MAX_ACCESS_SIZE {
            return err("size must be in 1..=4096");
        }
        if self.pattern != PatternLabel::P4 && self.stride == 0 {
            return err("stride must be >= 1");
        }
        match self.pattern {
            PatternLabel::P2 | PatternLabel::P6 if self.period < 2 => err("period must be >= 2"),
            PatternLabel::P4 if self.footprint < self.size as u64 => err("footprint smaller than one access"),
            _ => {
                let span = self.span().ok_or_else(|| Error::param(format!("{} spec: address range overflows", self.pattern)))?;
                if self.base_addr.checked_add(span).and_then(|e| e.checked_add(self.size as u64)).is_none() {
                    return err("address range overflows");
                }
                Ok(())
            }
        }
    }

    // Largest offset from base_addr the spec can produce.
    fn span(&self) -> Option<u64> {
        let steps = match self.pattern {
            PatternLabel::P1 | PatternLabel::P3 => self.elem_count.saturating_sub(1),
            PatternLabel::P2 | PatternLabel::P6 => self.period.saturating_sub(1),
            PatternLabel::P5 => self.n_outer.saturating_sub(1),
            PatternLabel::P4 => return Some(self.footprint),
        };
        steps.checked_mul(self.stride)
    }

    /// Template iterations the spec describes, before the op mix expands
    /// them into records.
    pub fn iterations(&self) -> u64 {
        match self.pattern {
            PatternLabel::P1 | PatternLabel::P3 | PatternLabel::P4 => self.elem_count,
            PatternLabel::P2 | PatternLabel::P6 => self.n_outer * self.period,
            PatternLabel::P5 => self.n_outer * (self.n_outer + 1) / 2,
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "{} stride={} period={} n_outer={} footprint={} elem_count={} size={} op_mix={} seed={}",
            self.pattern,
            self.stride,
            self.period,
            self.n_outer,
            self.footprint,
            self.elem_count,
            self.size,
            self.op_mix,
            self.seed
        )
    }
}

/// Generate the trace for `spec`, checking its constraint against the
/// default thresholds.
pub fn generate(spec: &GenSpec) -> Result<Trace> {
    generate_with(spec, &ClassifierConfig::default())
}

pub fn generate_with(spec: &GenSpec, cfg: &ClassifierConfig) -> Result<Trace> {
    spec.validate(cfg)?;
    Ok(emit(spec))
}

/// Generate without the template stride/footprint constraints, for traces
/// that deliberately sit outside a pattern's region (e.g. a 64-byte stream).
/// Shape checks (size, overflow, period) still apply.
pub fn generate_unchecked(spec: &GenSpec) -> Result<Trace> {
    spec.validate_shape()?;
    Ok(emit(spec))
}

fn emit(spec: &GenSpec) -> Trace {
    let base = spec.base_addr;
    let offsets: Box<dyn Iterator<Item = u64>> = match spec.pattern {
        PatternLabel::P1 | PatternLabel::P3 => Box::new((0..spec.elem_count).map(move |i| i * spec.stride)),
        PatternLabel::P2 | PatternLabel::P6 => Box::new(
            (0..spec.n_outer).flat_map(move |_| (0..spec.period).map(move |j| j * spec.stride)),
        ),
        PatternLabel::P5 => Box::new((1..=spec.n_outer).flat_map(move |i| (0..i).map(move |j| j * spec.stride))),
        PatternLabel::P4 => {
            let mut rng = SplitMix64::new(spec.seed);
            let size = spec.size as u64;
            let slots = spec.footprint / size;
            Box::new((0..spec.elem_count).map(move |_| rng.below(slots) * size))
        }
    };
    let ops: &[Op] = match spec.op_mix {
        OpMix::Read => &[Op::Read],
        OpMix::Write => &[Op::Write],
        OpMix::ReadModifyWrite => &[Op::Read, Op::Write],
    };
    let mut records = Vec::with_capacity((spec.iterations() as usize).saturating_mul(ops.len()));
    for off in offsets {
        for &op in ops {
            records.push(TraceRecord::new(records.len() as u64, base + off, op, spec.size));
        }
    }
    Trace::new(records, format!("synthgen:{}", spec.describe()))
}

/// Concatenate sub-traces with record counts proportional to `fraction`.
///
/// `total` defaults to the sum of the specs' natural lengths. Each segment
/// is its spec's trace truncated, or repeated from the start, to its share;
/// shares are rounded by largest remainder so they add up to `total`. The
/// origin lists each segment as `label@start+len`.
pub fn generate_mix(parts: &[(GenSpec, f64)], total: Option<usize>) -> Result<Trace> {
    if parts.is_empty() {
        return Err(Error::param("mix needs at least one spec"));
    }
    if parts.iter().any(|(_, f)| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::param("mix fractions must be positive"));
    }
    let sum: f64 = parts.iter().map(|(_, f)| f).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("mix fractions sum to {sum}, expected 1")));
    }
    let traces = parts.iter().map(|(s, _)| generate(s)).collect::<Result<Vec<_>>>()?;
    let total = total.unwrap_or_else(|| traces.iter().map(Trace::len).sum());
    let shares = apportion(&parts.iter().map(|(_, f)| *f).collect::<Vec<_>>(), total);

    let mut records = Vec::with_capacity(total);
    let mut segments = Vec::with_capacity(parts.len());
    for ((spec, _), (sub, share)) in parts.iter().zip(traces.iter().zip(shares)) {
        if share > 0 && sub.is_empty() {
            return Err(Error::param(format!("{} spec generates no records", spec.pattern)));
        }
        segments.push(format!("{}@{}+{}", spec.pattern, records.len(), share));
        records.extend(sub.records.iter().cycle().take(share).copied());
    }
    let mut trace = Trace::new(records, format!("mix:{}", segments.join(";")));
    trace.renumber();
    Ok(trace)
}

/// Split `total` into integer shares proportional to `fractions`
/// (largest-remainder rounding, ties to the earlier part).
fn apportion(fractions: &[f64], total: usize) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut shares: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = shares.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        shares[i] += 1;
    }
    shares
}

/// Parse the segment list written by [`generate_mix`] into
/// `(label, start, len)` triples.
pub fn mix_segments(origin: &str) -> Option<Vec<(PatternLabel, usize, usize)>> {
    origin
        .strip_prefix("mix:")?
        .split(';')
        .map(|seg| {
            let (label, rest) = seg.split_once('@')?;
            let (start, len) = rest.split_once('+')?;
            Some((label.parse().ok()?, start.parse().ok()?, len.parse().ok()?))
        })
        .collect()
}
