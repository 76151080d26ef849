//! Micro-architecture policy advice per base pattern.
//!
//! | label | page  | fetch  | cache levels | prefetch     |
//! |-------|-------|--------|--------------|--------------|
//! | P1    | open  | coarse | L1 L2 L3     | stream       |
//! | P2    | open  | coarse | L1 L2 L3     | stream       |
//! | P3    | close | fine   | L1 L2 L3     | stream       |
//! | P4    | close | fine   | L1           | off          |
//! | P5    | open  | coarse | L1 L2 L3     | period-aware |
//! | P6    | close | fine   | L3           | stream       |
//!
//! P2 and P5 get different prefetch modes because their periods differ; a
//! period-aware prefetcher re-arms on each period reset. P5's page policy
//! follows P1/P2 (low slope, high spatial locality).

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use crate::classifier::{PatternLabel, PatternMix};
use crate::error::Result;

/// Dominance margins below this are reported as ambiguous.
pub const AMBIGUOUS_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PagePolicy {
    Open,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchGranularity {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CacheLevel {
    L1,
    L2,
    L3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefetchMode {
    Stream,
    Off,
    PeriodAware,
}

impl fmt::Display for PagePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PagePolicy::Open => "open",
            PagePolicy::Close => "close",
        })
    }
}

impl fmt::Display for FetchGranularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FetchGranularity::Coarse => "coarse",
            FetchGranularity::Fine => "fine",
        })
    }
}

impl fmt::Display for CacheLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CacheLevel::L1 => "L1",
            CacheLevel::L2 => "L2",
            CacheLevel::L3 => "L3",
        })
    }
}

impl fmt::Display for PrefetchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrefetchMode::Stream => "stream",
            PrefetchMode::Off => "off",
            PrefetchMode::PeriodAware => "period-aware",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRecommendation {
    pub page_policy: PagePolicy,
    pub fetch_granularity: FetchGranularity,
    pub cache_levels: Vec<CacheLevel>,
    pub prefetch_mode: PrefetchMode,
    /// Each entry starts with a `[policy:<label>]` citation tag.
    pub rationale: Vec<String>,
}

impl PolicyRecommendation {
    pub fn cache_levels_str(&self) -> String {
        self.cache_levels.iter().map(ToString::to_string).collect::<Vec<_>>().join("+")
    }
}

pub fn policy_for(label: PatternLabel) -> PolicyRecommendation {
    use CacheLevel::*;
    use FetchGranularity::*;
    use PagePolicy::*;
    use PrefetchMode::*;
    let (page_policy, fetch_granularity, cache_levels, prefetch_mode, notes): (_, _, Vec<CacheLevel>, _, &[&str]) = match label {
        PatternLabel::P1 => (
            Open,
            Coarse,
            vec![L1, L2, L3],
            Stream,
            &[
                "low slope gives high spatial locality, so an open DRAM page policy pays off",
                "straight-line figure suits prefetching with coarse-grained lines",
            ],
        ),
        PatternLabel::P2 => (
            Open,
            Coarse,
            vec![L1, L2, L3],
            Stream,
            &[
                "low slope with a fixed period: cache the data and fetch coarse-grained",
                "fixed period keeps a plain stream prefetcher on track",
            ],
        ),
        PatternLabel::P3 => (
            Close,
            Fine,
            vec![L1, L2, L3],
            Stream,
            &[
                "high slope means low spatial locality, so a close page policy is better",
                "fine-grained lines cut bandwidth use and contention as the working set grows quickly",
            ],
        ),
        PatternLabel::P4 => (
            Close,
            Fine,
            vec![L1],
            Off,
            &[
                "random access has low spatial locality: fine fetch granularity and close page policy",
                "data is read, written immediately and rarely reused, so cache it in L1 only",
                "allocating in L2/L3 would flush co-running programs' data",
            ],
        ),
        PatternLabel::P5 => (
            Open,
            Coarse,
            vec![L1, L2, L3],
            PeriodAware,
            &[
                "low slope: use caching and coarse-grained fetch",
                "variable period needs a prefetcher that re-arms at each period reset",
            ],
        ),
        PatternLabel::P6 => (
            Close,
            Fine,
            vec![L3],
            Stream,
            &[
                "very large slope grows the working set sharply, so L1/L2 caching does not help",
                "allocate in the LLC (or a die-stacked DRAM cache); fine-grained fetch and prefetch",
                "like P3, prefers the close page policy",
            ],
        ),
    };
    PolicyRecommendation {
        page_policy,
        fetch_granularity,
        cache_levels,
        prefetch_mode,
        rationale: notes.iter().map(|n| format!("[policy:{label}] {n}")).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advice {
    pub mix: PatternMix,
    /// Entries for every label with non-zero weight.
    pub per_label: BTreeMap<PatternLabel, PolicyRecommendation>,
    pub dominant_label: PatternLabel,
    pub dominant: PolicyRecommendation,
    pub margin: f64,
    pub ambiguous: bool,
}

pub fn recommend(mix: &PatternMix) -> Result<Advice> {
    // Re-check the invariants: mixes can be built by hand through `normalized`.
    let mix = PatternMix::new(*mix.weights())?;
    let per_label = mix
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(l, _)| (l, policy_for(l)))
        .collect();
    let dominant_label = mix.dominant();
    let margin = mix.dominance_margin();
    Ok(Advice {
        mix,
        per_label,
        dominant_label,
        dominant: policy_for(dominant_label),
        margin,
        ambiguous: margin < AMBIGUOUS_MARGIN,
    })
}

impl Advice {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,weight,page_policy,fetch_granularity,cache_levels,prefetch_mode\n");
        let mut row = |name: &str, weight: f64, r: &PolicyRecommendation| {
            let _ = writeln!(
                out,
                "{name},{weight:.6},{},{},{},{}",
                r.page_policy,
                r.fetch_granularity,
                r.cache_levels_str(),
                r.prefetch_mode
            );
        };
        for (l, r) in &self.per_label {
            row(l.as_str(), self.mix.weight(*l), r);
        }
        row(&format!("dominant:{}", self.dominant_label), self.mix.weight(self.dominant_label), &self.dominant);
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pattern mix: {}", self.mix);
        let _ = writeln!(
            out,
            "dominant: {} ({}), margin {:.3}{}",
            self.dominant_label,
            self.dominant_label.describe(),
            self.margin,
            if self.ambiguous { " [ambiguous]" } else { "" }
        );
        for (l, r) in &self.per_label {
            let _ = writeln!(
                out,
                "\n{l} weight {:.3}: page={} fetch={} cache={} prefetch={}",
                self.mix.weight(*l),
                r.page_policy,
                r.fetch_granularity,
                r.cache_levels_str(),
                r.prefetch_mode
            );
            for note in &r.rationale {
                let _ = writeln!(out, "  - {note}");
            }
        }
        out
    }
}
