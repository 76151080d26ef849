//! Randomised generator specs shared by the integration tests.

#![allow(dead_code)]

use genepat::synthgen::GenSpec;
use genepat::{OpMix, PatternLabel, SplitMix64};

/// Lower bound on records per generated trace.
pub const MIN_RECORDS: u64 = 100_000;

fn range(rng: &mut SplitMix64, lo: u64, hi: u64) -> u64 {
    lo + rng.below(hi - lo + 1)
}

/// A spec for `label` with parameters drawn inside the pattern's region and
/// at least `MIN_RECORDS` records.
pub fn random_spec(label: PatternLabel, rng: &mut SplitMix64) -> GenSpec {
    let mut s = GenSpec::default_for(label);
    s.seed = rng.next_u64();
    s.base_addr = range(rng, 1, 1 << 20) << 12;
    s.size = [1, 4, 8, 16][rng.below(4) as usize];
    s.op_mix = match label {
        PatternLabel::P4 => OpMix::ReadModifyWrite,
        _ => [OpMix::Read, OpMix::Write][rng.below(2) as usize],
    };
    match label {
        PatternLabel::P1 => {
            s.stride = range(rng, 65, 2048);
            s.elem_count = range(rng, MIN_RECORDS, 2 * MIN_RECORDS);
        }
        PatternLabel::P3 => {
            s.stride = range(rng, 2049, 1 << 16);
            s.elem_count = range(rng, MIN_RECORDS, 2 * MIN_RECORDS);
        }
        PatternLabel::P2 | PatternLabel::P6 => {
            s.stride = if label == PatternLabel::P2 { range(rng, 1, 2047) } else { range(rng, 2049, 1 << 16) };
            s.period = range(rng, 8, 1024);
            s.n_outer = MIN_RECORDS.div_ceil(s.period) + rng.below(50);
        }
        PatternLabel::P4 => {
            s.footprint = 1 << range(rng, 20, 36);
            s.elem_count = range(rng, MIN_RECORDS / 2, MIN_RECORDS);
        }
        PatternLabel::P5 => {
            s.stride = range(rng, 65, 2048);
            s.n_outer = range(rng, 448, 1000);
        }
    }
    s
}
