//! Fixtures shared by the benchmarks.

use genepat::synthgen::generate;
use genepat::{GenSpec, PatternLabel, Trace};

/// A default trace for `label` with at least `records` records (rounded up
/// to whole periods).
pub fn fixture(label: PatternLabel, records: u64) -> Trace {
    let mut spec = GenSpec::default_for(label);
    let per_iter = if label == PatternLabel::P4 { 2 } else { 1 };
    match label {
        PatternLabel::P1 | PatternLabel::P3 | PatternLabel::P4 => spec.elem_count = records / per_iter,
        PatternLabel::P2 | PatternLabel::P6 => spec.n_outer = records.div_ceil(spec.period),
        // n(n+1)/2 >= records
        PatternLabel::P5 => spec.n_outer = ((2.0 * records as f64).sqrt().ceil() as u64).max(1),
    }
    generate(&spec).expect("default specs are valid")
}
