//! Trace-driven memory access pattern analysis.
//!
//! The crate is organised as a pipeline:
//!
//! * [`trace`]: the trace data model, validation, windowing and the text and
//!   binary trace file formats.
//! * [`synthgen`]: deterministic generators for the six base patterns.
//! * [`profiler`]: hotspot importance scoring and threshold selection.
//! * [`classifier`]: geometric feature extraction, the six-way pattern
//!   decision tree, trace decomposition and suite aggregation.
//! * [`memsim`]: an inclusive three-level LRU cache hierarchy with an L2
//!   stream prefetcher and an MSHR-bounded in-order timing model.
//! * [`metrics`]: RaL, L3 APC and the stall / activity / prefetch ratios.
//! * [`ptmap`]: energy levels, indifference curves and suite ordering on the
//!   (L3 APC, RaL) plane.
//! * [`advisor`]: per-pattern micro-architecture policy recommendations.
//! * [`render`]: SVG pattern figures and PT-MAP plots.

pub mod advisor;
pub mod classifier;
pub mod config;
pub mod error;
pub mod memsim;
pub mod metrics;
pub mod profiler;
pub mod ptmap;
pub mod render;
pub mod synthgen;
pub mod trace;

pub use advisor::{recommend, Advice, CacheLevel, FetchGranularity, PagePolicy, PolicyRecommendation, PrefetchMode};
pub use classifier::{
    aggregate_suite, classify_window, decompose_trace, extract_features, ClassifierConfig, Decomposition,
    PatternFeatures, PatternLabel, PatternMix, Periodicity,
};
pub use config::KvConfig;
pub use error::{Error, Result};
pub use memsim::{reference_lru, simulate, Associativity, HierarchyConfig, LevelConfig, LevelCounters, SimCounters};
pub use metrics::{derive_metrics, derive_metrics_with, MetricOptions, MetricSet};
pub use profiler::{importance, select_hotspots, ProfileRecord, ProgramProfile};
pub use ptmap::{energy_level, indifference_curve_points, order_suites, suite_centers, EnergyLevel, PtMapConfig, PtMapPoint};
pub use render::{render_pattern_figure, render_ptmap, RenderSpec};
pub use synthgen::{generate, generate_mix, GenSpec, OpMix, SplitMix64};
pub use trace::{validate_trace, window_trace, Op, Trace, TraceRecord, ValidationReport, Window};
