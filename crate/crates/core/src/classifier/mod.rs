//! Six-way base pattern classification.
//!
//! A window of accesses is reduced to a handful of geometric features of its
//! pattern figure (address against access sequence): the slope of the line,
//! how straight it is, and whether it repeats with a fixed or a variable
//! period. A total decision tree over those features assigns exactly one of
//! the six labels, so every window lands in exactly one class.

mod features;
mod mix;

pub use features::extract_features;
pub use mix::{aggregate_suite, decompose_trace, Decomposition, PatternMix, WindowLabel};

use std::fmt;
use std::str::FromStr;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::trace::DEFAULT_MIN_WINDOW;

/// Window length used by decomposition when the caller has no preference.
pub const DEFAULT_WINDOW_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternLabel {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl PatternLabel {
    pub const ALL: [PatternLabel; 6] = [
        PatternLabel::P1,
        PatternLabel::P2,
        PatternLabel::P3,
        PatternLabel::P4,
        PatternLabel::P5,
        PatternLabel::P6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        ["P1", "P2", "P3", "P4", "P5", "P6"][self.index()]
    }

    pub fn describe(self) -> &'static str {
        match self {
            PatternLabel::P1 => "aperiodic low-slope line",
            PatternLabel::P2 => "fixed-period low-slope sawtooth",
            PatternLabel::P3 => "aperiodic high-slope line",
            PatternLabel::P4 => "random access",
            PatternLabel::P5 => "variable-period low-slope sawtooth",
            PatternLabel::P6 => "fixed-period high-slope sawtooth",
        }
    }
}

impl fmt::Display for PatternLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::param(format!("unknown pattern label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Periodicity {
    Aperiodic,
    Fixed,
    Variable,
}

impl Periodicity {
    pub fn as_str(self) -> &'static str {
        match self {
            Periodicity::Aperiodic => "aperiodic",
            Periodicity::Fixed => "fixed",
            Periodicity::Variable => "variable",
        }
    }
}

impl fmt::Display for Periodicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternFeatures {
    /// Bytes per access within a period (or over the whole window when
    /// aperiodic). Signed: descending walks have negative slope.
    pub slope_k: f64,
    /// Access-weighted R² of the per-segment line fits, in [0, 1].
    pub linearity_r2: f64,
    pub periodic: Periodicity,
    /// Mean length of the complete periods; `None` unless `reset_count >= 2`.
    pub period_mean: Option<f64>,
    /// Coefficient of variation of the complete period lengths.
    pub period_cv: Option<f64>,
    pub reset_count: usize,
    /// Lengths of the complete periods, in order.
    pub periods: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    /// Cache line size in bytes.
    pub c: u64,
    /// Prefetch trigger threshold distance in bytes.
    pub d: u64,
    /// Minimum R² for an aperiodic window to count as a straight line.
    pub r2_line: f64,
    /// Largest period CV still considered a fixed period.
    pub cv_fixed: f64,
    /// Low/high slope boundary in bytes per access.
    pub slope_hi: f64,
    /// A reset is a move against the trend larger than this many strides.
    pub reset_factor: f64,
    /// Period sequences that grow (or shrink) monotonically over at least
    /// this many complete periods are variable regardless of their CV.
    pub drift_min_periods: usize,
    /// Upper bound on point pairs sampled for the Theil–Sen slope.
    pub max_pairs: usize,
    pub min_window: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            c: 64,
            d: 2048,
            r2_line: 0.95,
            cv_fixed: 0.10,
            slope_hi: 2048.0,
            reset_factor: 4.0,
            drift_min_periods: 3,
            max_pairs: 10_000,
            min_window: DEFAULT_MIN_WINDOW,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0 < self.c && self.c < self.d) {
            return Err(Error::param(format!("need 0 < c < d, got c={} d={}", self.c, self.d)));
        }
        for (name, v) in [("r2_line", self.r2_line), ("cv_fixed", self.cv_fixed)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.slope_hi.is_finite() && self.slope_hi > 0.0) {
            return Err(Error::param(format!("slope_hi must be positive, got {}", self.slope_hi)));
        }
        if !(self.reset_factor.is_finite() && self.reset_factor >= 1.0) {
            return Err(Error::param(format!("reset_factor must be >= 1, got {}", self.reset_factor)));
        }
        if self.max_pairs == 0 || self.min_window < 2 || self.drift_min_periods < 2 {
            return Err(Error::param("max_pairs, min_window and drift_min_periods are out of range"));
        }
        Ok(())
    }

    /// Read overrides from `key=value` entries. `slope_hi` follows `d`
    /// unless set explicitly.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let mut cfg = Self::default();
        kv.apply("c", &mut cfg.c)?;
        kv.apply("d", &mut cfg.d)?;
        cfg.slope_hi = cfg.d as f64;
        kv.apply("slope_hi", &mut cfg.slope_hi)?;
        kv.apply("r2_line", &mut cfg.r2_line)?;
        kv.apply("cv_fixed", &mut cfg.cv_fixed)?;
        kv.apply("reset_factor", &mut cfg.reset_factor)?;
        kv.apply("drift_min_periods", &mut cfg.drift_min_periods)?;
        kv.apply("max_pairs", &mut cfg.max_pairs)?;
        kv.apply("min_window", &mut cfg.min_window)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Decision tree over the features. Total: every feature vector maps to
/// exactly one label.
pub fn classify_window(f: &PatternFeatures, cfg: &ClassifierConfig) -> PatternLabel {
    let low_slope = f.slope_k.abs() <= cfg.slope_hi;
    match f.periodic {
        Periodicity::Aperiodic if f.linearity_r2 < cfg.r2_line => PatternLabel::P4,
        Periodicity::Aperiodic if low_slope => PatternLabel::P1,
        Periodicity::Aperiodic => PatternLabel::P3,
        Periodicity::Fixed if low_slope => PatternLabel::P2,
        Periodicity::Fixed => PatternLabel::P6,
        Periodicity::Variable if low_slope => PatternLabel::P5,
        // high-slope variable periods are a special case of random access
        Periodicity::Variable => PatternLabel::P4,
    }
}
