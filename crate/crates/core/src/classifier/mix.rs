use std::fmt;
use std::ops::Index;

use rayon::prelude::*;

use super::features::features_of;
use super::{classify_window, ClassifierConfig, PatternFeatures, PatternLabel};
use crate::error::{Error, Result};
use crate::trace::{window_trace_with, Trace};

const SUM_TOLERANCE: f64 = 1e-9;

/// Weight vector over the six base patterns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternMix {
    weights: [f64; 6],
}

impl PatternMix {
    /// Build a mix, checking that weights are non-negative and sum to one.
    pub fn new(weights: [f64; 6]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param(format!("mix weights must be finite and >= 0: {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::param(format!("mix weights sum to {sum}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// Scale non-negative weights so they sum to one.
    pub fn normalized(weights: [f64; 6]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param(format!("mix weights must be finite and >= 0: {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::param("mix weights are all zero"));
        }
        Ok(Self {
            weights: weights.map(|w| w / sum),
        })
    }

    pub fn pure(label: PatternLabel) -> Self {
        let mut weights = [0.0; 6];
        weights[label.index()] = 1.0;
        Self { weights }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (PatternLabel, f64)>) -> Result<Self> {
        let mut weights = [0.0; 6];
        for (l, w) in pairs {
            weights[l.index()] += w;
        }
        Self::new(weights)
    }

    pub fn weight(&self, label: PatternLabel) -> f64 {
        self.weights[label.index()]
    }

    pub fn weights(&self) -> &[f64; 6] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (PatternLabel, f64)> + '_ {
        PatternLabel::ALL.into_iter().map(|l| (l, self.weight(l)))
    }

    /// Label with the largest weight; ties go to the lowest label.
    pub fn dominant(&self) -> PatternLabel {
        let mut best = PatternLabel::P1;
        for l in PatternLabel::ALL {
            if self.weight(l) > self.weight(best) {
                best = l;
            }
        }
        best
    }

    /// Gap between the largest and second-largest weight.
    pub fn dominance_margin(&self) -> f64 {
        let mut sorted = self.weights;
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted[0] - sorted[1]
    }

    /// Read a mix from any of:
    ///
    /// * a `MIX:w1,..,w6` line, as printed after a window report;
    /// * a `P1,P2,P3,P4,P5,P6` header followed by one row of weights;
    /// * `label,weight` rows (a `label,weight` header is allowed).
    ///
    /// Other lines before a `MIX:` line are ignored. Weights printed with
    /// limited precision are accepted if they sum to 1 within 1e-4 and are
    /// then renormalised.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let num = |lineno: usize, s: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::format(lineno, format!("bad weight {s:?}")))
        };
        let row = |lineno: usize, s: &str| -> Result<[f64; 6]> {
            let v = s.split(',').map(|f| num(lineno, f)).collect::<Result<Vec<f64>>>()?;
            v.try_into().map_err(|_| Error::format(lineno, "expected six weights"))
        };
        let weights = if let Some((lineno, l)) = lines.iter().rev().find(|(_, l)| l.starts_with("MIX:")) {
            row(*lineno, &l["MIX:".len()..])?
        } else if let Some(&(lineno, _)) = lines.first().filter(|(_, l)| l.replace(' ', "") == "P1,P2,P3,P4,P5,P6") {
            let &(n, values) = lines.get(1).ok_or_else(|| Error::format(lineno, "header without a weight row"))?;
            row(n, values)?
        } else {
            let mut w = [0.0; 6];
            for &(lineno, l) in &lines {
                if l.starts_with("label,") {
                    continue;
                }
                let (label, weight) = l.split_once(',').ok_or_else(|| Error::format(lineno, "expected label,weight"))?;
                let label: PatternLabel = label.trim().parse().map_err(|e: Error| Error::format(lineno, e.to_string()))?;
                w[label.index()] += num(lineno, weight)?;
            }
            w
        };
        if lines.is_empty() {
            return Err(Error::format(0, "no mix found"));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-4 {
            return Err(Error::format(0, format!("weights must be non-negative and sum to 1, got sum {sum}")));
        }
        Self::normalized(weights)
    }

    /// Comma-separated weights in P1..P6 order.
    pub fn to_csv_row(&self) -> String {
        self.weights.iter().map(|w| format!("{w:.6}")).collect::<Vec<_>>().join(",")
    }
}

impl Index<PatternLabel> for PatternMix {
    type Output = f64;

    fn index(&self, label: PatternLabel) -> &f64 {
        &self.weights[label.index()]
    }
}

impl fmt::Display for PatternMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(l, w)| format!("{l}: {w:.4}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowLabel {
    pub start: usize,
    pub len: usize,
    pub label: PatternLabel,
    pub features: PatternFeatures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub windows: Vec<WindowLabel>,
    pub mix: PatternMix,
}

/// Classify non-overlapping windows of `window_len` records and weight each
/// label by the number of records it covers.
pub fn decompose_trace(t: &Trace, cfg: &ClassifierConfig, window_len: usize) -> Result<Decomposition> {
    cfg.validate()?;
    let windows = window_trace_with(t, window_len, window_len, cfg.min_window)?;
    let labelled: Vec<WindowLabel> = windows
        .par_iter()
        .map(|w| {
            let addrs: Vec<u64> = w.records().iter().map(|r| r.addr).collect();
            let features = features_of(&addrs, cfg);
            WindowLabel {
                start: w.start,
                len: w.len,
                label: classify_window(&features, cfg),
                features,
            }
        })
        .collect();

    let mut counts = [0usize; 6];
    for w in &labelled {
        counts[w.label.index()] += w.len;
    }
    let total: usize = counts.iter().sum();
    let mix = PatternMix::normalized(counts.map(|c| c as f64 / total as f64))?;
    Ok(Decomposition { windows: labelled, mix })
}

/// Unweighted mean of the hotspot mixes, renormalised.
pub fn aggregate_suite(mixes: &[PatternMix]) -> Result<PatternMix> {
    if mixes.is_empty() {
        return Err(Error::param("cannot aggregate an empty list of mixes"));
    }
    let mut sum = [0.0; 6];
    for m in mixes {
        for (acc, w) in sum.iter_mut().zip(m.weights()) {
            *acc += w;
        }
    }
    PatternMix::normalized(sum.map(|s| s / mixes.len() as f64))
}
