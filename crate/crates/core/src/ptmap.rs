//! Periodic table of memory access patterns.
//!
//! Hotspots are points on the (L3 APC, RaL) plane. Their energy level is the
//! Cobb-Douglas index `log10(ral) + beta * log10(l3_apc)`; indifference
//! curves are the level sets of that index, so on a log-log plot they are
//! straight lines of slope `-beta`. Optimisation that raises a hotspot's
//! level moves it toward the upper right.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::config::KvConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtMapConfig {
    /// Weight of L3 APC relative to RaL in the energy level.
    pub beta: f64,
    /// Non-positive coordinates are raised to this floor.
    pub epsilon: f64,
}

impl Default for PtMapConfig {
    fn default() -> Self {
        Self { beta: 1.0, epsilon: 1e-6 }
    }
}

impl PtMapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Defaults overridden by the `beta` and `epsilon` keys.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let mut cfg = Self::default();
        kv.apply("beta", &mut cfg.beta)?;
        kv.apply("epsilon", &mut cfg.epsilon)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtMapPoint {
    pub label: String,
    pub suite: String,
    pub l3_apc: f64,
    pub ral: f64,
    /// Set when a coordinate was floored to epsilon.
    pub floored: bool,
}

impl PtMapPoint {
    /// Build a point, flooring zero or negative coordinates to `epsilon`.
    pub fn new(label: impl Into<String>, suite: impl Into<String>, l3_apc: f64, ral: f64, epsilon: f64) -> Result<Self> {
        let label = label.into();
        if !(l3_apc.is_finite() && ral.is_finite()) {
            return Err(Error::param(format!("point {label}: coordinates must be finite")));
        }
        let floored = l3_apc <= 0.0 || ral <= 0.0;
        Ok(Self {
            label,
            suite: suite.into(),
            l3_apc: if l3_apc <= 0.0 { epsilon } else { l3_apc },
            ral: if ral <= 0.0 { epsilon } else { ral },
            floored,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EnergyLevel {
    pub value: f64,
}

pub fn energy_level(p: &PtMapPoint, cfg: &PtMapConfig) -> Result<EnergyLevel> {
    level_of(p.l3_apc, p.ral, cfg)
}

fn level_of(l3_apc: f64, ral: f64, cfg: &PtMapConfig) -> Result<EnergyLevel> {
    if !(l3_apc > 0.0 && ral > 0.0) {
        return Err(Error::param(format!("energy level needs positive coordinates, got apc={l3_apc} ral={ral}")));
    }
    let value = ral.log10() + cfg.beta * l3_apc.log10();
    if !value.is_finite() {
        return Err(Error::param("energy level is not finite"));
    }
    Ok(EnergyLevel { value })
}

/// Geometric centre of each suite (mean of the log coordinates). Floored
/// points are left out unless a suite has nothing else, in which case the
/// centre is built from them and marked floored.
pub fn suite_centers(points: &[PtMapPoint]) -> Result<BTreeMap<String, PtMapPoint>> {
    let mut groups: BTreeMap<&str, Vec<&PtMapPoint>> = BTreeMap::new();
    for p in points {
        groups.entry(p.suite.as_str()).or_default().push(p);
    }
    groups
        .into_iter()
        .map(|(suite, all)| {
            let usable: Vec<&PtMapPoint> = all.iter().copied().filter(|p| !p.floored).collect();
            let floored = usable.is_empty();
            let members = if floored { all } else { usable };
            let n = members.len() as f64;
            let log_ral = members.iter().map(|p| p.ral.log10()).sum::<f64>() / n;
            let log_apc = members.iter().map(|p| p.l3_apc.log10()).sum::<f64>() / n;
            let centre = PtMapPoint {
                label: format!("{suite}-center"),
                suite: suite.to_string(),
                l3_apc: 10f64.powf(log_apc),
                ral: 10f64.powf(log_ral),
                floored,
            };
            Ok((suite.to_string(), centre))
        })
        .collect()
}

/// Suite ids by ascending centre energy; equal energies keep name order.
pub fn order_suites(centers: &BTreeMap<String, PtMapPoint>, cfg: &PtMapConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let mut levels = centers
        .iter()
        .map(|(suite, c)| Ok((suite.clone(), energy_level(c, cfg)?.value)))
        .collect::<Result<Vec<_>>>()?;
    // BTreeMap iteration is already name-ordered and the sort is stable.
    levels.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(levels.into_iter().map(|(s, _)| s).collect())
}

/// `n` points of the curve at `level`, with L3 APC log-spaced over
/// `[lo, hi]`. Returns `(l3_apc, ral)` pairs.
pub fn indifference_curve_points(level: EnergyLevel, apc_range: (f64, f64), n: usize, cfg: &PtMapConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let (lo, hi) = apc_range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::param(format!("invalid APC range ({lo}, {hi})")));
    }
    if n < 2 {
        return Err(Error::param("a curve needs at least two points"));
    }
    let (llo, lhi) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|i| {
            let apc = match i {
                0 => lo,
                i if i == n - 1 => hi,
                i => 10f64.powf(llo + (lhi - llo) * i as f64 / (n - 1) as f64),
            };
            (apc, 10f64.powf(level.value - cfg.beta * apc.log10()))
        })
        .collect())
}

/// One indifference curve through each unfloored suite centre, spanning a
/// decade beyond the centres' APC range on each side.
pub fn center_curves(centers: &BTreeMap<String, PtMapPoint>, n: usize, cfg: &PtMapConfig) -> Result<Vec<(String, Vec<(f64, f64)>)>> {
    let usable = || centers.iter().filter(|(_, c)| !c.floored);
    let lo = usable().map(|(_, c)| c.l3_apc).fold(f64::INFINITY, f64::min);
    let hi = usable().map(|(_, c)| c.l3_apc).fold(0.0, f64::max);
    if !lo.is_finite() {
        return Ok(Vec::new());
    }
    usable()
        .map(|(suite, c)| Ok((suite.clone(), indifference_curve_points(energy_level(c, cfg)?, (lo / 10.0, hi * 10.0), n, cfg)?)))
        .collect()
}

/// Parse `label,suite,l3_apc,ral` rows (an optional header line starting
/// with `label` is skipped).
pub fn read_points_csv<R: BufRead>(input: R, cfg: &PtMapConfig) -> Result<Vec<PtMapPoint>> {
    let mut points = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with("label")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(Error::format(idx + 1, "expected label,suite,l3_apc,ral"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::format(idx + 1, format!("bad number {s:?}")));
        let point = PtMapPoint::new(f[0], f[1], num(f[2])?, num(f[3])?, cfg.epsilon)
            .map_err(|e| Error::format(idx + 1, e.to_string()))?;
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::format(0, "no points"));
    }
    Ok(points)
}

pub fn points_to_csv(points: &[PtMapPoint]) -> String {
    let mut out = String::from("label,suite,l3_apc,ral\n");
    for p in points {
        let _ = writeln!(out, "{},{},{:.6e},{:.6e}", p.label, p.suite, p.l3_apc, p.ral);
    }
    out
}

pub fn centers_to_csv(centers: &BTreeMap<String, PtMapPoint>, cfg: &PtMapConfig) -> Result<String> {
    let mut out = String::from("suite,l3_apc,ral,energy\n");
    for (suite, c) in centers {
        let _ = writeln!(out, "{suite},{:.6e},{:.6e},{:.6}", c.l3_apc, c.ral, energy_level(c, cfg)?.value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::SplitMix64;

    fn pt(suite: &str, apc: f64, ral: f64) -> PtMapPoint {
        PtMapPoint::new(format!("{suite}-{apc}-{ral}"), suite, apc, ral, 1e-6).unwrap()
    }

    fn level(apc: f64, ral: f64, beta: f64) -> f64 {
        energy_level(&pt("s", apc, ral), &PtMapConfig { beta, epsilon: 1e-6 }).unwrap().value
    }

    #[test]
    fn energy_examples() {
        assert_eq!(level(1.0, 1.0, 1.0), 0.0);
        assert!(level(1.0, 10.0, 1.0) > level(1.0, 1.0, 1.0));
        assert!(level(0.01, 100.0, 1.0).abs() < 1e-12);
    }

    #[test]
    fn flooring() {
        let p = PtMapPoint::new("x", "s", 0.0, 5.0, 1e-6).unwrap();
        assert!(p.floored);
        assert_eq!(p.l3_apc, 1e-6);
        assert!(PtMapPoint::new("x", "s", f64::NAN, 5.0, 1e-6).is_err());
        let raw = PtMapPoint {
            l3_apc: 0.0,
            ..p
        };
        assert!(energy_level(&raw, &PtMapConfig::default()).is_err());
    }

    #[test]
    fn centers_are_geometric_means() {
        let c = suite_centers(&[pt("a", 1.0, 10.0), pt("a", 1.0, 1000.0)]).unwrap();
        assert!((c["a"].ral - 100.0).abs() < 1e-9);
        let single = suite_centers(&[pt("b", 0.3, 7.0)]).unwrap();
        assert!((single["b"].ral - 7.0).abs() < 1e-12);
        assert!((single["b"].l3_apc - 0.3).abs() < 1e-12);
    }

    #[test]
    fn centers_match_log_mean_oracle() {
        let mut rng = SplitMix64::new(3);
        let pts: Vec<PtMapPoint> = (0..3)
            .map(|_| pt("s", 10f64.powf(rng.next_f64() * 4.0 - 3.0), 10f64.powf(rng.next_f64() * 6.0)))
            .collect();
        let c = &suite_centers(&pts).unwrap()["s"];
        let prod_ral: f64 = pts.iter().map(|p| p.ral).product();
        let prod_apc: f64 = pts.iter().map(|p| p.l3_apc).product();
        assert!((c.ral / prod_ral.cbrt() - 1.0).abs() < 1e-9);
        assert!((c.l3_apc / prod_apc.cbrt() - 1.0).abs() < 1e-9);
        let cfg = PtMapConfig::default();
        let e: Vec<f64> = pts.iter().map(|p| energy_level(p, &cfg).unwrap().value).collect();
        let ec = energy_level(c, &cfg).unwrap().value;
        assert!(ec >= e.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12);
        assert!(ec <= e.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12);
    }

    #[test]
    fn floored_points_are_excluded_from_centers() {
        let pts = [pt("a", 1.0, 10.0), PtMapPoint::new("z", "a", 0.0, 0.0, 1e-6).unwrap()];
        assert!((suite_centers(&pts).unwrap()["a"].ral - 10.0).abs() < 1e-12);
        let only = [PtMapPoint::new("z", "b", 0.0, 100.0, 1e-6).unwrap(), PtMapPoint::new("y", "b", 1e-4, 0.0, 1e-6).unwrap()];
        let c = &suite_centers(&only).unwrap()["b"];
        assert!(c.floored);
        assert!((c.ral - 0.01).abs() < 1e-12 && (c.l3_apc - 1e-5).abs() < 1e-15);
        assert!(suite_centers(&[]).unwrap().is_empty());
    }

    #[test]
    fn ordering_and_ties() {
        let cfg = PtMapConfig::default();
        let mut centers = BTreeMap::new();
        centers.insert("zz".to_string(), pt("zz", 1.0, 10.0));
        centers.insert("aa".to_string(), pt("aa", 10.0, 1.0));
        centers.insert("mid".to_string(), pt("mid", 1.0, 1.0));
        assert_eq!(order_suites(&centers, &cfg).unwrap(), vec!["mid", "aa", "zz"]);
        let mut one = BTreeMap::new();
        one.insert("only".to_string(), pt("only", 2.0, 3.0));
        assert_eq!(order_suites(&one, &cfg).unwrap(), vec!["only"]);
    }

    #[test]
    fn curve_examples() {
        let cfg = PtMapConfig::default();
        let pts = indifference_curve_points(EnergyLevel { value: 0.0 }, (0.1, 10.0), 3, &cfg).unwrap();
        for ((apc, ral), (ea, er)) in pts.iter().zip([(0.1, 10.0), (1.0, 1.0), (10.0, 0.1)]) {
            assert!((apc / ea - 1.0).abs() < 1e-12 && (ral / er - 1.0).abs() < 1e-12, "{apc} {ral}");
        }
        let ends = indifference_curve_points(EnergyLevel { value: 1.0 }, (0.5, 2.0), 2, &cfg).unwrap();
        assert_eq!(ends.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0.5, 2.0]);
        assert!(indifference_curve_points(EnergyLevel { value: 0.0 }, (1.0, 1.0), 4, &cfg).is_err());
        assert!(indifference_curve_points(EnergyLevel { value: 0.0 }, (0.0, 1.0), 4, &cfg).is_err());
        assert!(indifference_curve_points(EnergyLevel { value: 0.0 }, (0.1, 1.0), 1, &cfg).is_err());
    }

    #[test]
    fn curve_points_lie_on_their_level() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let cfg = PtMapConfig {
                beta: 0.25 + rng.next_f64() * 2.0,
                epsilon: 1e-6,
            };
            let lvl = EnergyLevel {
                value: rng.next_f64() * 8.0 - 4.0,
            };
            for (apc, ral) in indifference_curve_points(lvl, (1e-3, 1e1), 64, &cfg).unwrap() {
                let back = energy_level(&pt("s", apc, ral), &cfg).unwrap().value;
                assert!((back - lvl.value).abs() <= 1e-9, "{back} vs {}", lvl.value);
            }
        }
    }

    #[test]
    fn points_csv() {
        let text = "label,suite,l3_apc,ral\nh1,HPCC,0.01,1.98\nh2,BigDataBench,0.2,506081\n";
        let pts = read_points_csv(text.as_bytes(), &PtMapConfig::default()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].suite, "BigDataBench");
        assert!(matches!(
            read_points_csv("h1,HPCC,x,1\n".as_bytes(), &PtMapConfig::default()),
            Err(Error::Format { line: 1, .. })
        ));
    }
}
