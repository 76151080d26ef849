//! Hotspot selection from program profiles.
//!
//! The importance of a code segment that runs for `t` seconds on `n` threads,
//! in a program with `t_s` sequential and `t_p` parallel seconds, is
//! `t * n / (t_s + n * t_p)`. Segments whose importance is strictly greater
//! than `threshold_pct` percent are hotspots.
//!
//! Profile file format:
//!
//! ```text
//! TS=<sec> TP=<sec> DELTA=<pct>
//! segment_id,t_seconds,n[,source_loc]
//! ```
//!
//! `t` is the segment's wall-clock time.

use std::cmp::Ordering;
use std::io::BufRead;

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD_PCT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRecord {
    pub segment_id: String,
    pub t: f64,
    pub n: u32,
    pub source_loc: String,
}

impl ProfileRecord {
    pub fn new(segment_id: impl Into<String>, t: f64, n: u32) -> Self {
        Self {
            segment_id: segment_id.into(),
            t,
            n,
            source_loc: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramProfile {
    pub records: Vec<ProfileRecord>,
    pub t_s: f64,
    pub t_p: f64,
    pub threshold_pct: f64,
}

impl ProgramProfile {
    pub fn new(records: Vec<ProfileRecord>, t_s: f64, t_p: f64) -> Self {
        Self {
            records,
            t_s,
            t_p,
            threshold_pct: DEFAULT_THRESHOLD_PCT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_s >= 0.0 && self.t_p >= 0.0 && self.t_s + self.t_p > 0.0) {
            return Err(Error::param(format!(
                "need t_s >= 0, t_p >= 0 and t_s + t_p > 0 (t_s={}, t_p={})",
                self.t_s, self.t_p
            )));
        }
        if !self.threshold_pct.is_finite() {
            return Err(Error::param("threshold must be finite"));
        }
        for r in &self.records {
            if !(r.t >= 0.0 && r.t.is_finite()) || r.n == 0 {
                return Err(Error::param(format!("segment {}: need t >= 0 and n >= 1", r.segment_id)));
            }
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(input: R) -> Result<Self> {
        let mut header: Option<(f64, f64, f64)> = None;
        let mut records = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if header.is_none() {
                header = Some(parse_header(line).map_err(|m| Error::format(lineno, m))?);
                continue;
            }
            records.push(parse_record(line).map_err(|m| Error::format(lineno, m))?);
        }
        let (t_s, t_p, delta) = header.ok_or_else(|| Error::format(0, "missing TS=.. TP=.. DELTA=.. header"))?;
        let profile = ProgramProfile {
            records,
            t_s,
            t_p,
            threshold_pct: delta,
        };
        profile.validate()?;
        Ok(profile)
    }
}

fn parse_header(line: &str) -> std::result::Result<(f64, f64, f64), String> {
    let (mut ts, mut tp, mut delta) = (None, None, DEFAULT_THRESHOLD_PCT);
    for tok in line.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("bad header token {tok:?}"))?;
        let v: f64 = v.parse().map_err(|_| format!("bad number in {tok:?}"))?;
        match k {
            "TS" => ts = Some(v),
            "TP" => tp = Some(v),
            "DELTA" => delta = v,
            _ => return Err(format!("unknown header key {k:?}")),
        }
    }
    Ok((ts.ok_or("header lacks TS")?, tp.ok_or("header lacks TP")?, delta))
}

fn parse_record(line: &str) -> std::result::Result<ProfileRecord, String> {
    let fields: Vec<&str> = line.splitn(4, ',').map(str::trim).collect();
    if fields.len() < 3 {
        return Err("expected segment_id,t_seconds,n".into());
    }
    Ok(ProfileRecord {
        segment_id: fields[0].to_string(),
        t: fields[1].parse().map_err(|_| format!("bad time {:?}", fields[1]))?,
        n: fields[2].parse().map_err(|_| format!("bad thread count {:?}", fields[2]))?,
        source_loc: fields.get(3).unwrap_or(&"").to_string(),
    })
}

pub fn importance(r: &ProfileRecord, p: &ProgramProfile) -> Result<f64> {
    let n = r.n as f64;
    let denom = p.t_s + n * p.t_p;
    if denom == 0.0 {
        return Err(Error::param(format!("t_s + n*t_p is zero for segment {}", r.segment_id)));
    }
    Ok(r.t * n / denom)
}

/// Hotspots with importance strictly above the threshold, most important
/// first; equal importances are ordered by segment id.
pub fn select_hotspots(p: &ProgramProfile) -> Result<Vec<(String, f64)>> {
    p.validate()?;
    let cutoff = p.threshold_pct / 100.0;
    let mut out = Vec::new();
    for r in &p.records {
        let imp = importance(r, p)?;
        if imp > cutoff {
            out.push((r.segment_id.clone(), imp));
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}
