//! SVG output: access-pattern figures and PT-MAP plots.
//!
//! Output is deterministic: coordinates are printed with fixed precision and
//! nothing depends on hash order or the clock.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ptmap::PtMapPoint;
use crate::trace::Trace;

const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    /// Traces longer than this are uniformly downsampled.
    pub max_points: usize,
    /// Logarithmic axes for pattern figures. PT-MAP plots are always log-log.
    pub log_axes: bool,
    pub title: String,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width: 800,
            height: 500,
            max_points: 20_000,
            log_axes: false,
            title: String::new(),
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 200 || self.height < 150 {
            return Err(Error::param(format!("figure must be at least 200x150, got {}x{}", self.width, self.height)));
        }
        if self.max_points < 100 {
            return Err(Error::param(format!("max_points must be >= 100, got {}", self.max_points)));
        }
        Ok(())
    }

    fn plot_box(&self) -> (f64, f64, f64, f64) {
        (
            MARGIN_LEFT,
            MARGIN_TOP,
            self.width as f64 - MARGIN_LEFT - MARGIN_RIGHT,
            self.height as f64 - MARGIN_TOP - MARGIN_BOTTOM,
        )
    }
}

/// Indices kept when thinning `n` items to at most `max`; first and last are
/// always kept.
fn sample_indices(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    (0..max).map(|k| ((k as u128 * (n - 1) as u128) / (max - 1) as u128) as usize).collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Maps a data interval onto a pixel interval, optionally in log space.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    px0: f64,
    px1: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, log: bool, px0: f64, px1: f64) -> Self {
        let (mut lo, mut hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        if hi - lo <= 0.0 {
            lo -= 1.0;
            hi += 1.0;
        }
        Self { lo, hi, log, px0, px1 }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.px0 + (v - self.lo) / (self.hi - self.lo) * (self.px1 - self.px0)
    }
}

fn header(out: &mut String, spec: &RenderSpec) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = spec.width,
        h = spec.height
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, spec.width, spec.height);
    if !spec.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            spec.width as f64 / 2.0,
            escape(&spec.title)
        );
    }
}

fn frame(out: &mut String, spec: &RenderSpec, x_label: &str, y_label: &str) {
    let (x0, y0, w, h) = spec.plot_box();
    let _ = writeln!(out, r#"<rect class="frame" x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        x0 + w / 2.0,
        spec.height as f64 - 12.0,
        escape(x_label)
    );
    let (lx, ly) = (18.0, y0 + h / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(y_label)
    );
}

fn tick(out: &mut String, x: f64, y: f64, anchor: &str, label: &str) {
    let _ = writeln!(out, r#"<text class="tick" x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="10">{}</text>"#, escape(label));
}

/// Scatter plot of logical address against access sequence.
pub fn render_pattern_figure(t: &Trace, spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    if t.is_empty() {
        return Err(Error::param("cannot render an empty trace"));
    }
    let idx = sample_indices(t.len(), spec.max_points);
    let pts: Vec<(f64, f64)> = idx.iter().map(|&i| (t.records[i].seq as f64, t.records[i].addr as f64)).collect();
    let (x0, y0, w, h) = spec.plot_box();
    let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(f64, f64)) -> f64, log: bool| {
        pts.iter().map(sel).map(|v| if log { v.max(1.0) } else { v }).fold(init, f)
    };
    let log = spec.log_axes;
    let (xmin, xmax) = (fold(f64::min, f64::INFINITY, |p| p.0, log), fold(f64::max, f64::NEG_INFINITY, |p| p.0, log));
    let (ymin, ymax) = (fold(f64::min, f64::INFINITY, |p| p.1, log), fold(f64::max, f64::NEG_INFINITY, |p| p.1, log));
    let xa = Axis::new(xmin, xmax, log, x0, x0 + w);
    let ya = Axis::new(ymin, ymax, log, y0 + h, y0);

    let mut out = String::new();
    header(&mut out, spec);
    frame(&mut out, spec, "access sequence", "logical address");
    tick(&mut out, x0, y0 + h + 15.0, "start", &format!("{}", xmin as u64));
    tick(&mut out, x0 + w, y0 + h + 15.0, "end", &format!("{}", xmax as u64));
    tick(&mut out, x0 - 4.0, y0 + h, "end", &format!("{:#x}", ymin as u64));
    tick(&mut out, x0 - 4.0, y0 + 10.0, "end", &format!("{:#x}", ymax as u64));
    let _ = writeln!(out, r##"<g class="points" fill="#1f77b4">"##);
    for (x, y) in pts {
        let (x, y) = if log { (x.max(1.0), y.max(1.0)) } else { (x, y) };
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="1.2"/>"#, xa.map(x), ya.map(y));
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// Log-log PT-MAP plot: hotspots coloured by suite (floored points hollow),
/// suite centres as crosses and one dashed indifference curve per entry of
/// `curves` (`(suite, [(l3_apc, ral)])`).
pub fn render_ptmap(
    points: &[PtMapPoint],
    centers: &BTreeMap<String, PtMapPoint>,
    curves: &[(String, Vec<(f64, f64)>)],
    spec: &RenderSpec,
) -> Result<String> {
    spec.validate()?;
    if points.is_empty() {
        return Err(Error::param("PT-MAP needs at least one point"));
    }
    let all = points.iter().chain(centers.values());
    let mut bounds = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        if !(p.l3_apc > 0.0 && p.ral > 0.0) {
            return Err(Error::param(format!("point {} has non-positive coordinates", p.label)));
        }
        bounds.0 = bounds.0.min(p.l3_apc);
        bounds.1 = bounds.1.max(p.l3_apc);
        bounds.2 = bounds.2.min(p.ral);
        bounds.3 = bounds.3.max(p.ral);
    }
    // Pad by a quarter decade and snap outward to whole decades.
    let snap_lo = |v: f64| (v.log10() - 0.25).floor();
    let snap_hi = |v: f64| (v.log10() + 0.25).ceil();
    let (ax_lo, ax_hi, ay_lo, ay_hi) = (snap_lo(bounds.0), snap_hi(bounds.1), snap_lo(bounds.2), snap_hi(bounds.3));
    let (x0, y0, w, h) = spec.plot_box();
    let xa = Axis::new(10f64.powf(ax_lo), 10f64.powf(ax_hi), true, x0, x0 + w);
    let ya = Axis::new(10f64.powf(ay_lo), 10f64.powf(ay_hi), true, y0 + h, y0);

    let mut suites: Vec<&str> = points.iter().map(|p| p.suite.as_str()).chain(centers.keys().map(String::as_str)).collect();
    suites.sort_unstable();
    suites.dedup();
    let color = |suite: &str| PALETTE[suites.binary_search(&suite).unwrap_or(0) % PALETTE.len()];

    let mut out = String::new();
    header(&mut out, spec);
    let _ = writeln!(out, r#"<defs><clipPath id="plot"><rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}"/></clipPath></defs>"#);
    frame(&mut out, spec, "L3 APC (accesses per L3-active cycle)", "RaL (L1 hits per off-chip movement)");
    for e in ax_lo as i32..=ax_hi as i32 {
        tick(&mut out, xa.map(10f64.powi(e)), y0 + h + 15.0, "middle", &format!("1e{e}"));
    }
    for e in ay_lo as i32..=ay_hi as i32 {
        tick(&mut out, x0 - 4.0, ya.map(10f64.powi(e)) + 3.0, "end", &format!("1e{e}"));
    }

    let _ = writeln!(out, r#"<g class="curves" clip-path="url(#plot)" fill="none" stroke-width="1">"#);
    for (suite, pts) in curves {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(a, r)| *a > 0.0 && *r > 0.0 && r.is_finite())
            .map(|&(a, r)| format!("{:.2},{:.2}", xa.map(a), ya.map(r)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="curve" data-suite="{}" stroke="{}" stroke-dasharray="6 4" points="{}"/>"#,
            escape(suite),
            color(suite),
            coords.join(" ")
        );
    }
    out.push_str("</g>\n<g class=\"hotspots\">\n");
    for p in points {
        let (cx, cy, c) = (xa.map(p.l3_apc), ya.map(p.ral), color(&p.suite));
        let fill = if p.floored { "none" } else { c };
        let _ = writeln!(
            out,
            r#"<circle class="hotspot" cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="{fill}" stroke="{c}"><title>{}</title></circle>"#,
            escape(&format!("{} ({})", p.label, p.suite))
        );
    }
    out.push_str("</g>\n<g class=\"centers\" stroke-width=\"2\">\n");
    for (suite, p) in centers {
        let (cx, cy) = (xa.map(p.l3_apc), ya.map(p.ral));
        let _ = writeln!(
            out,
            r#"<path class="center" data-suite="{}" stroke="{}" d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}"/>"#,
            escape(suite),
            color(suite),
            cx - 6.0,
            cy - 6.0,
            cx + 6.0,
            cy + 6.0,
            cx - 6.0,
            cy + 6.0,
            cx + 6.0,
            cy - 6.0
        );
    }
    out.push_str("</g>\n<g class=\"legend\">\n");
    for (i, suite) in suites.iter().enumerate() {
        let y = y0 + 12.0 + 16.0 * i as f64;
        let x = x0 + w - 130.0;
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{:.2}" r="4" fill="{}"/>"#, y - 4.0, color(suite));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 10.0, escape(suite));
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
