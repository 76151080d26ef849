use super::{ClassifierConfig, PatternFeatures, Periodicity};
use crate::error::{Error, Result};
use crate::trace::Window;

/// Reduce a window to its pattern-figure features.
///
/// The trend stride is the median of the non-zero address deltas; its sign
/// gives the trend direction. A reset is any step against that direction
/// larger than `reset_factor` strides, and resets cut the window into
/// segments. Segments strictly between two resets are complete periods.
///
/// The slope is a Theil–Sen estimate pooled over point pairs taken inside
/// segments (so sawtooth drops never enter it), and linearity is the
/// access-weighted R² of per-segment least-squares lines.
pub fn extract_features(w: &Window<'_>, cfg: &ClassifierConfig) -> Result<PatternFeatures> {
    if w.len < cfg.min_window {
        return Err(Error::param(format!(
            "window of {} records is shorter than min_window {}",
            w.len, cfg.min_window
        )));
    }
    let addrs: Vec<u64> = w.records().iter().map(|r| r.addr).collect();
    Ok(features_of(&addrs, cfg))
}

pub(crate) fn features_of(addrs: &[u64], cfg: &ClassifierConfig) -> PatternFeatures {
    let deltas: Vec<i128> = addrs.windows(2).map(|p| p[1] as i128 - p[0] as i128).collect();
    let mut nonzero: Vec<i128> = deltas.iter().copied().filter(|&d| d != 0).collect();
    if nonzero.is_empty() {
        return PatternFeatures {
            slope_k: 0.0,
            linearity_r2: 1.0,
            periodic: Periodicity::Aperiodic,
            period_mean: None,
            period_cv: None,
            reset_count: 0,
            periods: Vec::new(),
        };
    }
    let mid = (nonzero.len() - 1) / 2;
    let stride = *nonzero.select_nth_unstable(mid).1;
    let dir = stride.signum();
    let threshold = cfg.reset_factor * stride.unsigned_abs() as f64;

    // Segment boundaries: a reset between i and i+1 starts a segment at i+1.
    let mut bounds = vec![0usize];
    bounds.extend(
        deltas
            .iter()
            .enumerate()
            .filter(|(_, &d)| d.signum() == -dir && d.unsigned_abs() as f64 > threshold)
            .map(|(i, _)| i + 1),
    );
    bounds.push(addrs.len());
    let reset_count = bounds.len() - 2;
    let segments: Vec<&[u64]> = bounds.windows(2).map(|b| &addrs[b[0]..b[1]]).collect();

    let periods: Vec<usize> = if reset_count >= 2 {
        segments[1..segments.len() - 1].iter().map(|s| s.len()).collect()
    } else {
        Vec::new()
    };
    let (period_mean, period_cv) = period_stats(&periods);
    let periodic = match period_cv {
        None => Periodicity::Aperiodic,
        Some(cv) if cv > cfg.cv_fixed || drifts(&periods, cfg.drift_min_periods) => Periodicity::Variable,
        Some(_) => Periodicity::Fixed,
    };

    let slope_k = theil_sen(&segments, cfg.max_pairs).unwrap_or(stride as f64);
    let linearity_r2 = weighted_r2(&segments);

    PatternFeatures {
        slope_k,
        linearity_r2,
        periodic,
        period_mean,
        period_cv,
        reset_count,
        periods,
    }
}

fn period_stats(periods: &[usize]) -> (Option<f64>, Option<f64>) {
    if periods.is_empty() {
        return (None, None);
    }
    let n = periods.len() as f64;
    let mean = periods.iter().sum::<usize>() as f64 / n;
    let var = periods.iter().map(|&p| (p as f64 - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt() / mean))
}

// Strictly monotone period lengths: the period is growing or shrinking
// step by step even if the relative spread inside the window is small.
fn drifts(periods: &[usize], min_periods: usize) -> bool {
    if periods.len() < min_periods {
        return false;
    }
    let up = periods.windows(2).all(|p| p[1] > p[0]);
    let down = periods.windows(2).all(|p| p[1] < p[0]);
    up || down
}

/// Median pairwise slope over pairs `(i, i + g)` inside each segment for
/// gaps `g = 1, 2, 4, ...`, evenly thinned to at most `max_pairs` pairs.
fn theil_sen(segments: &[&[u64]], max_pairs: usize) -> Option<f64> {
    let gaps_of = |len: usize| std::iter::successors(Some(1usize), |g| g.checked_mul(2)).take_while(move |&g| g < len);
    let total: usize = segments
        .iter()
        .map(|s| gaps_of(s.len()).map(|g| s.len() - g).sum::<usize>())
        .sum();
    if total == 0 {
        return None;
    }
    let step = total.div_ceil(max_pairs);
    let mut slopes = Vec::with_capacity(total / step + 1);
    let mut counter = 0usize;
    for seg in segments {
        for g in gaps_of(seg.len()) {
            for i in 0..seg.len() - g {
                if counter % step == 0 {
                    let rise = seg[i + g] as i128 - seg[i] as i128;
                    slopes.push(rise as f64 / g as f64);
                }
                counter += 1;
            }
        }
    }
    let mid = (slopes.len() - 1) / 2;
    let (_, m, _) = slopes.select_nth_unstable_by(mid, f64::total_cmp);
    Some(*m)
}

fn weighted_r2(segments: &[&[u64]]) -> f64 {
    let mut weighted = 0.0;
    let mut total = 0usize;
    for seg in segments {
        weighted += line_r2(seg) * seg.len() as f64;
        total += seg.len();
    }
    (weighted / total as f64).clamp(0.0, 1.0)
}

/// R² of the least-squares line through `(i, seg[i])`. Segments too short
/// to fit, or with zero address variance, are perfect lines.
pub(crate) fn line_r2(seg: &[u64]) -> f64 {
    let n = seg.len();
    if n < 3 {
        return 1.0;
    }
    let base = seg[0] as i128;
    let ys: Vec<f64> = seg.iter().map(|&a| (a as i128 - base) as f64).collect();
    let nf = n as f64;
    let mx = (nf - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return 1.0;
    }
    (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{Op, Trace};

    fn trace_of(addrs: impl IntoIterator<Item = u64>) -> Trace {
        Trace::from_accesses(addrs.into_iter().map(|a| (a, Op::Read, 8)), "t")
    }

    fn feats(addrs: impl IntoIterator<Item = u64>) -> PatternFeatures {
        let t = trace_of(addrs);
        extract_features(&Window::whole(&t), &ClassifierConfig::default()).unwrap()
    }

    #[test]
    fn straight_line() {
        let f = feats((0..1000).map(|i| 0x1000 + i * 128));
        assert_eq!(f.slope_k, 128.0);
        assert_eq!(f.periodic, Periodicity::Aperiodic);
        assert!(f.linearity_r2 > 0.999);
        assert_eq!(f.reset_count, 0);
    }

    #[test]
    fn constant_address() {
        let f = feats(std::iter::repeat(0xdead00).take(200));
        assert_eq!(f.slope_k, 0.0);
        assert_eq!(f.periodic, Periodicity::Aperiodic);
        assert_eq!(f.linearity_r2, 1.0);
    }

    #[test]
    fn triangular_sweep_is_variable() {
        let addrs: Vec<u64> = (1..=100u64).flat_map(|i| (0..i).map(|j| j * 128)).collect();
        let f = feats(addrs);
        assert_eq!(f.periodic, Periodicity::Variable);
        assert_eq!(f.slope_k, 128.0);
        assert!(f.period_cv.unwrap() > 0.10);
        // periods shorter than six accesses drop by less than 4 strides and
        // are not detected; every longer period is, as one complete period
        // each except the last sweep.
        assert_eq!(f.periods, (7..=99).collect::<Vec<usize>>());
    }

    #[test]
    fn fixed_sawtooth() {
        let f = feats((0..50).flat_map(|_| (0..40u64).map(|j| 0x10000 + j * 8)));
        assert_eq!(f.periodic, Periodicity::Fixed);
        assert_eq!(f.period_mean, Some(40.0));
        assert_eq!(f.period_cv, Some(0.0));
        assert_eq!(f.reset_count, 49);
        assert_eq!(f.slope_k, 8.0);
    }

    #[test]
    fn slow_drift_counts_as_variable() {
        // periods 400, 401, ... have tiny CV but grow monotonically
        let addrs: Vec<u64> = (400..410u64).flat_map(|p| (0..p).map(|j| j * 100)).collect();
        let f = feats(addrs);
        assert!(f.period_cv.unwrap() < 0.01);
        assert_eq!(f.periodic, Periodicity::Variable);
    }

    #[test]
    fn descending_line() {
        let f = feats((0..500u64).map(|i| 1_000_000 - i * 256));
        assert_eq!(f.slope_k, -256.0);
        assert_eq!(f.periodic, Periodicity::Aperiodic);
    }

    #[test]
    fn short_window_rejected() {
        let t = trace_of(0..10);
        assert!(extract_features(&Window::whole(&t), &ClassifierConfig::default()).is_err());
    }

    #[test]
    fn pair_budget_is_respected() {
        let cfg = ClassifierConfig {
            max_pairs: 100,
            ..Default::default()
        };
        let addrs: Vec<u64> = (0..5000).map(|i| i * 64).collect();
        let f = features_of(&addrs, &cfg);
        assert_eq!(f.slope_k, 64.0);
    }

    #[test]
    fn r2_of_noisy_points() {
        assert_eq!(line_r2(&[0, 10, 20, 30]), 1.0);
        let r2 = line_r2(&[0, 1000, 0, 1000, 0, 1000]);
        assert!(r2 < 0.2, "{r2}");
    }
}
