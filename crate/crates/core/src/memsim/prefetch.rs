/// L2 stream prefetcher.
///
/// Trains on L2 demand misses and on the first demand hit to a prefetched
/// line (the stream continuing into lines it fetched itself). When two
/// successive training events are at most `trigger_bytes` apart and keep
/// the previous direction, the next `degree` lines beyond the current one
/// in that direction are requested.
#[derive(Debug, Clone)]
pub(crate) struct StreamPrefetcher {
    degree: u32,
    trigger_lines: u64,
    last_line: Option<u64>,
    last_dir: Option<bool>,
}

impl StreamPrefetcher {
    pub fn new(degree: u32, trigger_bytes: u64, line_size: u64) -> Self {
        Self {
            degree,
            trigger_lines: trigger_bytes / line_size,
            last_line: None,
            last_dir: None,
        }
    }

    /// Record a training event and return the lines to prefetch.
    pub fn train(&mut self, line: u64) -> impl Iterator<Item = u64> {
        let mut fire: Option<bool> = None;
        if let Some(prev) = self.last_line {
            if line != prev {
                let up = line > prev;
                if line.abs_diff(prev) <= self.trigger_lines {
                    if self.last_dir.is_none_or(|d| d == up) {
                        fire = Some(up);
                    }
                    self.last_dir = Some(up);
                } else {
                    self.last_dir = None;
                }
            }
        }
        self.last_line = Some(line);
        let degree = if fire.is_some() { self.degree as u64 } else { 0 };
        (1..=degree).filter_map(move |k| match fire {
            Some(true) => line.checked_add(k),
            Some(false) => line.checked_sub(k),
            None => None,
        })
    }
}
