use std::collections::{BTreeMap, HashMap};

use super::Associativity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Hit { was_prefetched: bool },
    Miss,
}

impl Outcome {
    pub fn is_hit(self) -> bool {
        matches!(self, Outcome::Hit { .. })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(super) struct Way {
    line: u64,
    stamp: u64,
    valid: bool,
    prefetched: bool,
}

/// One LRU cache level, addressed by line number. Misses allocate.
#[derive(Debug)]
pub(crate) enum Cache {
    SetAssoc {
        ways: usize,
        sets: u64,
        slots: Vec<Way>,
        clock: u64,
    },
    // Recency is tracked with a stamp-ordered map so lookups and evictions
    // stay logarithmic even for multi-megabyte capacities.
    Full {
        capacity: usize,
        resident: HashMap<u64, (u64, bool)>,
        by_stamp: BTreeMap<u64, u64>,
        clock: u64,
    },
}

impl Cache {
    pub fn new(lines: u64, assoc: Associativity) -> Self {
        match assoc {
            Associativity::Ways(w) => {
                let ways = w as usize;
                let sets = lines / w as u64;
                Cache::SetAssoc {
                    ways,
                    sets,
                    slots: vec![Way::default(); ways * sets as usize],
                    clock: 0,
                }
            }
            Associativity::Full => Cache::Full {
                capacity: lines as usize,
                resident: HashMap::with_capacity(lines.min(1 << 20) as usize),
                by_stamp: BTreeMap::new(),
                clock: 0,
            },
        }
    }

    /// Look up `line`; on a miss, install it (evicting the LRU line of the
    /// set). A demand hit clears the line's prefetched mark.
    pub fn access(&mut self, line: u64, prefetch: bool) -> Outcome {
        match self {
            Cache::SetAssoc { ways, sets, slots, clock } => {
                *clock += 1;
                let set = (line % *sets) as usize;
                let group = &mut slots[set * *ways..(set + 1) * *ways];
                if let Some(w) = group.iter_mut().find(|w| w.valid && w.line == line) {
                    w.stamp = *clock;
                    let was_prefetched = w.prefetched;
                    if !prefetch {
                        w.prefetched = false;
                    }
                    return Outcome::Hit { was_prefetched };
                }
                let victim = group
                    .iter_mut()
                    .min_by_key(|w| if w.valid { w.stamp } else { 0 })
                    .expect("associativity is at least one way");
                *victim = Way {
                    line,
                    stamp: *clock,
                    valid: true,
                    prefetched: prefetch,
                };
                Outcome::Miss
            }
            Cache::Full {
                capacity,
                resident,
                by_stamp,
                clock,
            } => {
                *clock += 1;
                if let Some((stamp, pf)) = resident.get_mut(&line) {
                    by_stamp.remove(stamp);
                    *stamp = *clock;
                    by_stamp.insert(*clock, line);
                    let was_prefetched = *pf;
                    if !prefetch {
                        *pf = false;
                    }
                    return Outcome::Hit { was_prefetched };
                }
                if resident.len() >= *capacity {
                    if let Some((_, victim)) = by_stamp.pop_first() {
                        resident.remove(&victim);
                    }
                }
                resident.insert(line, (*clock, prefetch));
                by_stamp.insert(*clock, line);
                Outcome::Miss
            }
        }
    }
}
