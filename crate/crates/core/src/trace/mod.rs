//! Trace data model shared by every analysis stage.
//!
//! A trace is a single ordered stream of memory accesses. Addresses are
//! logical byte addresses; no translation is modelled.

mod format;

pub use format::{read_binary, read_text, read_trace_file, write_binary, write_text, TraceFormat, BINARY_MAGIC};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest access a single record may describe.
pub const MAX_ACCESS_SIZE: u32 = 4096;

/// Minimum window length for pattern analysis.
pub const DEFAULT_MIN_WINDOW: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Read,
    Write,
}

impl Op {
    pub fn is_write(self) -> bool {
        self == Op::Write
    }

    pub fn as_char(self) -> char {
        match self {
            Op::Read => 'R',
            Op::Write => 'W',
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "r" => Ok(Op::Read),
            "W" | "w" => Ok(Op::Write),
            other => Err(Error::param(format!("unknown op {other:?} (expected R or W)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub seq: u64,
    pub addr: u64,
    pub op: Op,
    pub size: u32,
}

impl TraceRecord {
    pub fn new(seq: u64, addr: u64, op: Op, size: u32) -> Self {
        Self { seq, addr, op, size }
    }

    pub fn read(seq: u64, addr: u64, size: u32) -> Self {
        Self::new(seq, addr, Op::Read, size)
    }

    pub fn write(seq: u64, addr: u64, size: u32) -> Self {
        Self::new(seq, addr, Op::Write, size)
    }

    /// Last byte touched, or `None` when `addr + size` overflows.
    pub fn last_byte(&self) -> Option<u64> {
        (self.size as u64).checked_sub(1).and_then(|s| self.addr.checked_add(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Free-text provenance (generator description or file path).
    pub origin: String,
}

impl Trace {
    pub fn new(records: Vec<TraceRecord>, origin: impl Into<String>) -> Self {
        Self {
            records,
            origin: origin.into(),
        }
    }

    /// Build a trace from `(addr, op, size)` triples, numbering records from 0.
    pub fn from_accesses(accesses: impl IntoIterator<Item = (u64, Op, u32)>, origin: impl Into<String>) -> Self {
        let records = accesses
            .into_iter()
            .enumerate()
            .map(|(i, (addr, op, size))| TraceRecord::new(i as u64, addr, op, size))
            .collect();
        Self::new(records, origin)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn addrs(&self) -> impl Iterator<Item = u64> + '_ {
        self.records.iter().map(|r| r.addr)
    }

    /// Rewrite `seq` to 0..len.
    pub fn renumber(&mut self) {
        for (i, r) in self.records.iter_mut().enumerate() {
            r.seq = i as u64;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Record index, or `None` for trace-level violations.
    pub index: Option<usize>,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "record {i}: {}", self.reason),
            None => f.write_str(&self.reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Check every record invariant. Never fails; problems are listed in the
/// report.
pub fn validate_trace(t: &Trace) -> ValidationReport {
    let mut violations = Vec::new();
    if t.records.is_empty() {
        violations.push(Violation {
            index: None,
            reason: "empty trace".into(),
        });
    }
    let mut prev_seq: Option<u64> = None;
    for (i, r) in t.records.iter().enumerate() {
        match prev_seq {
            None if r.seq != 0 => violations.push(Violation {
                index: Some(i),
                reason: format!("seq {} but first record must have seq 0", r.seq),
            }),
            Some(p) if p.checked_add(1) != Some(r.seq) => violations.push(Violation {
                index: Some(i),
                reason: format!("seq {} does not follow {p}", r.seq),
            }),
            _ => {}
        }
        prev_seq = Some(r.seq);
        if r.size == 0 {
            violations.push(Violation {
                index: Some(i),
                reason: "size must be >= 1".into(),
            });
        } else if r.size > MAX_ACCESS_SIZE {
            violations.push(Violation {
                index: Some(i),
                reason: format!("size {} exceeds {MAX_ACCESS_SIZE}", r.size),
            });
        } else if r.last_byte().is_none() {
            violations.push(Violation {
                index: Some(i),
                reason: format!("addr {:#x} + size {} overflows the address space", r.addr, r.size),
            });
        }
    }
    ValidationReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// A contiguous run of records within a parent trace.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub start: usize,
    pub len: usize,
    pub parent: &'a Trace,
}

impl<'a> Window<'a> {
    pub fn records(&self) -> &'a [TraceRecord] {
        &self.parent.records[self.start..self.start + self.len]
    }

    /// Window over the whole trace.
    pub fn whole(parent: &'a Trace) -> Self {
        Self {
            start: 0,
            len: parent.len(),
            parent,
        }
    }
}

impl PartialEq for Window<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start && self.len == other.len && std::ptr::eq(self.parent, other.parent)
    }
}

/// Tile `t` into windows of `window_len` records starting every `stride`
/// records, using the default minimum window length.
pub fn window_trace(t: &Trace, window_len: usize, stride: usize) -> Result<Vec<Window<'_>>> {
    window_trace_with(t, window_len, stride, DEFAULT_MIN_WINDOW)
}

/// Tiling rules:
///
/// * full windows start at `0, stride, 2*stride, ...` while they fit;
/// * the remainder starting at the next stride position becomes a tail window
///   if it holds at least `min_window` records, otherwise it is merged into
///   the preceding window;
/// * a trace shorter than `window_len` yields a single whole-trace window.
pub fn window_trace_with(t: &Trace, window_len: usize, stride: usize, min_window: usize) -> Result<Vec<Window<'_>>> {
    if window_len < min_window {
        return Err(Error::param(format!("window_len {window_len} < min_window {min_window}")));
    }
    if stride == 0 {
        return Err(Error::param("window stride must be >= 1"));
    }
    let n = t.len();
    if n < min_window {
        return Err(Error::param(format!("trace has {n} records, fewer than min_window {min_window}")));
    }
    if n <= window_len {
        return Ok(vec![Window::whole(t)]);
    }
    let mut windows = Vec::with_capacity(n / stride + 1);
    let mut start = 0;
    while start + window_len <= n {
        windows.push(Window {
            start,
            len: window_len,
            parent: t,
        });
        start += stride;
    }
    if start < n {
        let tail = n - start;
        if tail >= min_window {
            windows.push(Window {
                start,
                len: tail,
                parent: t,
            });
        } else if let Some(last) = windows.last_mut() {
            last.len = n - last.start;
        }
    }
    Ok(windows)
}
