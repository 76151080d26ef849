//! Trace file formats.
//!
//! Text: one record per line, `seq,addr_hex,op,size`, e.g. `17,7f3a00,R,8`.
//! The address is hexadecimal without a `0x` prefix and `op` is `R` or `W`.
//!
//! Binary: the magic bytes `GPTR`, a version byte `0x01`, then one 11-byte
//! little-endian record per access: `addr: u64`, `flags: u8` (bit 0 set for
//! writes), `size: u16`. Sequence numbers are implicit in record order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{Op, Trace, TraceRecord};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"GPTR";
pub const BINARY_VERSION: u8 = 0x01;
const RECORD_BYTES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Text,
    Binary,
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(TraceFormat::Text),
            "binary" => Ok(TraceFormat::Binary),
            other => Err(Error::param(format!("unknown trace format {other:?}"))),
        }
    }
}

pub fn write_text<W: Write>(t: &Trace, mut out: W) -> Result<()> {
    for r in &t.records {
        writeln!(out, "{},{:x},{},{}", r.seq, r.addr, r.op, r.size)?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(input: R, origin: impl Into<String>) -> Result<Trace> {
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        records.push(parse_text_record(line).map_err(|msg| Error::format(idx + 1, msg))?);
    }
    Ok(Trace::new(records, origin))
}

fn parse_text_record(line: &str) -> std::result::Result<TraceRecord, String> {
    let mut fields = line.split(',');
    let mut next = |name: &str| fields.next().map(str::trim).ok_or_else(|| format!("missing {name} field"));
    let seq = next("seq")?;
    let addr = next("addr")?;
    let op = next("op")?;
    let size = next("size")?;
    if fields.next().is_some() {
        return Err("too many fields (expected seq,addr_hex,op,size)".into());
    }
    let seq = seq.parse::<u64>().map_err(|_| format!("bad seq {seq:?}"))?;
    if addr.starts_with("0x") || addr.starts_with("0X") {
        return Err(format!("address {addr:?} must not carry a 0x prefix"));
    }
    let addr = u64::from_str_radix(addr, 16).map_err(|_| format!("bad hex address {addr:?}"))?;
    let op = match op {
        "R" => Op::Read,
        "W" => Op::Write,
        _ => return Err(format!("bad op {op:?} (expected R or W)")),
    };
    let size = size.parse::<u32>().map_err(|_| format!("bad size {size:?}"))?;
    Ok(TraceRecord { seq, addr, op, size })
}

pub fn write_binary<W: Write>(t: &Trace, mut out: W) -> Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&[BINARY_VERSION])?;
    let mut buf = [0u8; RECORD_BYTES];
    for r in &t.records {
        let size = u16::try_from(r.size).map_err(|_| Error::param(format!("size {} does not fit the binary format", r.size)))?;
        buf[..8].copy_from_slice(&r.addr.to_le_bytes());
        buf[8] = u8::from(r.op.is_write());
        buf[9..].copy_from_slice(&size.to_le_bytes());
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R, origin: impl Into<String>) -> Result<Trace> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 5 || &bytes[..4] != BINARY_MAGIC {
        return Err(Error::format(0, "missing GPTR magic"));
    }
    if bytes[4] != BINARY_VERSION {
        return Err(Error::format(0, format!("unsupported binary version {:#04x}", bytes[4])));
    }
    let body = &bytes[5..];
    if body.len() % RECORD_BYTES != 0 {
        return Err(Error::format(
            body.len() / RECORD_BYTES,
            format!("truncated record ({} trailing bytes)", body.len() % RECORD_BYTES),
        ));
    }
    let records = body
        .chunks_exact(RECORD_BYTES)
        .enumerate()
        .map(|(i, c)| {
            let addr = u64::from_le_bytes(c[..8].try_into().unwrap());
            let op = if c[8] & 1 == 1 { Op::Write } else { Op::Read };
            let size = u16::from_le_bytes([c[9], c[10]]) as u32;
            TraceRecord::new(i as u64, addr, op, size)
        })
        .collect();
    Ok(Trace::new(records, origin))
}

/// Read a trace file, detecting the binary format by its magic bytes.
pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let mut file = BufReader::new(fs::File::open(path)?);
    let head = file.fill_buf()?;
    if head.starts_with(BINARY_MAGIC) {
        read_binary(file, origin)
    } else {
        read_text(file, origin)
    }
}
