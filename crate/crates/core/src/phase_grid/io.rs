//! Snapshot files.
//!
//! The binary format is a 64-byte ASCII header line
//! `WIG1 n_q n_p q_min q_max p_min p_max hbar time`, space-padded and terminated by
//! `\n` in byte 63, followed by `n_q*n_p` little-endian `f64` values, `q` outer.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::{PhaseField, PhaseGrid};
use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 64;
pub const MAGIC: &str = "WIG1";

pub fn encode_snapshot(field: &PhaseField) -> Result<Vec<u8>> {
    let g = field.grid();
    let (q, p) = (g.q_axis(), g.p_axis());
    let text = format!("{MAGIC} {} {} {:?} {:?} {:?} {:?} {:?} {:?}", q.n, p.n, q.min, q.max, p.min, p.max, g.hbar(), field.time());
    if text.len() > HEADER_LEN - 1 {
        return Err(Error::InvalidArgument(format!("snapshot header needs {} bytes, only {} available", text.len() + 1, HEADER_LEN)));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * q.n * p.n);
    out.extend_from_slice(text.as_bytes());
    out.resize(HEADER_LEN - 1, b' ');
    out.push(b'\n');
    for v in field.values().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<PhaseField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedSnapshot { offset: bytes.len(), reason: format!("file ends inside the {HEADER_LEN}-byte header") });
    }
    let header = &bytes[..HEADER_LEN];
    if header[HEADER_LEN - 1] != b'\n' {
        return Err(Error::MalformedSnapshot { offset: HEADER_LEN - 1, reason: "header is not terminated by a newline".into() });
    }
    let text = std::str::from_utf8(&header[..HEADER_LEN - 1])
        .map_err(|e| Error::MalformedSnapshot { offset: e.valid_up_to(), reason: "header is not ASCII".into() })?;
    let mut tokens = Vec::new();
    let mut offset = 0;
    for tok in text.split(' ') {
        if !tok.is_empty() {
            tokens.push((offset, tok));
        }
        offset += tok.len() + 1;
    }
    if tokens.first().map(|t| t.1) != Some(MAGIC) {
        return Err(Error::MalformedSnapshot { offset: 0, reason: format!("missing {MAGIC} magic") });
    }
    if tokens.len() != 9 {
        return Err(Error::MalformedSnapshot { offset: 0, reason: format!("header has {} fields, expected 9", tokens.len()) });
    }
    let int = |k: usize| -> Result<usize> {
        let (off, t) = tokens[k];
        t.parse().map_err(|_| Error::MalformedSnapshot { offset: off, reason: format!("bad integer {t:?}") })
    };
    let real = |k: usize| -> Result<f64> {
        let (off, t) = tokens[k];
        t.parse().map_err(|_| Error::MalformedSnapshot { offset: off, reason: format!("bad number {t:?}") })
    };
    let (n_q, n_p) = (int(1)?, int(2)?);
    let grid = PhaseGrid::new(n_q, n_p, (real(3)?, real(4)?), (real(5)?, real(6)?), real(7)?)
        .map_err(|e| Error::MalformedSnapshot { offset: 0, reason: e.to_string() })?;
    let time = real(8)?;
    let body = &bytes[HEADER_LEN..];
    let needed = 8 * n_q * n_p;
    if body.len() < needed {
        let complete = body.len() / 8;
        return Err(Error::MalformedSnapshot {
            offset: HEADER_LEN + 8 * complete,
            reason: format!("truncated data: {complete} of {} values present", n_q * n_p),
        });
    }
    if body.len() > needed {
        return Err(Error::MalformedSnapshot { offset: HEADER_LEN + needed, reason: format!("{} trailing bytes", body.len() - needed) });
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let values = Array2::from_shape_vec((n_q, n_p), values).expect("shape checked");
    PhaseField::new(grid, values, time).map_err(|e| match e {
        Error::NonFinite(i, j) => Error::MalformedSnapshot { offset: HEADER_LEN + 8 * (i * n_p + j), reason: "non-finite value".into() },
        other => other,
    })
}

pub fn write_snapshot(path: impl AsRef<Path>, field: &PhaseField) -> Result<()> {
    std::fs::write(path, encode_snapshot(field)?)?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<PhaseField> {
    decode_snapshot(&std::fs::read(path)?)
}

/// One `q,p,value` line per sample, `q` outer, preceded by a header row.
pub fn write_csv(mut out: impl Write, field: &PhaseField) -> Result<()> {
    let g = field.grid();
    writeln!(out, "q,p,value")?;
    for ((i, j), v) in field.values().indexed_iter() {
        writeln!(out, "{:?},{:?},{:?}", g.q(i), g.p(j), v)?;
    }
    Ok(())
}
