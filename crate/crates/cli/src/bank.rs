//! Binary sample-bank files.
//!
//! Layout: `b"RBNK"`, a version byte, the seed as little-endian `u64`, `N` and
//! `m` as little-endian `u32`, then `N·m` sign bits in row-major order. Bit
//! `b` lives in byte `b / 8` at position `b % 8` (least significant first);
//! a set bit is `+1`. Padding bits in the last byte are zero.

use std::io::{Read, Write};

use saatrace::hutchinson::SampleBank;

use crate::error::FormatError;

pub const MAGIC: &[u8; 4] = b"RBNK";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 8 + 4 + 4;

pub fn write_bank<W: Write>(mut w: W, bank: &SampleBank) -> Result<(), FormatError> {
    let n = u32::try_from(bank.n()).map_err(|_| FormatError::Bank("N exceeds u32".into()))?;
    let m = u32::try_from(bank.m()).map_err(|_| FormatError::Bank("m exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + bank.signs().len().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&bank.seed().to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&m.to_le_bytes());
    for chunk in bank.signs().chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (b, &s)| if s == 1 { acc | (1 << b) } else { acc });
        out.push(byte);
    }
    w.write_all(&out)?;
    Ok(())
}

pub fn read_bank<R: Read>(mut r: R) -> Result<SampleBank, FormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(FormatError::Bank("missing RBNK header".into()));
    }
    if bytes[4] != VERSION {
        return Err(FormatError::Bank(format!("unsupported version {}", bytes[4])));
    }
    let seed = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
    let n = u32::from_le_bytes(bytes[13..17].try_into().expect("4 bytes")) as usize;
    let m = u32::from_le_bytes(bytes[17..21].try_into().expect("4 bytes")) as usize;
    let bits = n
        .checked_mul(m)
        .ok_or_else(|| FormatError::Bank("N·m overflows".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != bits.div_ceil(8) {
        return Err(FormatError::Bank(format!(
            "expected {} payload bytes for {n}×{m} signs, found {}",
            bits.div_ceil(8),
            payload.len()
        )));
    }
    if bits % 8 != 0 && payload[payload.len() - 1] >> (bits % 8) != 0 {
        return Err(FormatError::Bank("nonzero padding bits".into()));
    }
    let signs = (0..bits)
        .map(|b| if (payload[b / 8] >> (b % 8)) & 1 == 1 { 1 } else { -1 })
        .collect();
    Ok(SampleBank::from_signs(seed, n, m, signs)?)
}
