//! SAFE profile frame layout (all integers little-endian):
//!
//! ```text
//! off  size  field
//!   0     2  magic 0xAE52
//!   2     1  version (1)
//!   3     1  flags (bit 0: payload present; others zero)
//!   4     4  seq (wrapping)
//!   8     8  timestamp, µs
//!  16     2  count
//!  18   8·n  records: address u32, value i16, dt_offset u16
//! 18+8n   4  CRC-32 over bytes 0..18+8n
//! ```

use super::{crc32, AerError};
use std::fmt::Write as _;

pub const SAFE_MAGIC: u16 = 0xAE52;
pub const SAFE_VERSION: u8 = 1;
pub const SAFE_HEADER_LEN: usize = 18;
pub const SAFE_RECORD_LEN: usize = 8;
pub const SAFE_CRC_LEN: usize = 4;
pub const FLAG_PAYLOAD: u8 = 0x01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SafeRecord {
    pub address: u32,
    pub value: i16,
    /// Microseconds after the frame timestamp.
    pub dt_offset: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SafeFrame {
    pub seq: u32,
    pub timestamp: u64,
    pub records: Vec<SafeRecord>,
}

impl SafeFrame {
    pub fn flags(&self) -> u8 {
        if self.records.is_empty() {
            0
        } else {
            FLAG_PAYLOAD
        }
    }
}

pub fn safe_frame_len(count: usize) -> usize {
    SAFE_HEADER_LEN + SAFE_RECORD_LEN * count + SAFE_CRC_LEN
}

/// Wire bytes per event for a frame of `count` records.
pub fn safe_overhead(count: usize) -> f64 {
    (SAFE_HEADER_LEN + SAFE_CRC_LEN) as f64 / count as f64 + SAFE_RECORD_LEN as f64
}

pub fn safe_encode(frame: &SafeFrame) -> Result<Vec<u8>, AerError> {
    let n = frame.records.len();
    if n > u16::MAX as usize {
        return Err(AerError::CountOverflow(n));
    }
    check_offsets(&frame.records)?;
    let mut out = Vec::with_capacity(safe_frame_len(n));
    out.extend_from_slice(&SAFE_MAGIC.to_le_bytes());
    out.push(SAFE_VERSION);
    out.push(frame.flags());
    out.extend_from_slice(&frame.seq.to_le_bytes());
    out.extend_from_slice(&frame.timestamp.to_le_bytes());
    out.extend_from_slice(&(n as u16).to_le_bytes());
    for r in &frame.records {
        out.extend_from_slice(&r.address.to_le_bytes());
        out.extend_from_slice(&r.value.to_le_bytes());
        out.extend_from_slice(&r.dt_offset.to_le_bytes());
    }
    let crc = crc32(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn check_offsets(records: &[SafeRecord]) -> Result<(), AerError> {
    for (i, w) in records.windows(2).enumerate() {
        if w[1].dt_offset < w[0].dt_offset {
            return Err(AerError::OffsetOrder {
                index: i + 1,
                offset: w[1].dt_offset,
            });
        }
    }
    Ok(())
}

fn u16_at(b: &[u8], o: usize) -> u16 {
    u16::from_le_bytes([b[o], b[o + 1]])
}

fn u32_at(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes(b[o..o + 4].try_into().unwrap())
}

/// Checks run in wire order: length of the fixed header, magic, version,
/// declared length, CRC, then the semantic rules the CRC cannot catch
/// (flags, trailing bytes, offset order).
pub fn safe_decode(bytes: &[u8]) -> Result<SafeFrame, AerError> {
    let need = safe_frame_len(0);
    if bytes.len() < need {
        return Err(AerError::Truncated { len: bytes.len(), need });
    }
    let magic = u16_at(bytes, 0);
    if magic != SAFE_MAGIC {
        return Err(AerError::BadMagic(magic));
    }
    if bytes[2] != SAFE_VERSION {
        return Err(AerError::BadVersion(bytes[2]));
    }
    let count = u16_at(bytes, 16) as usize;
    let need = safe_frame_len(count);
    if bytes.len() < need {
        return Err(AerError::Truncated { len: bytes.len(), need });
    }
    let body = need - SAFE_CRC_LEN;
    let stored = u32_at(bytes, body);
    let computed = crc32(&bytes[..body]);
    if stored != computed {
        return Err(AerError::BadCrc { stored, computed });
    }
    if bytes.len() > need {
        return Err(AerError::Malformed(format!("{} trailing bytes", bytes.len() - need)));
    }
    let flags = bytes[3];
    let expect_flags = if count > 0 { FLAG_PAYLOAD } else { 0 };
    if flags != expect_flags {
        return Err(AerError::Malformed(format!("flags {flags:#04x} with {count} records")));
    }
    let records: Vec<SafeRecord> = bytes[SAFE_HEADER_LEN..body]
        .chunks_exact(SAFE_RECORD_LEN)
        .map(|c| SafeRecord {
            address: u32_at(c, 0),
            value: i16::from_le_bytes([c[4], c[5]]),
            dt_offset: u16_at(c, 6),
        })
        .collect();
    check_offsets(&records).map_err(|e| AerError::Malformed(e.to_string()))?;
    Ok(SafeFrame {
        seq: u32_at(bytes, 4),
        timestamp: u64::from_le_bytes(bytes[8..16].try_into().unwrap()),
        records,
    })
}

/// Field-by-field hex listing of a frame, for inspection.
pub fn annotate_frame(bytes: &[u8]) -> String {
    let mut out = String::new();
    let mut line = |off: usize, len: usize, label: &str| {
        if off >= bytes.len() {
            return;
        }
        let end = (off + len).min(bytes.len());
        let hex: Vec<String> = bytes[off..end].iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(out, "{off:04x}  {:<24} {label}", hex.join(" "));
    };
    line(0, 2, "magic");
    line(2, 1, "version");
    line(3, 1, "flags");
    line(4, 4, "seq");
    line(8, 8, "timestamp");
    line(16, 2, "count");
    let count = if bytes.len() >= SAFE_HEADER_LEN {
        u16_at(bytes, 16) as usize
    } else {
        0
    };
    for i in 0..count {
        let o = SAFE_HEADER_LEN + i * SAFE_RECORD_LEN;
        line(o, 4, &format!("record {i} address"));
        line(o + 4, 2, &format!("record {i} value"));
        line(o + 6, 2, &format!("record {i} dt_offset"));
    }
    line(SAFE_HEADER_LEN + count * SAFE_RECORD_LEN, SAFE_CRC_LEN, "crc32");
    let _ = match safe_decode(bytes) {
        Ok(f) => writeln!(out, "valid: seq {} t {} us, {} records", f.seq, f.timestamp, f.records.len()),
        Err(e) => writeln!(out, "invalid: {e}"),
    };
    out
}

/// Outcome of flipping every bit of a frame, one at a time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FuzzReport {
    pub flips: usize,
    /// Decoded successfully despite the flip.
    pub accepted: usize,
    pub bad_magic: usize,
    pub bad_version: usize,
    pub bad_crc: usize,
    pub truncated: usize,
    pub malformed: usize,
}

impl FuzzReport {
    pub fn detected(&self) -> usize {
        self.flips - self.accepted
    }
}

pub fn bitflip_fuzz(frame: &[u8]) -> FuzzReport {
    let mut r = FuzzReport::default();
    let mut m = frame.to_vec();
    for bit in 0..frame.len() * 8 {
        m[bit / 8] ^= 1 << (bit % 8);
        r.flips += 1;
        match safe_decode(&m) {
            Ok(_) => r.accepted += 1,
            Err(AerError::BadMagic(_)) => r.bad_magic += 1,
            Err(AerError::BadVersion(_)) => r.bad_version += 1,
            Err(AerError::BadCrc { .. }) => r.bad_crc += 1,
            Err(AerError::Truncated { .. }) => r.truncated += 1,
            Err(_) => r.malformed += 1,
        }
        m[bit / 8] ^= 1 << (bit % 8);
    }
    r
}

/// Frames batches with consecutive sequence numbers and counts what it
/// sends.
#[derive(Debug, Clone, Default)]
pub struct SafeSender {
    next_seq: u32,
    pub frames_sent: u64,
    pub bytes_sent: u64,
    pub events_sent: u64,
}

impl SafeSender {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_seq(&self) -> u32 {
        self.next_seq
    }

    pub fn send(&mut self, timestamp: u64, records: Vec<SafeRecord>) -> Result<Vec<u8>, AerError> {
        let frame = SafeFrame {
            seq: self.next_seq,
            timestamp,
            records,
        };
        let bytes = safe_encode(&frame)?;
        self.next_seq = self.next_seq.wrapping_add(1);
        self.frames_sent += 1;
        self.bytes_sent += bytes.len() as u64;
        self.events_sent += frame.records.len() as u64;
        Ok(bytes)
    }
}
