//! RAW profile: one 32-bit little-endian word per spike.
//!
//! ```text
//! bits 31..24  value (i8, two's complement, never 0)
//! bits 23..0   address
//! ```

use super::AerError;
use crate::event::{Event, Resolution};
use crate::sigma_delta::GradedSpike;

pub const RAW_WORD_LEN: usize = 4;
pub const MAX_ADDRESS: u32 = (1 << 24) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RawSpike {
    pub address: u32,
    pub value: i8,
}

impl RawSpike {
    pub fn word(self) -> Result<u32, AerError> {
        if self.address > MAX_ADDRESS {
            return Err(AerError::AddressOverflow(self.address));
        }
        if self.value == 0 {
            return Err(AerError::ZeroValue { index: 0 });
        }
        Ok(((self.value as u8 as u32) << 24) | self.address)
    }

    pub fn from_word(word: u32) -> Self {
        RawSpike {
            address: word & MAX_ADDRESS,
            value: (word >> 24) as u8 as i8,
        }
    }
}

/// Row-major pixel address, the layout shared by both profiles.
pub fn event_address(e: &Event, res: Resolution) -> u32 {
    res.index(e.x, e.y) as u32
}

pub fn raw_encode(spikes: &[RawSpike]) -> Result<Vec<u8>, AerError> {
    let mut out = Vec::with_capacity(spikes.len() * RAW_WORD_LEN);
    for (index, s) in spikes.iter().enumerate() {
        let w = s.word().map_err(|e| match e {
            AerError::ZeroValue { .. } => AerError::ZeroValue { index },
            other => other,
        })?;
        out.extend_from_slice(&w.to_le_bytes());
    }
    Ok(out)
}

pub fn raw_decode(bytes: &[u8]) -> Result<Vec<RawSpike>, AerError> {
    if !bytes.len().is_multiple_of(RAW_WORD_LEN) {
        return Err(AerError::RawLength(bytes.len()));
    }
    let spikes: Vec<RawSpike> = bytes
        .chunks_exact(RAW_WORD_LEN)
        .map(|c| RawSpike::from_word(u32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    if let Some(index) = spikes.iter().position(|s| s.value == 0) {
        return Err(AerError::ZeroValue { index });
    }
    Ok(spikes)
}

/// Rounds `value / scale` to the nearest step, saturating at the i8 range.
/// The scale is link metadata and never travels on the wire.
pub fn quantize_raw(spikes: &[GradedSpike], scale: f64) -> Result<Vec<RawSpike>, AerError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(AerError::BadScale);
    }
    spikes
        .iter()
        .enumerate()
        .map(|(index, s)| {
            if s.address > MAX_ADDRESS {
                return Err(AerError::AddressOverflow(s.address));
            }
            let q = (s.value / scale).round().clamp(i8::MIN as f64, i8::MAX as f64) as i8;
            if q == 0 {
                return Err(AerError::ZeroValue { index });
            }
            Ok(RawSpike {
                address: s.address,
                value: q,
            })
        })
        .collect()
}

pub fn dequantize_raw(spikes: &[RawSpike], scale: f64) -> Vec<GradedSpike> {
    spikes
        .iter()
        .map(|s| GradedSpike {
            address: s.address,
            value: s.value as f64 * scale,
        })
        .collect()
}
