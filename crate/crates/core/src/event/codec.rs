//! `EVT1` event files.
//!
//! Little-endian layout: `"EVT1"`, u16 width, u16 height, u32 reserved (0),
//! then one 16-byte record per event: u64 t (µs), u16 x, u16 y,
//! i8 polarity (+1/−1), three zero bytes.

use super::{Event, EventError, EventStream, Polarity, Resolution};
use std::path::Path;

pub const EVT_MAGIC: [u8; 4] = *b"EVT1";
pub const EVT_HEADER_LEN: usize = 12;
pub const EVT_RECORD_LEN: usize = 16;

pub fn encode_evt(stream: &EventStream) -> Result<Vec<u8>, EventError> {
    let res = stream.resolution.validate()?;
    super::check_bounds(&stream.events, res)?;
    let mut out = Vec::with_capacity(EVT_HEADER_LEN + EVT_RECORD_LEN * stream.len());
    out.extend_from_slice(&EVT_MAGIC);
    out.extend_from_slice(&res.width.to_le_bytes());
    out.extend_from_slice(&res.height.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for e in &stream.events {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.polarity.sign() as u8);
        out.extend_from_slice(&[0, 0, 0]);
    }
    Ok(out)
}

pub fn decode_evt(bytes: &[u8]) -> Result<EventStream, EventError> {
    if bytes.len() < 4 {
        return Err(EventError::Truncated(bytes.len()));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != EVT_MAGIC {
        return Err(EventError::BadMagic(magic));
    }
    if bytes.len() < EVT_HEADER_LEN || !(bytes.len() - EVT_HEADER_LEN).is_multiple_of(EVT_RECORD_LEN) {
        return Err(EventError::Truncated(bytes.len()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let res = Resolution::new(u16_at(4), u16_at(6)).validate()?;
    let reserved = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if reserved != 0 {
        return Err(EventError::BadReserved(reserved));
    }
    let events = bytes[EVT_HEADER_LEN..]
        .chunks_exact(EVT_RECORD_LEN)
        .enumerate()
        .map(|(index, r)| {
            let t = u64::from_le_bytes(r[..8].try_into().unwrap());
            let x = u16::from_le_bytes([r[8], r[9]]);
            let y = u16::from_le_bytes([r[10], r[11]]);
            let value = r[12] as i8;
            let polarity = Polarity::from_sign(value).ok_or(EventError::BadPolarity { index, value })?;
            if r[13..16] != [0, 0, 0] {
                return Err(EventError::BadPadding { index });
            }
            if !res.contains(x, y) {
                return Err(EventError::OutOfBounds {
                    index,
                    t,
                    x,
                    y,
                    resolution: res,
                });
            }
            Ok(Event { t, x, y, polarity })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EventStream { resolution: res, events })
}

pub fn write_evt(path: impl AsRef<Path>, stream: &EventStream) -> Result<(), EventError> {
    std::fs::write(path, encode_evt(stream)?)?;
    Ok(())
}

pub fn read_evt(path: impl AsRef<Path>) -> Result<EventStream, EventError> {
    decode_evt(&std::fs::read(path)?)
}
