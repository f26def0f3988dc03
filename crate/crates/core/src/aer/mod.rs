//! Address-event transport with two wire profiles.
//!
//! RAW packs each spike into one little-endian 32-bit word with no framing
//! and no timestamps; it is meant for short in-order links. SAFE wraps a
//! batch of spikes in a sequenced, timestamped frame with a CRC-32 trailer so
//! the receiver can detect corruption, loss, duplication and reordering.
//!
//! `channel_transmit` simulates an unreliable link and `Receiver` turns what
//! arrives back into an ordered spike stream plus link counters.

mod channel;
mod crc;
mod raw;
mod receiver;
mod safe;

pub use channel::{channel_transmit, loopback, Channel, ChannelConfig, Delivery, LinkRx, LinkTx, Packet, Profile};
pub use crc::crc32;
pub use raw::{
    dequantize_raw, event_address, quantize_raw, raw_decode, raw_encode, RawSpike, MAX_ADDRESS, RAW_WORD_LEN,
};
pub use receiver::{LinkStats, ReceivedSpike, Receiver, DEFAULT_REORDER_WINDOW};
pub use safe::{
    annotate_frame, bitflip_fuzz, safe_decode, safe_encode, safe_frame_len, safe_overhead, SafeFrame, SafeRecord, SafeSender, FuzzReport,
    FLAG_PAYLOAD, SAFE_CRC_LEN, SAFE_HEADER_LEN, SAFE_MAGIC, SAFE_RECORD_LEN, SAFE_VERSION,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AerError {
    #[error("address {0} does not fit in 24 bits")]
    AddressOverflow(u32),
    #[error("spike {index} quantizes to zero and cannot be sent")]
    ZeroValue { index: usize },
    #[error("quantization scale must be finite and positive")]
    BadScale,
    #[error("raw stream length {0} is not a multiple of 4")]
    RawLength(usize),
    #[error("{0} records exceed the 65535 frame limit")]
    CountOverflow(usize),
    #[error("record {index}: offset {offset} is earlier than the previous one")]
    OffsetOrder { index: usize, offset: u16 },
    #[error("bad magic {0:#06x}")]
    BadMagic(u16),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("crc mismatch: frame says {stored:#010x}, computed {computed:#010x}")]
    BadCrc { stored: u32, computed: u32 },
    #[error("truncated frame: {len} bytes, need {need}")]
    Truncated { len: usize, need: usize },
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("invalid channel config: {0}")]
    Config(String),
}
