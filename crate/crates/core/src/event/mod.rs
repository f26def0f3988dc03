//! Event-stream data model.
//!
//! Events from a (possibly synthetic) dynamic vision sensor, their
//! accumulation into frames, arbitrary-ratio downsampling, depth-based
//! figure/ground masking and the `EVT1` file codec.

mod codec;
mod depth;
mod frame;
mod synth;

pub use codec::{decode_evt, encode_evt, read_evt, write_evt, EVT_HEADER_LEN, EVT_MAGIC, EVT_RECORD_LEN};
pub use depth::{mask_events, mask_frame, DepthFrame, DEFAULT_FAR_MAX_M, NO_READING};
pub use frame::{Frame, FrameMode};
pub use synth::{inject_noise, synth_hand_events, waving_hands, HandId, SynthParams, Trajectory, TrajectorySample, Unit};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest sensor the data model is sized for (1280×720).
pub const MAX_WIDTH: u16 = 1280;
pub const MAX_HEIGHT: u16 = 720;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventError {
    #[error("event {index} at ({x}, {y}) t={t}us lies outside {resolution}")]
    OutOfBounds {
        index: usize,
        t: u64,
        x: u16,
        y: u16,
        resolution: Resolution,
    },
    #[error("invalid resolution {0}")]
    InvalidResolution(Resolution),
    #[error("empty or inverted window [{0}, {1})")]
    InvalidWindow(u64, u64),
    #[error("target {target} is larger than source {source_res}")]
    UpsampleRequested {
        source_res: Resolution,
        target: Resolution,
    },
    #[error("depth frame {depth} does not match event grid {events}")]
    ResolutionMismatch { events: Resolution, depth: Resolution },
    #[error("invalid depth range [{near}, {far}]")]
    InvalidDepthRange { near: f32, far: f32 },
    #[error("bad magic {0:02x?}, expected EVT1")]
    BadMagic([u8; 4]),
    #[error("truncated file: {0} bytes")]
    Truncated(usize),
    #[error("reserved header field is {0}, expected 0")]
    BadReserved(u32),
    #[error("record {index}: invalid polarity byte {value}")]
    BadPolarity { index: usize, value: i8 },
    #[error("record {index}: nonzero padding")]
    BadPadding { index: usize },
    #[error("trajectory: {0}")]
    Trajectory(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for EventError {
    fn from(e: std::io::Error) -> Self {
        EventError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u16,
    pub height: u16,
}

impl Resolution {
    pub const fn new(width: u16, height: u16) -> Self {
        Resolution { width, height }
    }

    pub fn validate(self) -> Result<Self, EventError> {
        if self.width == 0 || self.height == 0 || self.width > MAX_WIDTH || self.height > MAX_HEIGHT {
            return Err(EventError::InvalidResolution(self));
        }
        Ok(self)
    }

    pub fn cells(self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    /// Row-major cell index.
    pub fn index(self, x: u16, y: u16) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Both dimensions are no larger than `other`'s.
    pub fn fits_in(self, other: Resolution) -> bool {
        self.width <= other.width && self.height <= other.height
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }

    pub fn from_sign(v: i8) -> Option<Self> {
        match v {
            1 => Some(Polarity::On),
            -1 => Some(Polarity::Off),
            _ => None,
        }
    }
}

/// A single brightness-change event. `t` is in microseconds since the
/// stream epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Event { t, x, y, polarity }
    }
}

/// Events in a declared sensor geometry, ordered by timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStream {
    pub resolution: Resolution,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(resolution: Resolution) -> Self {
        EventStream {
            resolution,
            events: Vec::new(),
        }
    }

    pub fn from_events(resolution: Resolution, mut events: Vec<Event>) -> Result<Self, EventError> {
        resolution.validate()?;
        check_bounds(&events, resolution)?;
        events.sort_by_key(|e| e.t);
        Ok(EventStream { resolution, events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events with `t0 <= t < t1`. Relies on the stream being time-sorted.
    pub fn window(&self, t0: u64, t1: u64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t < t0);
        let hi = self.events.partition_point(|e| e.t < t1);
        &self.events[lo..hi.max(lo)]
    }

    pub fn duration_us(&self) -> u64 {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0,
        }
    }
}

pub(crate) fn check_bounds(events: &[Event], resolution: Resolution) -> Result<(), EventError> {
    match events.iter().position(|e| !resolution.contains(e.x, e.y)) {
        Some(index) => {
            let e = events[index];
            Err(EventError::OutOfBounds {
                index,
                t: e.t,
                x: e.x,
                y: e.y,
                resolution,
            })
        }
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_limits() {
        assert!(Resolution::new(1280, 720).validate().is_ok());
        assert!(Resolution::new(0, 10).validate().is_err());
        assert!(Resolution::new(1281, 10).validate().is_err());
    }

    #[test]
    fn stream_rejects_out_of_bounds() {
        let res = Resolution::new(10, 10);
        let err = EventStream::from_events(res, vec![Event::new(0, 10, 0, Polarity::On)]).unwrap_err();
        assert!(matches!(err, EventError::OutOfBounds { index: 0, x: 10, .. }));
    }

    #[test]
    fn window_slices_half_open() {
        let res = Resolution::new(4, 4);
        let evs = (0..10).map(|t| Event::new(t * 10, 0, 0, Polarity::On)).collect();
        let s = EventStream::from_events(res, evs).unwrap();
        let w = s.window(20, 50);
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].t, 20);
        assert_eq!(w[2].t, 40);
        assert!(s.window(50, 20).is_empty());
    }
}
