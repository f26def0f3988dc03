use super::{safe_decode, SafeFrame};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};

pub const DEFAULT_REORDER_WINDOW: u32 = 8;

/// How many released sequence numbers are remembered for telling a
/// duplicate from a frame that arrived after being written off.
const HISTORY: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub corrupted_dropped: u64,
    pub duplicate_dropped: u64,
    pub reordered: u64,
    /// Frames that turned up after their slot had been counted as lost.
    pub late_dropped: u64,
    pub bytes_sent: u64,
    pub events_sent: u64,
}

impl LinkStats {
    /// Wire bytes per event, `None` before any event is sent.
    pub fn overhead(&self) -> Option<f64> {
        (self.events_sent > 0).then(|| self.bytes_sent as f64 / self.events_sent as f64)
    }

    pub fn accounted(&self) -> u64 {
        self.delivered + self.lost + self.corrupted_dropped + self.duplicate_dropped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReceivedSpike {
    /// Frame timestamp plus the record's offset, µs.
    pub t: u64,
    pub address: u32,
    pub value: i16,
}

impl ReceivedSpike {
    pub fn from_frame(frame: &SafeFrame) -> impl Iterator<Item = ReceivedSpike> + '_ {
        frame.records.iter().map(|r| ReceivedSpike {
            t: frame.timestamp + r.dt_offset as u64,
            address: r.address,
            value: r.value,
        })
    }
}

/// Re-sequences SAFE frames. Frames up to `window` positions ahead of the
/// next expected sequence number wait in a buffer; once a later frame
/// arrives that is a full window ahead, the missing ones are written off as
/// lost. Sequence numbers wrap.
#[derive(Debug, Clone)]
pub struct Receiver {
    window: u32,
    next: u32,
    max_seen: Option<u32>,
    buffer: HashMap<u32, SafeFrame>,
    /// Fate of the sequence numbers just below `next`: true if delivered.
    history: VecDeque<bool>,
    gaps: u64,
    stats: LinkStats,
}

impl Default for Receiver {
    fn default() -> Self {
        Receiver::new(DEFAULT_REORDER_WINDOW)
    }
}

fn ahead(a: u32, b: u32) -> i64 {
    a.wrapping_sub(b) as i32 as i64
}

impl Receiver {
    /// Expects the stream to start at sequence number 0.
    pub fn new(window: u32) -> Self {
        Receiver {
            window: window.max(1),
            next: 0,
            max_seen: None,
            buffer: HashMap::new(),
            history: VecDeque::new(),
            gaps: 0,
            stats: LinkStats::default(),
        }
    }

    /// Counters as of now. Sender-side fields are filled in by the caller.
    pub fn stats(&self) -> LinkStats {
        LinkStats {
            lost: self.gaps.saturating_sub(self.stats.corrupted_dropped),
            ..self.stats
        }
    }

    pub fn next_expected(&self) -> u32 {
        self.next
    }

    /// Decodes and ingests one unit off the wire; frames that fail to decode
    /// are counted and dropped.
    pub fn ingest_bytes(&mut self, bytes: &[u8]) -> Vec<SafeFrame> {
        match safe_decode(bytes) {
            Ok(f) => self.ingest(f),
            Err(_) => {
                self.stats.corrupted_dropped += 1;
                Vec::new()
            }
        }
    }

    /// Returns the frames released in sequence order by this arrival.
    pub fn ingest(&mut self, frame: SafeFrame) -> Vec<SafeFrame> {
        let seq = frame.seq;
        let d = ahead(seq, self.next);
        if d < 0 {
            let back = (-d) as usize;
            if back <= self.history.len() && self.history[self.history.len() - back] {
                self.stats.duplicate_dropped += 1;
            } else {
                self.stats.late_dropped += 1;
            }
            return Vec::new();
        }
        if self.buffer.contains_key(&seq) {
            self.stats.duplicate_dropped += 1;
            return Vec::new();
        }
        match self.max_seen {
            Some(m) if ahead(seq, m) < 0 => self.stats.reordered += 1,
            Some(m) if ahead(seq, m) == 0 => {}
            _ => self.max_seen = Some(seq),
        }
        self.buffer.insert(seq, frame);
        let mut out = Vec::new();
        self.release(&mut out);
        while let Some(m) = self.max_seen {
            if self.buffer.is_empty() || ahead(m, self.next) < self.window as i64 {
                break;
            }
            self.write_off();
            self.release(&mut out);
        }
        out
    }

    /// Gives up on every gap below the highest sequence number seen and
    /// releases everything buffered.
    pub fn flush(&mut self) -> Vec<SafeFrame> {
        let mut out = Vec::new();
        self.release(&mut out);
        while !self.buffer.is_empty() {
            self.write_off();
            self.release(&mut out);
        }
        out
    }

    /// End of stream: flushes, then counts frames `next..total_sent` that
    /// never arrived.
    pub fn finish(&mut self, total_sent: u32) -> Vec<SafeFrame> {
        let out = self.flush();
        while ahead(total_sent, self.next) > 0 {
            self.write_off();
        }
        out
    }

    fn release(&mut self, out: &mut Vec<SafeFrame>) {
        while let Some(f) = self.buffer.remove(&self.next) {
            self.stats.delivered += 1;
            self.advance(true);
            out.push(f);
        }
    }

    fn write_off(&mut self) {
        self.gaps += 1;
        self.advance(false);
    }

    fn advance(&mut self, delivered: bool) {
        self.history.push_back(delivered);
        if self.history.len() > HISTORY {
            self.history.pop_front();
        }
        self.next = self.next.wrapping_add(1);
    }
}
