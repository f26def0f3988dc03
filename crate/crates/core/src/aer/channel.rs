//! Seeded lossy link.
//!
//! Each unit is processed in send order and consumes random draws in a fixed
//! sequence: one loss draw, then (if it survives) one draw per byte for bit
//! flips, one for jitter and one for its reorder slot. Impairments whose
//! parameter is zero consume no draws, so a config that only sets `loss_p`
//! uses exactly one draw per unit.

use super::AerError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::mpsc::{sync_channel, Receiver as MpscReceiver, RecvError, SendError, SyncSender};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    Raw,
    Safe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub loss_p: f64,
    /// Probability that a given byte has one of its bits flipped.
    pub bitflip_p: f64,
    pub delay_base_us: u64,
    pub delay_jitter_us: u64,
    /// A unit may arrive up to this many positions later than sent.
    pub reorder_window: usize,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn lossless(seed: u64) -> Self {
        ChannelConfig {
            loss_p: 0.0,
            bitflip_p: 0.0,
            delay_base_us: 0,
            delay_jitter_us: 0,
            reorder_window: 0,
            seed,
        }
    }

    pub fn validate(&self, profile: Profile) -> Result<(), AerError> {
        for (name, p) in [("loss_p", self.loss_p), ("bitflip_p", self.bitflip_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(AerError::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if profile == Profile::Raw && self.reorder_window > 0 {
            return Err(AerError::Config("the RAW profile assumes an in-order link".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub t_us: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    /// Position of the unit in the sent sequence.
    pub index: usize,
    pub t_us: u64,
    pub bytes: Vec<u8>,
}

/// Streaming form of the simulator: units are pushed in send order and
/// come out in arrival order as soon as no later unit can overtake them.
#[derive(Debug, Clone)]
pub struct Channel {
    cfg: ChannelConfig,
    rng: ChaCha8Rng,
    next_index: usize,
    pending: Vec<(usize, Delivery)>,
}

impl Channel {
    pub fn new(cfg: ChannelConfig, profile: Profile) -> Result<Self, AerError> {
        cfg.validate(profile)?;
        Ok(Channel {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            next_index: 0,
            pending: Vec::new(),
        })
    }

    pub fn push(&mut self, unit: &Packet) -> Vec<Delivery> {
        let index = self.next_index;
        self.next_index += 1;
        let cfg = &self.cfg;
        let rng = &mut self.rng;
        if !(cfg.loss_p > 0.0 && rng.gen::<f64>() < cfg.loss_p) {
            let mut bytes = unit.bytes.clone();
            if cfg.bitflip_p > 0.0 {
                for b in bytes.iter_mut() {
                    if rng.gen::<f64>() < cfg.bitflip_p {
                        *b ^= 1 << rng.gen_range(0..8);
                    }
                }
            }
            let jitter = if cfg.delay_jitter_us > 0 {
                (cfg.delay_jitter_us as f64 * rng.gen::<f64>()) as u64
            } else {
                0
            };
            let slot = if cfg.reorder_window > 0 {
                index + (rng.gen::<f64>() * (cfg.reorder_window + 1) as f64) as usize
            } else {
                index
            };
            self.pending.push((
                slot,
                Delivery {
                    index,
                    t_us: unit.t_us + cfg.delay_base_us + jitter,
                    bytes,
                },
            ));
        }
        // later units get slots >= their own index, so anything at or below
        // this index is final
        self.release(|slot| slot <= index)
    }

    pub fn finish(&mut self) -> Vec<Delivery> {
        self.release(|_| true)
    }

    fn release(&mut self, ready: impl Fn(usize) -> bool) -> Vec<Delivery> {
        self.pending.sort_by_key(|(slot, d)| (*slot, d.index));
        let n = self.pending.iter().take_while(|(slot, _)| ready(*slot)).count();
        self.pending.drain(..n).map(|(_, d)| d).collect()
    }
}

/// Returns surviving units in arrival order. Delivery time is the send time
/// plus `delay_base_us + delay_jitter_us · U[0,1)`.
pub fn channel_transmit(units: &[Packet], cfg: &ChannelConfig, profile: Profile) -> Result<Vec<Delivery>, AerError> {
    let mut ch = Channel::new(*cfg, profile)?;
    let mut out = Vec::with_capacity(units.len());
    for u in units {
        out.extend(ch.push(u));
    }
    out.extend(ch.finish());
    Ok(out)
}

/// Bounded in-process byte pipe standing in for a real link between two
/// threads.
pub struct LinkTx(SyncSender<Vec<u8>>);
pub struct LinkRx(MpscReceiver<Vec<u8>>);

pub fn loopback(capacity: usize) -> (LinkTx, LinkRx) {
    let (tx, rx) = sync_channel(capacity);
    (LinkTx(tx), LinkRx(rx))
}

impl LinkTx {
    pub fn send(&self, bytes: Vec<u8>) -> Result<(), SendError<Vec<u8>>> {
        self.0.send(bytes)
    }
}

impl LinkRx {
    pub fn recv(&self) -> Result<Vec<u8>, RecvError> {
        self.0.recv()
    }
}

impl Iterator for LinkRx {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        self.0.recv().ok()
    }
}
