use super::HarnessError;
use crate::aer::{
    channel_transmit, raw_encode, safe_overhead, ChannelConfig, LinkStats, Packet, Profile, RawSpike, Receiver,
    SafeRecord, SafeSender, MAX_ADDRESS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SAFE_BATCH_SIZES: [usize; 4] = [1, 10, 100, 1000];

/// Synthetic spike traffic: `events` random spikes, sent over the link in
/// SAFE frames of `batch` records, one frame every `frame_interval_us`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub events: usize,
    pub batch: usize,
    pub frame_interval_us: u64,
    pub seed: u64,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        TrafficSpec {
            events: 10_000,
            batch: 100,
            frame_interval_us: 1_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadRow {
    pub profile: Profile,
    pub count: usize,
    pub events: u64,
    pub bytes: u64,
    pub measured: f64,
    pub formula: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtoBench {
    pub rows: Vec<OverheadRow>,
    pub link: LinkStats,
}

impl ProtoBench {
    pub fn table(&self) -> String {
        let mut out = String::from("profile  count  events    bytes  bytes/event  formula\n");
        for r in &self.rows {
            let count = if r.profile == Profile::Raw { "-".to_string() } else { r.count.to_string() };
            out.push_str(&format!(
                "{:<7} {:>6} {:>7} {:>8} {:>12.2} {:>8.2}\n",
                format!("{:?}", r.profile).to_uppercase(),
                count,
                r.events,
                r.bytes,
                r.measured,
                r.formula
            ));
        }
        let l = &self.link;
        out.push_str(&format!(
            "link: sent {} delivered {} lost {} corrupted {} duplicate {} reordered {} late {}\n",
            l.sent, l.delivered, l.lost, l.corrupted_dropped, l.duplicate_dropped, l.reordered, l.late_dropped
        ));
        out
    }
}

fn spikes(n: usize, rng: &mut ChaCha8Rng) -> Vec<RawSpike> {
    (0..n)
        .map(|_| RawSpike {
            address: rng.gen_range(0..=MAX_ADDRESS),
            value: loop {
                let v: i8 = rng.gen();
                if v != 0 {
                    break v;
                }
            },
        })
        .collect()
}

fn records(chunk: &[RawSpike]) -> Vec<SafeRecord> {
    chunk
        .iter()
        .enumerate()
        .map(|(i, s)| SafeRecord {
            address: s.address,
            value: s.value as i16,
            dt_offset: i as u16,
        })
        .collect()
}

/// Measures bytes per event for RAW and for SAFE at each batch size, then
/// pushes the traffic through a simulated link and a receiver.
pub fn protocol_bench(traffic: &TrafficSpec, cfg: &ChannelConfig) -> Result<ProtoBench, HarnessError> {
    if traffic.events == 0 || traffic.batch == 0 || traffic.batch > u16::MAX as usize {
        return Err(HarnessError::Config("traffic needs events and a batch of 1..=65535".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(traffic.seed);
    let mut rows = Vec::new();

    let raw = spikes(traffic.events, &mut rng);
    let raw_bytes = raw_encode(&raw)?.len() as u64;
    rows.push(OverheadRow {
        profile: Profile::Raw,
        count: 1,
        events: raw.len() as u64,
        bytes: raw_bytes,
        measured: raw_bytes as f64 / raw.len() as f64,
        formula: 4.0,
    });

    for count in SAFE_BATCH_SIZES {
        // whole frames only, so every frame carries exactly `count` records
        let n = traffic.events.div_ceil(count) * count;
        let traffic_spikes = spikes(n, &mut rng);
        let mut sender = SafeSender::new();
        for (i, chunk) in traffic_spikes.chunks(count).enumerate() {
            sender.send(i as u64, records(chunk))?;
        }
        rows.push(OverheadRow {
            profile: Profile::Safe,
            count,
            events: sender.events_sent,
            bytes: sender.bytes_sent,
            measured: sender.bytes_sent as f64 / sender.events_sent as f64,
            formula: safe_overhead(count),
        });
    }

    let mut sender = SafeSender::new();
    let mut packets = Vec::new();
    for (i, chunk) in raw.chunks(traffic.batch).enumerate() {
        let t = i as u64 * traffic.frame_interval_us;
        packets.push(Packet {
            t_us: t,
            bytes: sender.send(t, records(chunk))?,
        });
    }
    let mut receiver = Receiver::new(crate::aer::DEFAULT_REORDER_WINDOW);
    for d in channel_transmit(&packets, cfg, Profile::Safe)? {
        receiver.ingest_bytes(&d.bytes);
    }
    receiver.finish(sender.frames_sent as u32);
    let link = LinkStats {
        sent: sender.frames_sent,
        bytes_sent: sender.bytes_sent,
        events_sent: sender.events_sent,
        ..receiver.stats()
    };
    Ok(ProtoBench { rows, link })
}
