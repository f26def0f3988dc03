use super::{EnergyConstants, HarnessError};
use crate::aer::LinkStats;
use crate::orchestrator::TraceEntry;
use crate::theremin::PitchCalibration;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// Virtual latency of one stage over all control messages that reached the
/// synth, µs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    pub total_us: u64,
    pub max_us: u64,
}

impl LatencyStats {
    pub fn add(&mut self, us: u64) {
        self.count += 1;
        self.total_us += us;
        self.max_us = self.max_us.max(us);
    }

    pub fn mean_us(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total_us as f64 / self.count as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LatencyReport {
    pub sensor: LatencyStats,
    pub tracker: LatencyStats,
    pub link: LatencyStats,
    pub orchestrator: LatencyStats,
    pub synth: LatencyStats,
    pub end_to_end: LatencyStats,
}

/// Running absolute-error summary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub n: u64,
    pub mean: f64,
    pub max: f64,
}

impl ErrorStats {
    pub fn add(&mut self, err: f64) {
        let e = err.abs();
        self.n += 1;
        self.mean += (e - self.mean) / self.n as f64;
        self.max = self.max.max(e);
    }
}

/// Fit of the pitch law to one calibration segment: tracked hand distance
/// against the instrument's frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub start_us: u64,
    pub samples: u64,
    pub fitted: Option<PitchCalibration>,
    /// RMS residual in cents; zero when no fit was possible.
    pub rms_cents: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Virtual time the tracker gate was on, s.
    pub tracker_active_s: f64,
    pub edge_tracker_j: f64,
    pub gpu_alt_j_min: f64,
    pub gpu_alt_j_max: f64,
    /// Cluster power over board power at the largest board draw.
    pub power_ratio_min: f64,
    pub power_ratio_max: f64,
}

impl EnergyReport {
    pub fn estimate(c: &EnergyConstants, tracker_active_s: f64) -> Result<Self, HarnessError> {
        Ok(EnergyReport {
            tracker_active_s,
            edge_tracker_j: c.edge_tracker_w * tracker_active_s,
            gpu_alt_j_min: c.gpu_alt_w_min * tracker_active_s,
            gpu_alt_j_max: c.gpu_alt_w_max * tracker_active_s,
            power_ratio_min: power_ratio(c.cluster_kw, c.board_w_max, c.boards)?,
            power_ratio_max: power_ratio(c.cluster_kw, c.board_w_min, c.boards)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub wall_s: f64,
    pub rtf: f64,
}

impl WallClock {
    pub fn new(sim_s: f64, wall_s: f64) -> Result<Self, HarnessError> {
        Ok(WallClock {
            wall_s,
            rtf: rtf(sim_s, wall_s)?,
        })
    }

    pub fn sub_real_time(&self) -> bool {
        self.rtf < 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub sim_time_us: u64,
    pub windows: u64,
    pub tracker_steps: u64,
    pub sensor_events: u64,
    pub noise_events: u64,
    pub trace: Vec<TraceEntry>,
    pub link: LinkStats,
    pub routed_delivered: u64,
    pub routed_dropped: u64,
    pub control_points: u64,
    /// Estimates that reached the synth without a pitch hand.
    pub missing_pitch_hand: u64,
    pub latency: LatencyReport,
    pub solo_pitch_error_cents: ErrorStats,
    pub duet_pitch_error_cents: ErrorStats,
    /// Pitch-hand estimate against the performer's hand, over the same
    /// windows as the duet pitch error.
    pub tracking_error_px: ErrorStats,
    pub cents_per_pixel: f64,
    /// `cents_per_pixel · mean tracking error + 1`.
    pub duet_error_bound_cents: f64,
    pub calibrations: Vec<CalibrationFit>,
    pub detector_spikes: Option<u64>,
    pub energy: EnergyReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallClock>,
}

impl RunReport {
    pub fn sim_time_s(&self) -> f64 {
        self.sim_time_us as f64 / 1e6
    }

    pub fn duet_within_bound(&self) -> bool {
        self.duet_pitch_error_cents.mean <= self.duet_error_bound_cents
    }

    /// JSON of every field that the seed determines.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.wall = None;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// `cluster_kw·1000 / (board_w·boards)`.
pub fn power_ratio(cluster_kw: f64, board_w: f64, boards: f64) -> Result<f64, HarnessError> {
    if board_w * boards == 0.0 {
        return Err(HarnessError::ZeroDivisor("board_w·boards"));
    }
    if !(cluster_kw > 0.0 && board_w > 0.0 && boards > 0.0) {
        return Err(HarnessError::Config("power figures must be positive".into()));
    }
    Ok(cluster_kw * 1000.0 / (board_w * boards))
}

/// Real-time factor: simulated time over wall time.
pub fn rtf(sim_s: f64, wall_s: f64) -> Result<f64, HarnessError> {
    if wall_s == 0.0 {
        return Err(HarnessError::ZeroDivisor("wall time"));
    }
    if !(sim_s >= 0.0 && wall_s > 0.0) {
        return Err(HarnessError::Config("times must be non-negative".into()));
    }
    Ok(sim_s / wall_s)
}

fn latency_line(out: &mut String, name: &str, s: &LatencyStats) {
    let _ = writeln!(out, "  {name:<12} mean {:>9.1} us  max {:>7} us", s.mean_us(), s.max_us);
}

/// Human-readable summary.
pub fn metrics_report(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {}  simulated {:.3} s  windows {}", r.seed, r.sim_time_s(), r.windows);
    let states: Vec<String> = r.trace.iter().map(|e| format!("{}ms {:?}", e.t_ms, e.state)).collect();
    let _ = writeln!(out, "states: {}", states.join(" -> "));
    let _ = writeln!(
        out,
        "sensor: {} events ({} distractors), tracker steps {}",
        r.sensor_events, r.noise_events, r.tracker_steps
    );
    if let Some(s) = r.detector_spikes {
        let _ = writeln!(out, "detector spikes: {s}");
    }
    let l = &r.link;
    let _ = writeln!(
        out,
        "link: sent {} delivered {} lost {} corrupted {} duplicate {} reordered {} late {}",
        l.sent, l.delivered, l.lost, l.corrupted_dropped, l.duplicate_dropped, l.reordered, l.late_dropped
    );
    if let Some(o) = l.overhead() {
        let _ = writeln!(out, "link overhead: {o:.2} bytes/event");
    }
    let _ = writeln!(
        out,
        "routing: {} delivered, {} dropped by gates; {} control points, {} without a pitch hand",
        r.routed_delivered, r.routed_dropped, r.control_points, r.missing_pitch_hand
    );
    let _ = writeln!(out, "latency (virtual):");
    let lat = &r.latency;
    for (name, s) in [
        ("sensor", &lat.sensor),
        ("tracker", &lat.tracker),
        ("link", &lat.link),
        ("orchestrator", &lat.orchestrator),
        ("synth", &lat.synth),
        ("end-to-end", &lat.end_to_end),
    ] {
        latency_line(&mut out, name, s);
    }
    let e = &r.solo_pitch_error_cents;
    let _ = writeln!(out, "solo pitch error: mean {:.4} max {:.4} cents over {}", e.mean, e.max, e.n);
    let e = &r.duet_pitch_error_cents;
    let _ = writeln!(out, "duet pitch error: mean {:.3} max {:.3} cents over {}", e.mean, e.max, e.n);
    let t = &r.tracking_error_px;
    let _ = writeln!(out, "tracking error: mean {:.3} max {:.3} px", t.mean, t.max);
    let _ = writeln!(
        out,
        "duet bound: {:.3} cents/px x {:.3} px + 1 = {:.3} cents ({})",
        r.cents_per_pixel,
        t.mean,
        r.duet_error_bound_cents,
        if r.duet_within_bound() { "met" } else { "exceeded" }
    );
    for c in &r.calibrations {
        match c.fitted {
            Some(f) => {
                let _ = writeln!(
                    out,
                    "calibration at {} ms: d_ref {:.4} m, s {:.4} m/oct, rms {:.2} cents over {}",
                    c.start_us / 1000,
                    f.d_ref,
                    f.s,
                    c.rms_cents,
                    c.samples
                );
            }
            None => {
                let _ = writeln!(out, "calibration at {} ms: no fit ({} samples)", c.start_us / 1000, c.samples);
            }
        }
    }
    let en = &r.energy;
    let _ = writeln!(
        out,
        "energy estimate: tracker active {:.3} s, edge {:.6} J, gpu {:.3}-{:.3} J, cluster/board power ratio {:.2}-{:.2}",
        en.tracker_active_s, en.edge_tracker_j, en.gpu_alt_j_min, en.gpu_alt_j_max, en.power_ratio_min, en.power_ratio_max
    );
    if let Some(w) = r.wall {
        let flag = if w.sub_real_time() { " (sub-real-time)" } else { "" };
        let _ = writeln!(out, "wall {:.3} s, rtf {:.2}{flag}", w.wall_s, w.rtf);
    }
    out
}

/// One `key=value` line per scalar, fixed precision.
pub fn report_kv(r: &RunReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("seed", r.seed.to_string());
    kv("sim_time_us", r.sim_time_us.to_string());
    kv("windows", r.windows.to_string());
    kv("tracker_steps", r.tracker_steps.to_string());
    kv("sensor_events", r.sensor_events.to_string());
    kv("noise_events", r.noise_events.to_string());
    kv("final_state", r.trace.last().map_or("Idle".into(), |e| format!("{:?}", e.state)));
    let l = &r.link;
    kv("link.sent", l.sent.to_string());
    kv("link.delivered", l.delivered.to_string());
    kv("link.lost", l.lost.to_string());
    kv("link.corrupted_dropped", l.corrupted_dropped.to_string());
    kv("link.duplicate_dropped", l.duplicate_dropped.to_string());
    kv("link.reordered", l.reordered.to_string());
    kv("link.late_dropped", l.late_dropped.to_string());
    kv("link.bytes_sent", l.bytes_sent.to_string());
    kv("link.events_sent", l.events_sent.to_string());
    kv("routed.delivered", r.routed_delivered.to_string());
    kv("routed.dropped", r.routed_dropped.to_string());
    kv("control_points", r.control_points.to_string());
    kv("missing_pitch_hand", r.missing_pitch_hand.to_string());
    let lat = &r.latency;
    for (name, s) in [
        ("sensor", &lat.sensor),
        ("tracker", &lat.tracker),
        ("link", &lat.link),
        ("orchestrator", &lat.orchestrator),
        ("synth", &lat.synth),
        ("end_to_end", &lat.end_to_end),
    ] {
        kv(&format!("latency.{name}.mean_us"), format!("{:.3}", s.mean_us()));
        kv(&format!("latency.{name}.max_us"), s.max_us.to_string());
    }
    for (name, e) in [
        ("solo_pitch_error_cents", &r.solo_pitch_error_cents),
        ("duet_pitch_error_cents", &r.duet_pitch_error_cents),
        ("tracking_error_px", &r.tracking_error_px),
    ] {
        kv(&format!("{name}.n"), e.n.to_string());
        kv(&format!("{name}.mean"), format!("{:.6}", e.mean));
        kv(&format!("{name}.max"), format!("{:.6}", e.max));
    }
    kv("cents_per_pixel", format!("{:.6}", r.cents_per_pixel));
    kv("duet_error_bound_cents", format!("{:.6}", r.duet_error_bound_cents));
    kv("duet_within_bound", r.duet_within_bound().to_string());
    kv(
        "detector_spikes",
        r.detector_spikes.map_or("none".into(), |s| s.to_string()),
    );
    let en = &r.energy;
    kv("energy.tracker_active_s", format!("{:.6}", en.tracker_active_s));
    kv("energy.edge_tracker_j", format!("{:.9}", en.edge_tracker_j));
    kv("energy.gpu_alt_j_min", format!("{:.6}", en.gpu_alt_j_min));
    kv("energy.gpu_alt_j_max", format!("{:.6}", en.gpu_alt_j_max));
    kv("energy.power_ratio_min", format!("{:.2}", en.power_ratio_min));
    kv("energy.power_ratio_max", format!("{:.2}", en.power_ratio_max));
    if let Some(w) = r.wall {
        kv("wall_s", format!("{:.6}", w.wall_s));
        kv("rtf", format!("{:.3}", w.rtf));
        kv("sub_real_time", w.sub_real_time().to_string());
    }
    out
}
