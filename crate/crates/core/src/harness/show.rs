//! The show pipeline as three sequential stages joined by ordered queues:
//! sensor + tracker, link, and receiver + orchestrator + synth. Each stage
//! sees a tick per window, so a single-threaded run and a threaded run feed
//! every stage the same input sequence.

use super::report::{CalibrationFit, EnergyReport, ErrorStats, LatencyReport, RunReport, WallClock};
use super::{sub_seed, HarnessError, SimConfig};
use crate::aer::{safe_decode, Channel, Delivery, LinkStats, Packet, Profile, Receiver, SafeFrame, SafeRecord, SafeSender};
use crate::event::{inject_noise, synth_hand_events, EventStream, HandId, SynthParams, Trajectory, TrajectorySample, Unit};
use crate::orchestrator::{
    control_signals, parse_scenario, replay, route_messages, FsmState, Intention, Module, Route, RoutingTable,
    ScenarioStep, ShowState, TraceEntry,
};
use crate::theremin::{
    calibrate_pitch, calibration_residual, cents, hands_to_control, parse_score, score_to_trajectory, Score, ThereminError,
};
use crate::tracker::{HandEstimate, HandLabel, TrackedHand, Tracker};
use std::path::Path;
use std::sync::mpsc::sync_channel;
use std::time::Instant;

const SAMPLE_STEP_US: u64 = 5_000;
const SWEEP_PERIOD_US: u64 = 500_000;
const CALIBRATION_US: u64 = 2_000_000;
const QUEUE_DEPTH: usize = 64;
const XY_SCALE: f64 = 64.0;
const CONFIDENCE_SCALE: f64 = 10_000.0;

/// Stretch of virtual time spent in one show state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub state: ShowState,
    pub start_us: u64,
    pub end_us: u64,
}

/// What happens on stage during a segment. The score restarts at every
/// Solo, Duet or Teaching entry and stops early if the state changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Performance {
    pub state: ShowState,
    pub start_us: u64,
    pub end_us: u64,
    /// Performer hand paths in absolute time, or the robot's for Solo.
    pub trajectory: Trajectory,
}

impl Performance {
    fn contains(&self, t0: u64, t1: u64) -> bool {
        self.start_us <= t0 && t1 <= self.end_us
    }

    fn human(&self) -> bool {
        self.state != ShowState::Solo
    }
}

/// Conversation, a duet of the whole score, then done.
pub fn default_scenario(score_us: u64) -> Vec<ScenarioStep> {
    let duet_ms = 100;
    vec![
        ScenarioStep {
            t_ms: 0,
            intent: Intention::StartConversation,
        },
        ScenarioStep {
            t_ms: duet_ms,
            intent: Intention::AskDuet,
        },
        ScenarioStep {
            t_ms: duet_ms + score_us.div_ceil(1000) + 100,
            intent: Intention::Done,
        },
    ]
}

fn tri(t: u64, period: u64) -> f64 {
    let p = (t % period) as f64 / period as f64;
    if p < 0.25 {
        4.0 * p
    } else if p < 0.75 {
        2.0 - 4.0 * p
    } else {
        4.0 * p - 4.0
    }
}

struct Plan {
    trace: Vec<TraceEntry>,
    segments: Vec<Segment>,
    performances: Vec<Performance>,
    end_us: u64,
}

impl Plan {
    fn state_at(&self, t: u64) -> ShowState {
        let i = self.segments.partition_point(|s| s.start_us <= t);
        if i == 0 {
            ShowState::Idle
        } else {
            self.segments[i - 1].state
        }
    }

    fn performance(&self, state: ShowState, t0: u64, t1: u64) -> Option<&Performance> {
        self.performances.iter().find(|p| p.state == state && p.contains(t0, t1))
    }
}

fn plan(cfg: &SimConfig, steps: &[ScenarioStep], score: &Score) -> Result<Plan, HarnessError> {
    let window = cfg.tracker.window_us;
    let score_us = score.duration_us(cfg.tempo);
    let trace = replay(FsmState::default(), steps);
    let mut segments = vec![Segment {
        state: ShowState::Idle,
        start_us: 0,
        end_us: 0,
    }];
    for e in &trace {
        let t = e.t_ms * 1000;
        let cur = segments.last_mut().expect("non-empty");
        if e.state != cur.state {
            if cur.start_us == t {
                cur.state = e.state;
            } else {
                segments.push(Segment {
                    state: e.state,
                    start_us: t,
                    end_us: 0,
                });
            }
        }
    }
    let natural = |s: &Segment| match s.state {
        ShowState::Solo | ShowState::Duet | ShowState::Teaching => s.start_us + score_us,
        ShowState::Calibrating => s.start_us + CALIBRATION_US,
        _ => s.start_us,
    };
    let last = segments.last().expect("non-empty");
    let horizon = steps.last().map_or(0, |s| s.t_ms * 1000).max(natural(last)) + window;
    let end_us = horizon.div_ceil(window) * window;
    for i in 0..segments.len() {
        segments[i].end_us = segments.get(i + 1).map_or(end_us, |n| n.start_us);
    }

    let robot = score_to_trajectory(score, &cfg.calibration, &cfg.geometry, cfg.tempo, cfg.ramp_ms)?;
    let mut performances = Vec::new();
    for s in &segments {
        let end = natural(s).min(s.end_us);
        if end <= s.start_us {
            continue;
        }
        let trajectory = match s.state {
            ShowState::Solo => shift(&robot, s.start_us, end, None),
            ShowState::Duet | ShowState::Teaching => shift(&robot, s.start_us, end, Some(cfg)),
            ShowState::Calibrating => sweep(cfg, s.start_us, end),
            _ => continue,
        };
        performances.push(Performance {
            state: s.state,
            start_us: s.start_us,
            end_us: end,
            trajectory: trajectory?,
        });
    }
    Ok(Plan {
        trace,
        segments,
        performances,
        end_us,
    })
}

/// `base` replayed from `start` until `end`, with the performer's bob when
/// `bob` is given: the pitch hand moves vertically, the volume hand
/// horizontally, so neither disturbs its own control axis.
fn shift(base: &Trajectory, start: u64, end: u64, bob: Option<&SimConfig>) -> Result<Trajectory, HarnessError> {
    let len = end - start;
    let mut times: Vec<u64> = (0..=len / SAMPLE_STEP_US).map(|k| k * SAMPLE_STEP_US).collect();
    times.extend(base.samples().iter().map(|s| s.t).filter(|&t| t <= len));
    times.push(len);
    times.sort_unstable();
    times.dedup();
    let mut samples = Vec::with_capacity(times.len() * 2);
    for t in times {
        let b = bob.map_or(0.0, |c| c.bob.amplitude_px * tri(t, c.bob.period_ms * 1000));
        for hand in base.hands() {
            let Some((x, y)) = base.position(hand, t) else {
                continue;
            };
            let (x, y) = match hand {
                HandId::Left => (x, y + b),
                HandId::Right => (x + b, y),
            };
            samples.push(TrajectorySample {
                t: start + t,
                hand,
                x,
                y,
            });
        }
    }
    Ok(Trajectory::new(Unit::Pixels, samples)?)
}

/// Calibration gesture: the pitch hand sweeps between the columns of the
/// reference note and its octave while the volume hand bobs at full volume.
fn sweep(cfg: &SimConfig, start: u64, end: u64) -> Result<Trajectory, HarnessError> {
    let (cal, geom) = (&cfg.calibration, &cfg.geometry);
    let lo = geom.pitch_column(cal.distance_for(cal.f_ref * 2.0));
    let hi = geom.pitch_column(cal.distance_for(cal.f_ref));
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let vol_y = geom.volume_row(geom.h_max);
    let mut samples = Vec::new();
    let mut t = start;
    loop {
        let rel = t - start;
        samples.push(TrajectorySample {
            t,
            hand: HandId::Left,
            x: mid + half * tri(rel, SWEEP_PERIOD_US),
            y: geom.pitch_hand_y,
        });
        samples.push(TrajectorySample {
            t,
            hand: HandId::Right,
            x: geom.volume_hand_x + cfg.bob.amplitude_px * tri(rel, cfg.bob.period_ms * 1000),
            y: vol_y,
        });
        if t >= end {
            break;
        }
        t = (t + SAMPLE_STEP_US).min(end);
    }
    Ok(Trajectory::new(Unit::Pixels, samples)?)
}

fn hand_index(label: HandLabel) -> u32 {
    match label {
        HandLabel::PitchHand => 0,
        HandLabel::VolumeHand => 1,
    }
}

fn quantize(v: f64, scale: f64) -> i16 {
    (v * scale).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Three records per hand: x and y in 1/64 px, confidence in 1/10000.
fn estimate_records(est: &HandEstimate) -> Vec<SafeRecord> {
    let mut out = Vec::with_capacity(est.hands.len() * 3);
    for h in &est.hands {
        let base = hand_index(h.label) * 3;
        for (k, value) in [
            quantize(h.x, XY_SCALE),
            quantize(h.y, XY_SCALE),
            quantize(h.confidence, CONFIDENCE_SCALE),
        ]
        .into_iter()
        .enumerate()
        {
            out.push(SafeRecord {
                address: base + k as u32,
                value,
                dt_offset: 0,
            });
        }
    }
    out
}

fn decode_estimate(frame: &SafeFrame) -> Result<HandEstimate, HarnessError> {
    let mut fields: [[Option<i16>; 3]; 2] = [[None; 3]; 2];
    for r in &frame.records {
        let (hand, k) = ((r.address / 3) as usize, (r.address % 3) as usize);
        if hand > 1 {
            return Err(HarnessError::stage("orchestrator", format!("unknown hand address {}", r.address)));
        }
        fields[hand][k] = Some(r.value);
    }
    let mut hands = Vec::new();
    for (i, label) in [HandLabel::PitchHand, HandLabel::VolumeHand].into_iter().enumerate() {
        match fields[i] {
            [Some(x), Some(y), Some(c)] => hands.push(TrackedHand {
                label,
                x: x as f64 / XY_SCALE,
                y: y as f64 / XY_SCALE,
                confidence: c as f64 / CONFIDENCE_SCALE,
            }),
            [None, None, None] => {}
            _ => return Err(HarnessError::stage("orchestrator", "incomplete hand record")),
        }
    }
    Ok(HandEstimate { t: frame.timestamp, hands })
}

#[derive(Debug, Clone, Copy, Default)]
struct SensorSummary {
    frames: u64,
    bytes: u64,
    records: u64,
    tracker_steps: u64,
    active_windows: u64,
    detector_spikes: Option<u64>,
}

enum Up {
    Packet(Packet),
    Tick(u64),
    End(SensorSummary),
}

enum Down {
    Delivery(Delivery),
    Tick(u64),
    End(SensorSummary),
}

/// Sensor and tracker: windows the event stream, tracks while the tracker
/// gate is on and ships every estimate as one SAFE frame.
struct SensorStage<'a> {
    cfg: &'a SimConfig,
    plan: &'a Plan,
    events: &'a EventStream,
    tracker: Option<Tracker>,
    sender: SafeSender,
    summary: SensorSummary,
}

impl<'a> SensorStage<'a> {
    fn new(cfg: &'a SimConfig, plan: &'a Plan, events: &'a EventStream) -> Self {
        SensorStage {
            cfg,
            plan,
            events,
            tracker: None,
            sender: SafeSender::new(),
            summary: SensorSummary::default(),
        }
    }

    fn retire(&mut self) {
        if let Some(t) = self.tracker.take() {
            self.summary.tracker_steps += t.steps();
            if let Some(s) = t.detector_spikes() {
                *self.summary.detector_spikes.get_or_insert(0) += s;
            }
        }
    }

    fn window(&mut self, w: u64) -> Result<Vec<Up>, HarnessError> {
        let win = self.cfg.tracker.window_us;
        let (t0, t1) = (w * win, (w + 1) * win);
        let gate = control_signals(self.plan.state_at(t0)).is_on(Module::Tracker);
        let mut out = Vec::with_capacity(2);
        if gate {
            // a fresh field each time the tracker is switched on
            if self.tracker.is_none() {
                self.tracker = Some(Tracker::new(self.cfg.tracker.clone())?);
            }
            let tracker = self.tracker.as_mut().expect("just created");
            let est = tracker.track_step(self.events.window(t0, t1), t0)?;
            let bytes = self.sender.send(est.t, estimate_records(&est))?;
            self.summary.active_windows += 1;
            out.push(Up::Packet(Packet {
                t_us: t1 + self.cfg.costs.sensor_us + self.cfg.costs.tracker_us,
                bytes,
            }));
        } else {
            self.retire();
        }
        out.push(Up::Tick(w));
        Ok(out)
    }

    fn finish(mut self) -> SensorSummary {
        self.retire();
        self.summary.frames = self.sender.frames_sent;
        self.summary.bytes = self.sender.bytes_sent;
        self.summary.records = self.sender.events_sent;
        self.summary
    }
}

struct LinkStage {
    channel: Channel,
}

impl LinkStage {
    fn feed(&mut self, msg: Up) -> Vec<Down> {
        match msg {
            Up::Packet(p) => self.channel.push(&p).into_iter().map(Down::Delivery).collect(),
            Up::Tick(w) => vec![Down::Tick(w)],
            Up::End(s) => {
                let mut out: Vec<Down> = self.channel.finish().into_iter().map(Down::Delivery).collect();
                out.push(Down::End(s));
                out
            }
        }
    }
}

/// Receiver, orchestrator and synth.
struct ControlStage<'a> {
    cfg: &'a SimConfig,
    plan: &'a Plan,
    score: &'a Score,
    table: RoutingTable,
    receiver: Receiver,
    now: u64,
    latency: LatencyReport,
    routed_delivered: u64,
    routed_dropped: u64,
    control_points: u64,
    missing_pitch_hand: u64,
    solo: ErrorStats,
    duet: ErrorStats,
    tracking: ErrorStats,
    calibration: Vec<(u64, Vec<(f64, f64)>)>,
    summary: Option<SensorSummary>,
    link: LinkStats,
}

impl<'a> ControlStage<'a> {
    fn new(cfg: &'a SimConfig, plan: &'a Plan, score: &'a Score) -> Self {
        ControlStage {
            cfg,
            plan,
            score,
            table: RoutingTable::default(),
            receiver: Receiver::new(cfg.reorder_window),
            now: 0,
            latency: LatencyReport::default(),
            routed_delivered: 0,
            routed_dropped: 0,
            control_points: 0,
            missing_pitch_hand: 0,
            solo: ErrorStats::default(),
            duet: ErrorStats::default(),
            tracking: ErrorStats::default(),
            calibration: Vec::new(),
            summary: None,
            link: LinkStats::default(),
        }
    }

    fn feed(&mut self, msg: Down) -> Result<(), HarnessError> {
        match msg {
            Down::Delivery(d) => {
                self.now = self.now.max(d.t_us);
                let released = match safe_decode(&d.bytes) {
                    Ok(f) => self.receiver.ingest(f),
                    Err(_) => self.receiver.ingest_bytes(&d.bytes),
                };
                for f in released {
                    self.on_frame(&f)?;
                }
            }
            Down::Tick(w) => self.on_tick(w)?,
            Down::End(s) => {
                let total = u32::try_from(s.frames).map_err(|_| HarnessError::stage("link", "sequence space exhausted"))?;
                for f in self.receiver.finish(total) {
                    self.on_frame(&f)?;
                }
                self.link = LinkStats {
                    sent: s.frames,
                    bytes_sent: s.bytes,
                    events_sent: s.records,
                    ..self.receiver.stats()
                };
                self.summary = Some(s);
            }
        }
        Ok(())
    }

    /// Note sounding over the whole of `[t0, t1)` once its glide is over,
    /// relative to the performance start.
    fn settled_note(&self, perf: &Performance, t0: u64, t1: u64) -> Option<f64> {
        let ramp = (self.cfg.ramp_ms * 1000.0) as u64;
        let (r0, r1) = (t0 - perf.start_us, t1 - perf.start_us);
        self.score
            .spans(self.cfg.tempo)
            .iter()
            .enumerate()
            .find(|(i, s)| {
                let glide = if *i == 0 { 0 } else { ramp.min((s.end - s.start) / 2) };
                s.start + glide <= r0 && r1 <= s.end
            })
            .map(|(_, s)| s.freq)
    }

    fn on_tick(&mut self, w: u64) -> Result<(), HarnessError> {
        let win = self.cfg.tracker.window_us;
        let (t0, t1) = (w * win, (w + 1) * win);
        if self.plan.state_at(t0) != ShowState::Solo {
            return Ok(());
        }
        let Some(perf) = self.plan.performance(ShowState::Solo, t0, t1) else {
            return Ok(());
        };
        let mid = (t0 + t1) / 2;
        let (x, _) = perf
            .trajectory
            .position(HandId::Left, mid)
            .ok_or_else(|| HarnessError::stage("synth", "robot trajectory has no pitch hand"))?;
        let freq = self.cfg.calibration.freq_at(self.cfg.geometry.pitch_distance(x));
        self.control_points += 1;
        if let Some(target) = self.settled_note(perf, t0, t1) {
            self.solo.add(cents(freq, target));
        }
        Ok(())
    }

    fn on_frame(&mut self, frame: &SafeFrame) -> Result<(), HarnessError> {
        let est = decode_estimate(frame)?;
        let state = self.plan.state_at(self.now);
        let signals = control_signals(state);
        let to_synth = Route::new(Module::Tracker, Module::ThereminSynth);
        let inbox = [(to_synth, ()), (Route::new(Module::Tracker, Module::GuiDuet), ())];
        let routed = route_messages(&signals, &self.table, &inbox)?;
        self.routed_delivered += routed.delivered.len() as u64;
        self.routed_dropped += routed.dropped as u64;
        if !routed.delivered.iter().any(|(r, _)| *r == to_synth) {
            return Ok(());
        }

        let costs = &self.cfg.costs;
        let sent = est.t + costs.sensor_us + costs.tracker_us;
        let link = self.now - sent;
        let lat = &mut self.latency;
        lat.sensor.add(costs.sensor_us);
        lat.tracker.add(costs.tracker_us);
        lat.link.add(link);
        lat.orchestrator.add(costs.orchestrator_us);
        lat.synth.add(costs.synth_us);
        lat.end_to_end
            .add(costs.sensor_us + costs.tracker_us + link + costs.orchestrator_us + costs.synth_us);

        let point = match hands_to_control(&est, &self.cfg.calibration, &self.cfg.geometry) {
            Ok(p) => p,
            Err(ThereminError::MissingPitchHand) => {
                self.missing_pitch_hand += 1;
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        self.control_points += 1;
        let pitch = est.hand(HandLabel::PitchHand).expect("control point implies a pitch hand");
        let (t1, t0) = (est.t, est.t.saturating_sub(self.cfg.tracker.window_us));
        let mid = (t0 + t1) / 2;
        match state {
            ShowState::Duet => {
                let Some(perf) = self.plan.performance(ShowState::Duet, t0, t1) else {
                    return Ok(());
                };
                let Some(target) = self.settled_note(perf, t0, t1) else {
                    return Ok(());
                };
                let (tx, ty) = perf
                    .trajectory
                    .position(HandId::Left, mid)
                    .ok_or_else(|| HarnessError::stage("synth", "performer has no pitch hand"))?;
                self.duet.add(cents(point.freq, target));
                self.tracking.add((pitch.x - tx).hypot(pitch.y - ty));
            }
            ShowState::Calibrating => {
                let Some(perf) = self.plan.performance(ShowState::Calibrating, t0, t1) else {
                    return Ok(());
                };
                let (tx, _) = perf
                    .trajectory
                    .position(HandId::Left, mid)
                    .ok_or_else(|| HarnessError::stage("synth", "performer has no pitch hand"))?;
                let geom = &self.cfg.geometry;
                let heard = self.cfg.calibration.freq_at(geom.pitch_distance(tx));
                let sample = (geom.pitch_distance(pitch.x), heard);
                match self.calibration.last_mut() {
                    Some((start, v)) if *start == perf.start_us => v.push(sample),
                    _ => self.calibration.push((perf.start_us, vec![sample])),
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn report(self, plan: &Plan, sensor_events: u64, noise_events: u64) -> Result<RunReport, HarnessError> {
        let summary = self
            .summary
            .ok_or_else(|| HarnessError::stage("link", "stream ended without a summary"))?;
        let cfg = self.cfg;
        let mut calibrations: Vec<CalibrationFit> = plan
            .performances
            .iter()
            .filter(|p| p.state == ShowState::Calibrating)
            .map(|p| CalibrationFit {
                start_us: p.start_us,
                samples: 0,
                fitted: None,
                rms_cents: 0.0,
            })
            .collect();
        for (start, samples) in &self.calibration {
            let Some(c) = calibrations.iter_mut().find(|c| c.start_us == *start) else {
                continue;
            };
            c.samples = samples.len() as u64;
            if let Ok(fit) = calibrate_pitch(samples, cfg.calibration.f_ref) {
                c.rms_cents = 1200.0 * (calibration_residual(&fit, samples) / samples.len() as f64).sqrt();
                c.fitted = Some(fit);
            }
        }
        let cents_per_pixel = cfg.geometry.cents_per_pixel(&cfg.calibration);
        let active_s = (summary.active_windows * cfg.tracker.window_us) as f64 / 1e6;
        Ok(RunReport {
            seed: cfg.seed,
            sim_time_us: plan.end_us,
            windows: plan.end_us / cfg.tracker.window_us,
            tracker_steps: summary.tracker_steps,
            sensor_events,
            noise_events,
            trace: plan.trace.clone(),
            link: self.link,
            routed_delivered: self.routed_delivered,
            routed_dropped: self.routed_dropped,
            control_points: self.control_points,
            missing_pitch_hand: self.missing_pitch_hand,
            latency: self.latency,
            solo_pitch_error_cents: self.solo,
            duet_pitch_error_cents: self.duet,
            tracking_error_px: self.tracking,
            cents_per_pixel,
            duet_error_bound_cents: cents_per_pixel * self.tracking.mean + 1.0,
            calibrations,
            detector_spikes: summary.detector_spikes,
            energy: EnergyReport::estimate(&cfg.energy, active_s)?,
            wall: None,
        })
    }
}

fn performer_events(cfg: &SimConfig, plan: &Plan) -> Result<(EventStream, u64), HarnessError> {
    let res = cfg.tracker.input_res;
    let mut events = Vec::new();
    for (k, p) in plan.performances.iter().enumerate().filter(|(_, p)| p.human()) {
        let params = SynthParams::new(res, cfg.blob_radius, sub_seed(cfg.seed, 1 + k as u64));
        events.extend(synth_hand_events(&p.trajectory, &params)?.events);
    }
    let clean = EventStream::from_events(res, events)?;
    let stream = inject_noise(&clean, cfg.noise_fraction, sub_seed(cfg.seed, 0x4E4F_4953));
    let noise = (stream.len() - clean.len()) as u64;
    Ok((stream, noise))
}

/// Runs the show for already-loaded inputs. The report's wall-clock field
/// is left empty.
pub fn run_show_with(cfg: &SimConfig, steps: &[ScenarioStep], score: &Score) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    score.validate()?;
    let plan = plan(cfg, steps, score)?;
    let (events, noise) = performer_events(cfg, &plan)?;
    let mut link_cfg = cfg.channel;
    link_cfg.seed = sub_seed(cfg.seed, 0x4C49_4E4B ^ cfg.channel.seed);
    let channel = Channel::new(link_cfg, Profile::Safe)?;
    let windows = plan.end_us / cfg.tracker.window_us;

    let mut sensor = SensorStage::new(cfg, &plan, &events);
    let mut link = LinkStage { channel };
    let mut control = ControlStage::new(cfg, &plan, score);

    if cfg.threaded {
        std::thread::scope(|scope| -> Result<(), HarnessError> {
            let (up_tx, up_rx) = sync_channel::<Up>(QUEUE_DEPTH);
            let (down_tx, down_rx) = sync_channel::<Down>(QUEUE_DEPTH);
            let a = scope.spawn(move || -> Result<(), HarnessError> {
                for w in 0..windows {
                    for m in sensor.window(w)? {
                        if up_tx.send(m).is_err() {
                            return Ok(());
                        }
                    }
                }
                let _ = up_tx.send(Up::End(sensor.finish()));
                Ok(())
            });
            let b = scope.spawn(move || {
                for m in up_rx {
                    for d in link.feed(m) {
                        if down_tx.send(d).is_err() {
                            return;
                        }
                    }
                }
            });
            let mut result = Ok(());
            for d in down_rx {
                if let Err(e) = control.feed(d) {
                    result = Err(e);
                    break;
                }
            }
            let a = a.join().map_err(|_| HarnessError::stage("sensor", "thread panicked"))?;
            b.join().map_err(|_| HarnessError::stage("link", "thread panicked"))?;
            a.and(result)
        })?;
    } else {
        for w in 0..windows {
            for m in sensor.window(w)? {
                for d in link.feed(m) {
                    control.feed(d)?;
                }
            }
        }
        for d in link.feed(Up::End(sensor.finish())) {
            control.feed(d)?;
        }
    }
    let sensor_events = events.len() as u64 - noise;
    control.report(&plan, sensor_events, noise)
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Loads the scenario and score named in `cfg` (or the defaults), runs the
/// show and records wall-clock time.
pub fn run_show(cfg: &SimConfig) -> Result<RunReport, HarnessError> {
    let score = match &cfg.score {
        Some(p) => parse_score(&read(p)?).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?,
        None => Score::c_major_scale(400),
    };
    let steps = match &cfg.scenario {
        Some(p) => parse_scenario(&read(p)?).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?,
        None => default_scenario(score.duration_us(cfg.tempo)),
    };
    let started = Instant::now();
    let mut report = run_show_with(cfg, &steps, &score)?;
    let wall = started.elapsed().as_secs_f64();
    if wall > 0.0 {
        report.wall = Some(WallClock::new(report.sim_time_s(), wall)?);
    }
    Ok(report)
}
