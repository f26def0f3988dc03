//! Synthetic hand events with known ground truth.
//!
//! Each hand is rendered as an anti-aliased bright disk on a dark background.
//! The scene is re-rendered every micro-step and a pixel fires when its
//! luminance changed by at least the contrast threshold since the previous
//! micro-step. Polarity follows the sign of the change.

use super::{Event, EventError, EventStream, Polarity, Resolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HandId {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Pixels,
    Meters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: u64,
    pub hand: HandId,
    pub x: f64,
    pub y: f64,
}

/// Piecewise-linear hand paths. Samples are kept sorted by time; each hand's
/// timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub unit: Unit,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(unit: Unit, mut samples: Vec<TrajectorySample>) -> Result<Self, EventError> {
        samples.sort_by_key(|s| (s.t, s.hand));
        for hand in [HandId::Left, HandId::Right] {
            let mut last: Option<u64> = None;
            for s in samples.iter().filter(|s| s.hand == hand) {
                if !s.x.is_finite() || !s.y.is_finite() {
                    return Err(EventError::Trajectory(format!("non-finite position at t={}", s.t)));
                }
                if last.is_some_and(|l| l >= s.t) {
                    return Err(EventError::Trajectory(format!(
                        "{hand:?} timestamps not strictly increasing at t={}",
                        s.t
                    )));
                }
                last = Some(s.t);
            }
        }
        Ok(Trajectory { unit, samples })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn hands(&self) -> Vec<HandId> {
        let mut h: Vec<HandId> = self.samples.iter().map(|s| s.hand).collect();
        h.sort();
        h.dedup();
        h
    }

    pub fn span(&self) -> Option<(u64, u64)> {
        Some((self.samples.first()?.t, self.samples.last()?.t))
    }

    /// Linear interpolation of one hand's path; holds the end points outside
    /// the sampled span.
    pub fn position(&self, hand: HandId, t: u64) -> Option<(f64, f64)> {
        let mut prev: Option<&TrajectorySample> = None;
        for s in self.samples.iter().filter(|s| s.hand == hand) {
            if s.t >= t {
                return Some(match prev {
                    Some(p) if s.t > t => {
                        let a = (t - p.t) as f64 / (s.t - p.t) as f64;
                        (p.x + a * (s.x - p.x), p.y + a * (s.y - p.y))
                    }
                    _ => (s.x, s.y),
                });
            }
            prev = Some(s);
        }
        prev.map(|p| (p.x, p.y))
    }

    /// Maps every sample through `f`, e.g. a meters → pixels conversion.
    pub fn map(&self, unit: Unit, f: impl Fn(HandId, f64, f64) -> (f64, f64)) -> Trajectory {
        Trajectory {
            unit,
            samples: self
                .samples
                .iter()
                .map(|s| {
                    let (x, y) = f(s.hand, s.x, s.y);
                    TrajectorySample { x, y, ..*s }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub resolution: Resolution,
    pub blob_radius: f64,
    pub contrast_threshold: f64,
    /// Expected events per threshold crossing.
    pub rate_scale: f64,
    pub micro_step_us: u64,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(resolution: Resolution, blob_radius: f64, seed: u64) -> Self {
        SynthParams {
            resolution,
            blob_radius,
            contrast_threshold: 0.15,
            rate_scale: 1.0,
            micro_step_us: 1000,
            seed,
        }
    }
}

fn coverage(px: f64, py: f64, cx: f64, cy: f64, r: f64) -> f64 {
    let d = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
    (r + 0.5 - d).clamp(0.0, 1.0)
}

struct Scene {
    res: Resolution,
    luminance: Vec<f64>,
}

impl Scene {
    fn render(res: Resolution, centers: &[(f64, f64)], r: f64) -> Scene {
        let mut luminance = vec![0.0f64; res.cells()];
        for &(cx, cy) in centers {
            let (x0, x1) = span(cx, r, res.width);
            let (y0, y1) = span(cy, r, res.height);
            for y in y0..y1 {
                for x in x0..x1 {
                    let c = coverage(x as f64, y as f64, cx, cy, r);
                    let l = &mut luminance[res.index(x, y)];
                    *l = l.max(c);
                }
            }
        }
        Scene { res, luminance }
    }
}

fn span(c: f64, r: f64, limit: u16) -> (u16, u16) {
    let lo = (c - r - 2.0).floor().max(0.0);
    let hi = (c + r + 2.0).ceil().max(0.0).min(limit as f64);
    (lo.min(limit as f64) as u16, hi as u16)
}

/// Generates events for the given trajectories (pixel units). Deterministic
/// for a fixed seed. A trajectory with fewer than two instants or a
/// stationary scene yields an empty stream.
pub fn synth_hand_events(traj: &Trajectory, params: &SynthParams) -> Result<EventStream, EventError> {
    let res = params.resolution.validate()?;
    if traj.unit != Unit::Pixels {
        return Err(EventError::Trajectory("synthesis needs pixel units".into()));
    }
    if !(params.contrast_threshold > 0.0 && params.rate_scale > 0.0 && params.micro_step_us > 0) {
        return Err(EventError::Trajectory("threshold, rate and micro-step must be positive".into()));
    }
    let mut stream = EventStream::new(res);
    let Some((t0, t1)) = traj.span() else {
        return Ok(stream);
    };
    let hands = traj.hands();
    let centers_at = |t: u64| -> Vec<(f64, f64)> { hands.iter().filter_map(|&h| traj.position(h, t)).collect() };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let r = params.blob_radius;
    let mut prev = Scene::render(res, &centers_at(t0), r);
    let mut prev_centers = centers_at(t0);
    let mut t = t0;
    let mut batch: Vec<Event> = Vec::new();
    let mut visited = vec![0u64; res.cells()];
    let mut step = 0u64;
    while t < t1 {
        step += 1;
        let next_t = (t + params.micro_step_us).min(t1);
        let centers = centers_at(next_t);
        if centers != prev_centers {
            let cur = Scene::render(res, &centers, r);
            // only pixels near a blob, old or new, can change
            batch.clear();
            for &(cx, cy) in prev_centers.iter().chain(&centers) {
                let (x0, x1) = span(cx, r, res.width);
                let (y0, y1) = span(cy, r, res.height);
                for y in y0..y1 {
                    for x in x0..x1 {
                        let i = res.index(x, y);
                        if visited[i] == step {
                            continue;
                        }
                        visited[i] = step;
                        let delta = cur.luminance[i] - prev.luminance[i];
                        if delta.abs() < params.contrast_threshold {
                            continue;
                        }
                        let polarity = if delta > 0.0 { Polarity::On } else { Polarity::Off };
                        let expected = params.rate_scale * delta.abs() / params.contrast_threshold;
                        let n = ((expected + rng.gen::<f64>()).floor() as usize).max(1);
                        for _ in 0..n {
                            let et = t + (rng.gen::<f64>() * (next_t - t) as f64) as u64;
                            batch.push(Event::new(et.min(next_t - 1), x, y, polarity));
                        }
                    }
                }
            }
            batch.sort_by_key(|e| (e.t, e.y, e.x));
            stream.events.extend_from_slice(&batch);
            prev = cur;
            prev_centers = centers;
        }
        t = next_t;
    }
    debug_assert_eq!(prev.res, res);
    Ok(stream)
}

/// Adds `round(fraction * len)` uniformly distributed distractor events over
/// the stream's time span.
pub fn inject_noise(stream: &EventStream, fraction: f64, seed: u64) -> EventStream {
    let n = (fraction.max(0.0) * stream.len() as f64).round() as usize;
    let (Some(first), Some(last)) = (stream.events.first(), stream.events.last()) else {
        return stream.clone();
    };
    let (t0, t1) = (first.t, last.t + 1);
    let res = stream.resolution;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = stream.events.clone();
    for _ in 0..n {
        let polarity = if rng.gen::<bool>() { Polarity::On } else { Polarity::Off };
        events.push(Event::new(
            rng.gen_range(t0..t1),
            rng.gen_range(0..res.width),
            rng.gen_range(0..res.height),
            polarity,
        ));
    }
    events.sort_by_key(|e| e.t);
    EventStream { resolution: res, events }
}

/// Two hands waving side to side in antiphase at constant speed (a triangle
/// wave), the left one centered at 30% of the width and the right one at
/// 70%; `amplitude` is in pixels. Constant speed keeps both hands visible to
/// a frame-differencing sensor except at the turning points.
pub fn waving_hands(res: Resolution, duration_us: u64, amplitude: f64, period_us: u64) -> Trajectory {
    let (w, h) = (res.width as f64, res.height as f64);
    let step = 5_000u64;
    let tri = |t: u64| {
        let p = (t % period_us) as f64 / period_us as f64;
        if p < 0.25 {
            4.0 * p
        } else if p < 0.75 {
            2.0 - 4.0 * p
        } else {
            4.0 * p - 4.0
        }
    };
    let mut samples = Vec::new();
    let mut t = 0;
    loop {
        let s = amplitude * tri(t);
        samples.push(TrajectorySample {
            t,
            hand: HandId::Left,
            x: 0.3 * w + s,
            y: 0.52 * h,
        });
        samples.push(TrajectorySample {
            t,
            hand: HandId::Right,
            x: 0.7 * w - s,
            y: 0.48 * h,
        });
        if t >= duration_us {
            break;
        }
        t = (t + step).min(duration_us);
    }
    Trajectory::new(Unit::Pixels, samples).expect("monotone by construction")
}
