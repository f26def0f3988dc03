//! Sequential hand tracking.
//!
//! event window → (depth mask) → frame → downsample to chip resolution →
//! heatmap detector → neural field → peaks → upscale → hand labels.

mod detector;

pub use detector::{blob_heatmap, density_net, detect_heatmap, Detector, HeatmapDetector};

use crate::dnf::{detect_peaks, make_kernel, DnfError, Field, FieldParams, Kernel, KernelParams, Peak};
use crate::event::{mask_events, DepthFrame, Event, EventError, EventStream, Frame, FrameMode, Resolution};
use crate::sigma_delta::SdError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("event stage: {0}")]
    Event(#[from] EventError),
    #[error("field stage: {0}")]
    Field(#[from] DnfError),
    #[error("detector stage: {0}")]
    Detector(#[from] SdError),
    #[error("frame is {got}, detector expects {expected}")]
    WrongResolution { expected: Resolution, got: Resolution },
    #[error("invalid tracker config: {0}")]
    Config(String),
}

/// Which antenna a tracked hand plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HandLabel {
    PitchHand,
    VolumeHand,
}

impl HandLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            HandLabel::PitchHand => "pitch_hand",
            HandLabel::VolumeHand => "volume_hand",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pitch_hand" => Some(HandLabel::PitchHand),
            "volume_hand" => Some(HandLabel::VolumeHand),
            _ => None,
        }
    }
}

impl fmt::Display for HandLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedHand {
    pub label: HandLabel,
    /// Input-resolution pixel coordinates.
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HandEstimate {
    /// End of the accumulation window, µs.
    pub t: u64,
    pub hands: Vec<TrackedHand>,
}

impl HandEstimate {
    pub fn hand(&self, label: HandLabel) -> Option<&TrackedHand> {
        self.hands.iter().find(|h| h.label == label)
    }

    /// `t_us,label,x,y,confidence` lines, one per hand.
    pub fn write_records(&self, out: &mut impl Write) -> std::io::Result<()> {
        for h in &self.hands {
            writeln!(out, "{},{},{:.3},{:.3},{:.6}", self.t, h.label, h.x, h.y, h.confidence)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthGate {
    pub depth: DepthFrame,
    pub near: f32,
    pub far: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub input_res: Resolution,
    pub chip_res: Resolution,
    pub window_us: u64,
    pub detector: Detector,
    pub field: FieldParams,
    pub kernel: KernelParams,
    /// Heatmaps are normalized to a unit maximum, then scaled by this gain
    /// before entering the field.
    pub input_gain: f64,
    pub peak_threshold: f64,
    pub min_separation: f64,
    /// Peaks lighter than this are ignored.
    pub min_mass: f64,
    /// Camera faces the performer: image-left is the pitch hand.
    pub mirror: bool,
    pub confidence_decay: f64,
    pub depth: Option<DepthGate>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            input_res: Resolution::new(240, 180),
            chip_res: Resolution::new(86, 65),
            window_us: 10_000,
            detector: Detector::Blob { sigma: 1.5 },
            field: FieldParams {
                tau: 1.25,
                ..FieldParams::default()
            },
            kernel: KernelParams {
                c_exc: 1.0,
                sigma_exc: 3.0,
                c_inh: 0.5,
                sigma_inh: 6.0,
                g_inh: 0.0,
            },
            input_gain: 20.0,
            peak_threshold: 0.0,
            min_separation: 6.0,
            min_mass: 1.0,
            mirror: true,
            confidence_decay: 0.5,
            depth: None,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        self.input_res.validate()?;
        self.chip_res.validate()?;
        if !self.chip_res.fits_in(self.input_res) {
            return Err(TrackerError::Config(format!(
                "chip {} larger than input {}",
                self.chip_res, self.input_res
            )));
        }
        if self.window_us == 0 {
            return Err(TrackerError::Config("window_us must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.confidence_decay) {
            return Err(TrackerError::Config("confidence_decay must be in [0, 1]".into()));
        }
        if self.peak_threshold <= self.field.h {
            return Err(TrackerError::Config("peak threshold must exceed the resting level".into()));
        }
        self.field.validate()?;
        self.kernel.validate()?;
        Ok(())
    }

    /// Chip cell coordinates → input pixel coordinates (cell centers map to
    /// the center of the source span they collect).
    pub fn upscale(&self, cx: f64, cy: f64) -> (f64, f64) {
        let rx = self.input_res.width as f64 / self.chip_res.width as f64;
        let ry = self.input_res.height as f64 / self.chip_res.height as f64;
        ((cx + 0.5) * rx - 0.5, (cy + 0.5) * ry - 0.5)
    }
}

/// Labels up to two peaks by horizontal position. With `mirror` the
/// image-left peak is the pitch hand; a lone peak is always the pitch hand.
pub fn assign_hands(peaks: &[Peak], mirror: bool) -> Vec<(HandLabel, Peak)> {
    let mut ps: Vec<Peak> = peaks.iter().take(2).copied().collect();
    ps.sort_by(|a, b| a.x.total_cmp(&b.x));
    match ps.as_slice() {
        [] => vec![],
        [p] => vec![(HandLabel::PitchHand, *p)],
        [left, right] => {
            if mirror {
                vec![(HandLabel::PitchHand, *left), (HandLabel::VolumeHand, *right)]
            } else {
                vec![(HandLabel::VolumeHand, *left), (HandLabel::PitchHand, *right)]
            }
        }
        _ => unreachable!(),
    }
}

/// One tracker instance; strictly sequential.
pub struct Tracker {
    cfg: TrackerConfig,
    detector: HeatmapDetector,
    field: Field,
    kernel: Kernel,
    last: HandEstimate,
    heatmap: Vec<f64>,
    input: Vec<f64>,
    chip_frame: Option<Frame>,
    steps: u64,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, TrackerError> {
        cfg.validate()?;
        let kernel = make_kernel(cfg.kernel, cfg.kernel.default_radius())?;
        let field = Field::resting(cfg.chip_res, cfg.field)?;
        let detector = HeatmapDetector::new(&cfg.detector, cfg.chip_res)?;
        Ok(Tracker {
            detector,
            field,
            kernel,
            last: HandEstimate::default(),
            heatmap: vec![0.0; cfg.chip_res.cells()],
            input: vec![0.0; cfg.chip_res.cells()],
            chip_frame: None,
            steps: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Detector output of the latest step, before the field.
    pub fn heatmap(&self) -> &[f64] {
        &self.heatmap
    }

    pub fn chip_frame(&self) -> Option<&Frame> {
        self.chip_frame.as_ref()
    }

    pub fn last_estimate(&self) -> &HandEstimate {
        &self.last
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn detector_spikes(&self) -> Option<u64> {
        self.detector.spike_count()
    }

    /// Processes the events of window `[t0, t0 + window_us)`.
    pub fn track_step(&mut self, events: &[Event], t0: u64) -> Result<HandEstimate, TrackerError> {
        let t1 = t0 + self.cfg.window_us;
        let frame = match &self.cfg.depth {
            Some(gate) => {
                let stream = EventStream {
                    resolution: self.cfg.input_res,
                    events: events.to_vec(),
                };
                let kept = mask_events(&stream, &gate.depth, gate.near, gate.far)?;
                Frame::accumulate(&kept.events, t0, t1, self.cfg.input_res, FrameMode::Unsigned)?
            }
            None => Frame::accumulate(events, t0, t1, self.cfg.input_res, FrameMode::Unsigned)?,
        };
        let chip = frame.downsample(self.cfg.chip_res)?;
        self.heatmap = self.detector.detect(&chip)?;
        let gain = self.cfg.input_gain;
        self.input.clear();
        self.input.extend(self.heatmap.iter().map(|v| v * gain));
        self.field.step(&self.input, &self.kernel)?;
        self.chip_frame = Some(chip);
        self.steps += 1;

        let peaks: Vec<Peak> = detect_peaks(&self.field, self.cfg.peak_threshold, self.cfg.min_separation)
            .into_iter()
            .filter(|p| p.mass >= self.cfg.min_mass)
            .take(2)
            .collect();
        let estimate = HandEstimate {
            t: t1,
            hands: self.label(&peaks),
        };
        self.last = estimate.clone();
        Ok(estimate)
    }

    fn label(&self, peaks: &[Peak]) -> Vec<TrackedHand> {
        let observe = |label: HandLabel, p: &Peak| {
            let (x, y) = self.cfg.upscale(p.x, p.y);
            TrackedHand {
                label,
                x,
                y,
                confidence: self.cfg.field.rate(p.max_activation - self.cfg.peak_threshold),
            }
        };
        let mut assigned: Vec<TrackedHand> = if peaks.len() == 1 && self.last.hands.len() == 2 {
            // keep identities when one of two tracked hands drops out
            let (x, y) = self.cfg.upscale(peaks[0].x, peaks[0].y);
            let nearest = self
                .last
                .hands
                .iter()
                .min_by(|a, b| dist2(a, x, y).total_cmp(&dist2(b, x, y)))
                .map(|h| h.label)
                .unwrap_or(HandLabel::PitchHand);
            vec![observe(nearest, &peaks[0])]
        } else {
            assign_hands(peaks, self.cfg.mirror)
                .iter()
                .map(|(l, p)| observe(*l, p))
                .collect()
        };
        // hold hands that were not observed this step
        for prev in &self.last.hands {
            if assigned.iter().all(|h| h.label != prev.label) {
                assigned.push(TrackedHand {
                    confidence: prev.confidence * self.cfg.confidence_decay,
                    ..*prev
                });
            }
        }
        assigned.sort_by_key(|h| h.label);
        assigned
    }

    /// Runs consecutive windows from `t_start` until `t_end` (exclusive).
    pub fn track_stream(&mut self, stream: &EventStream, t_start: u64, t_end: u64) -> Result<Vec<HandEstimate>, TrackerError> {
        let mut out = Vec::new();
        let mut t = t_start;
        while t < t_end {
            let w = stream.window(t, t + self.cfg.window_us);
            out.push(self.track_step(w, t)?);
            t += self.cfg.window_us;
        }
        Ok(out)
    }

    /// 16-bit overlay of the latest chip frame with the field's peaks
    /// marked at full intensity.
    pub fn overlay_pgm(&self) -> Vec<u8> {
        let res = self.cfg.chip_res;
        let mut img: Vec<f64> = match &self.chip_frame {
            Some(f) => f.to_f64(),
            None => vec![0.0; res.cells()],
        };
        let hi = img.iter().copied().fold(1.0, f64::max);
        for v in img.iter_mut() {
            *v /= hi * 1.25;
        }
        for p in detect_peaks(&self.field, self.cfg.peak_threshold, self.cfg.min_separation) {
            let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
            for d in -2..=2i64 {
                for (x, y) in [(cx + d, cy), (cx, cy + d)] {
                    if x >= 0 && y >= 0 && (x as u16) < res.width && (y as u16) < res.height {
                        img[res.index(x as u16, y as u16)] = 1.0;
                    }
                }
            }
        }
        crate::pgm::encode16(res, &img, 0.0, 1.0)
    }
}

fn dist2(h: &TrackedHand, x: f64, y: f64) -> f64 {
    (h.x - x).powi(2) + (h.y - y).powi(2)
}

#[cfg(test)]
mod tests;
