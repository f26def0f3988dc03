//! Theremin control model.
//!
//! Pitch follows an exponential distance law, `f = f_ref·2^((d_ref − d)/s)`:
//! moving the pitch hand `s` metres closer to the antenna raises the note by
//! one octave. Volume is linear in the height of the other hand above its
//! antenna. Tracker estimates arrive in image pixels and are turned into
//! distances with a fixed pixel→metre scale.

mod calibrate;
mod render;
mod score;

pub use calibrate::{calibrate_pitch, calibration_residual};
pub use render::{render_trace, wav_bytes, write_wav, Vibrato, MIN_SAMPLE_RATE};
pub use score::{parse_score, score_to_trajectory, write_score, Note, NoteSpan, Score, DEFAULT_RAMP_MS};

use crate::tracker::{HandEstimate, HandLabel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThereminError {
    #[error("midi note {0} outside 0..=127")]
    MidiRange(i64),
    #[error("estimate has no pitch hand")]
    MissingPitchHand,
    #[error("{freq} Hz needs pitch distance {d} m, outside the playable range")]
    Unrepresentable { freq: f64, d: f64 },
    #[error("calibration needs at least two distinct distances")]
    Underdetermined,
    #[error("samples do not rise in pitch as the hand approaches")]
    BadSlope,
    #[error("invalid calibration: {0}")]
    BadCalibration(String),
    #[error("invalid score: {0}")]
    BadScore(String),
    #[error("score line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("sample rate {0} below the 8000 Sa/s minimum")]
    SampleRate(u32),
    #[error("io: {0}")]
    Io(String),
}

pub fn note_freq(midi: i64) -> Result<f64, ThereminError> {
    if !(0..=127).contains(&midi) {
        return Err(ThereminError::MidiRange(midi));
    }
    Ok(440.0 * 2f64.powf((midi - 69) as f64 / 12.0))
}

/// Interval from `reference` to `f` in cents.
pub fn cents(f: f64, reference: f64) -> f64 {
    1200.0 * (f / reference).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchCalibration {
    /// Distance producing `f_ref`, metres.
    pub d_ref: f64,
    pub f_ref: f64,
    /// Metres per octave.
    pub s: f64,
}

impl PitchCalibration {
    pub fn validate(&self) -> Result<(), ThereminError> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(ThereminError::BadCalibration(format!("octave distance {}", self.s)));
        }
        if !(self.f_ref > 0.0 && self.f_ref.is_finite()) || !self.d_ref.is_finite() {
            return Err(ThereminError::BadCalibration(format!("reference {} Hz at {} m", self.f_ref, self.d_ref)));
        }
        Ok(())
    }

    pub fn freq_at(&self, d: f64) -> f64 {
        self.f_ref * 2f64.powf((self.d_ref - d) / self.s)
    }

    pub fn distance_for(&self, freq: f64) -> f64 {
        self.d_ref - self.s * (freq / self.f_ref).log2()
    }
}

impl Default for PitchCalibration {
    /// C4 at 40 cm, one octave per 24 cm.
    fn default() -> Self {
        PitchCalibration {
            d_ref: 0.40,
            f_ref: 440.0 * 2f64.powf(-9.0 / 12.0),
            s: 0.24,
        }
    }
}

/// Where the antennas sit in the image and how pixels convert to metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub pixel_to_meter: f64,
    /// Column of the pitch antenna; pitch distance grows to the right of it.
    pub pitch_antenna_x: f64,
    /// Row of the volume antenna; height grows upwards (decreasing row).
    pub volume_antenna_y: f64,
    /// Row at which the synthetic performer holds the pitch hand.
    pub pitch_hand_y: f64,
    /// Column at which the synthetic performer holds the volume hand.
    pub volume_hand_x: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            pixel_to_meter: 0.004,
            pitch_antenna_x: -20.0,
            volume_antenna_y: 150.0,
            pitch_hand_y: 80.0,
            volume_hand_x: 175.0,
            h_min: 0.05,
            h_max: 0.35,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<(), ThereminError> {
        if !(self.pixel_to_meter > 0.0) || !(self.h_max > self.h_min) {
            return Err(ThereminError::BadCalibration("geometry needs a positive scale and h_max > h_min".into()));
        }
        Ok(())
    }

    pub fn pitch_distance(&self, x_px: f64) -> f64 {
        (x_px - self.pitch_antenna_x) * self.pixel_to_meter
    }

    pub fn pitch_column(&self, d: f64) -> f64 {
        self.pitch_antenna_x + d / self.pixel_to_meter
    }

    pub fn volume_height(&self, y_px: f64) -> f64 {
        (self.volume_antenna_y - y_px) * self.pixel_to_meter
    }

    pub fn volume_row(&self, h: f64) -> f64 {
        self.volume_antenna_y - h / self.pixel_to_meter
    }

    pub fn amp(&self, h: f64) -> f64 {
        ((h - self.h_min) / (self.h_max - self.h_min)).clamp(0.0, 1.0)
    }

    /// Pitch sensitivity of a one-pixel error in hand position.
    pub fn cents_per_pixel(&self, cal: &PitchCalibration) -> f64 {
        1200.0 * self.pixel_to_meter / cal.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    /// µs.
    pub t: u64,
    pub freq: f64,
    pub amp: f64,
}

/// Pitch from the pitch hand's distance, loudness from the volume hand's
/// height; without a volume hand the instrument plays at full volume.
pub fn hands_to_control(est: &HandEstimate, cal: &PitchCalibration, geom: &Geometry) -> Result<ControlPoint, ThereminError> {
    let pitch = est.hand(HandLabel::PitchHand).ok_or(ThereminError::MissingPitchHand)?;
    let amp = match est.hand(HandLabel::VolumeHand) {
        Some(v) => geom.amp(geom.volume_height(v.y)),
        None => 1.0,
    };
    Ok(ControlPoint {
        t: est.t,
        freq: cal.freq_at(geom.pitch_distance(pitch.x)),
        amp,
    })
}

#[cfg(test)]
mod tests;
