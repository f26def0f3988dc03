//! Closed-loop show simulator on a virtual clock.
//!
//! A synthetic performer drives the event sensor, the tracker ships hand
//! estimates over a SAFE link, and the orchestrator gates and routes them to
//! the theremin, whose pitch is compared against the score. Every latency is
//! virtual, so a run is fully determined by its config and seed.

mod proto;
mod report;
mod show;

pub use proto::{protocol_bench, OverheadRow, ProtoBench, TrafficSpec, SAFE_BATCH_SIZES};
pub use report::{
    metrics_report, power_ratio, report_kv, rtf, CalibrationFit, EnergyReport, ErrorStats, LatencyReport, LatencyStats,
    RunReport, WallClock,
};
pub use show::{default_scenario, run_show, run_show_with, Performance, Segment};

use crate::aer::{AerError, ChannelConfig, Profile, DEFAULT_REORDER_WINDOW};
use crate::event::EventError;
use crate::orchestrator::OrchError;
use crate::theremin::{Geometry, PitchCalibration, ThereminError};
use crate::tracker::{TrackerConfig, TrackerError};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("{stage} stage: {reason}")]
    Stage { stage: &'static str, reason: String },
    #[error("{0} must be non-zero")]
    ZeroDivisor(&'static str),
}

impl HarnessError {
    fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        HarnessError::Stage {
            stage,
            reason: e.to_string(),
        }
    }
}

impl From<TrackerError> for HarnessError {
    fn from(e: TrackerError) -> Self {
        HarnessError::stage("tracker", e)
    }
}

impl From<AerError> for HarnessError {
    fn from(e: AerError) -> Self {
        HarnessError::stage("link", e)
    }
}

impl From<EventError> for HarnessError {
    fn from(e: EventError) -> Self {
        HarnessError::stage("sensor", e)
    }
}

impl From<OrchError> for HarnessError {
    fn from(e: OrchError) -> Self {
        HarnessError::stage("orchestrator", e)
    }
}

impl From<ThereminError> for HarnessError {
    fn from(e: ThereminError) -> Self {
        HarnessError::stage("synth", e)
    }
}

/// Fixed virtual processing time charged to each stage per window, µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageCosts {
    pub sensor_us: u64,
    pub tracker_us: u64,
    pub orchestrator_us: u64,
    pub synth_us: u64,
}

impl Default for StageCosts {
    fn default() -> Self {
        StageCosts {
            sensor_us: 220,
            tracker_us: 1_000,
            orchestrator_us: 100,
            synth_us: 500,
        }
    }
}

/// Power figures used for the energy estimates. These are configured
/// constants, not measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyConstants {
    pub edge_tracker_w: f64,
    pub gpu_alt_w_min: f64,
    pub gpu_alt_w_max: f64,
    pub cluster_kw: f64,
    pub board_w_min: f64,
    pub board_w_max: f64,
    pub boards: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        EnergyConstants {
            edge_tracker_w: 0.004,
            gpu_alt_w_min: 5.0,
            gpu_alt_w_max: 10.0,
            cluster_kw: 6.5,
            board_w_min: 48.0,
            board_w_max: 120.0,
            boards: 10.0,
        }
    }
}

impl EnergyConstants {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let all = [
            ("edge_tracker_w", self.edge_tracker_w),
            ("gpu_alt_w_min", self.gpu_alt_w_min),
            ("gpu_alt_w_max", self.gpu_alt_w_max),
            ("cluster_kw", self.cluster_kw),
            ("board_w_min", self.board_w_min),
            ("board_w_max", self.board_w_max),
            ("boards", self.boards),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!("{name} = {v} must be positive")));
            }
        }
        if self.gpu_alt_w_min > self.gpu_alt_w_max || self.board_w_min > self.board_w_max {
            return Err(HarnessError::Config("energy ranges must have min <= max".into()));
        }
        Ok(())
    }
}

/// Small side-to-side motion of each performer hand across its control
/// axis, so a hand holding a note still produces sensor events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bob {
    pub amplitude_px: f64,
    pub period_ms: u64,
}

impl Default for Bob {
    fn default() -> Self {
        Bob {
            amplitude_px: 10.0,
            period_ms: 200,
        }
    }
}

fn default_channel() -> ChannelConfig {
    ChannelConfig::lossless(0)
}

fn default_tempo() -> f64 {
    1.0
}

fn default_ramp_ms() -> f64 {
    crate::theremin::DEFAULT_RAMP_MS
}

fn default_blob_radius() -> f64 {
    8.0
}

fn default_window() -> u32 {
    DEFAULT_REORDER_WINDOW
}

/// Show configuration. Only `seed` is required; every other key falls back
/// to its default when absent from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Scenario file; the built-in conversation → duet → done walk when absent.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    /// Score file; a C major scale of 400 ms notes when absent.
    #[serde(default)]
    pub score: Option<PathBuf>,
    #[serde(default)]
    pub tracker: TrackerConfig,
    /// The run's link seed is derived from `seed` and `channel.seed`.
    #[serde(default = "default_channel")]
    pub channel: ChannelConfig,
    #[serde(default = "default_window")]
    pub reorder_window: u32,
    #[serde(default)]
    pub calibration: PitchCalibration,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default = "default_tempo")]
    pub tempo: f64,
    #[serde(default = "default_ramp_ms")]
    pub ramp_ms: f64,
    #[serde(default = "default_blob_radius")]
    pub blob_radius: f64,
    /// Distractor events added, as a fraction of performer events.
    #[serde(default)]
    pub noise_fraction: f64,
    #[serde(default)]
    pub bob: Bob,
    #[serde(default)]
    pub costs: StageCosts,
    #[serde(default)]
    pub energy: EnergyConstants,
    /// Run the sensor and link stages on their own threads.
    #[serde(default)]
    pub threaded: bool,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig {
            seed,
            scenario: None,
            score: None,
            tracker: TrackerConfig::default(),
            channel: default_channel(),
            reorder_window: default_window(),
            calibration: PitchCalibration::default(),
            geometry: Geometry::default(),
            tempo: default_tempo(),
            ramp_ms: default_ramp_ms(),
            blob_radius: default_blob_radius(),
            noise_fraction: 0.0,
            bob: Bob::default(),
            costs: StageCosts::default(),
            energy: EnergyConstants::default(),
            threaded: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.tracker.validate()?;
        self.channel.validate(Profile::Safe)?;
        self.calibration.validate()?;
        self.geometry.validate()?;
        self.energy.validate()?;
        if !(self.tempo > 0.0 && self.tempo.is_finite()) {
            return Err(HarnessError::Config("tempo must be positive".into()));
        }
        if !(self.ramp_ms >= 0.0 && self.ramp_ms.is_finite()) {
            return Err(HarnessError::Config("ramp_ms must be non-negative".into()));
        }
        if !(self.blob_radius > 0.0 && self.blob_radius.is_finite()) {
            return Err(HarnessError::Config("blob_radius must be positive".into()));
        }
        if !(0.0..=10.0).contains(&self.noise_fraction) {
            return Err(HarnessError::Config("noise_fraction must be in [0, 10]".into()));
        }
        if !(self.bob.amplitude_px >= 0.0) || self.bob.period_ms == 0 {
            return Err(HarnessError::Config("bob needs a non-negative amplitude and a positive period".into()));
        }
        if self.reorder_window == 0 {
            return Err(HarnessError::Config("reorder_window must be positive".into()));
        }
        Ok(())
    }
}

/// Independent generator seeds for the run's random streams.
pub(crate) fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
