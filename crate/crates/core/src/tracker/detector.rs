//! Surrogate hand detectors producing a chip-resolution heatmap.

use super::TrackerError;
use crate::event::{Frame, Resolution};
use crate::sigma_delta::{Activation, DenseNet, Layer, SdRunner, WeightMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Detector {
    /// Gaussian-smoothed event density.
    Blob { sigma: f64 },
    /// A network run over sigma-delta links; input is the flattened frame,
    /// output is reshaped to the chip grid.
    SdNet { net: DenseNet, threshold: f64 },
}

/// Detector plus whatever state it carries between windows.
pub enum HeatmapDetector {
    Blob { sigma: f64, res: Resolution },
    SdNet { runner: Box<SdRunner>, res: Resolution },
}

impl HeatmapDetector {
    pub fn new(detector: &Detector, res: Resolution) -> Result<Self, TrackerError> {
        match detector {
            Detector::Blob { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(TrackerError::Config("blob sigma must be positive".into()));
                }
                Ok(HeatmapDetector::Blob { sigma: *sigma, res })
            }
            Detector::SdNet { net, threshold } => {
                if net.input_dim() != res.cells() || net.output_dim() != res.cells() {
                    return Err(TrackerError::Config(format!(
                        "network maps {} -> {}, chip grid has {} cells",
                        net.input_dim(),
                        net.output_dim(),
                        res.cells()
                    )));
                }
                Ok(HeatmapDetector::SdNet {
                    runner: Box::new(SdRunner::new(net, *threshold)?),
                    res,
                })
            }
        }
    }

    /// Spikes sent over the network's links so far (network detector only).
    pub fn spike_count(&self) -> Option<u64> {
        match self {
            HeatmapDetector::Blob { .. } => None,
            HeatmapDetector::SdNet { runner, .. } => Some(runner.spike_counts().iter().sum()),
        }
    }

    /// Non-negative heatmap with unit maximum (all zeros for an empty frame).
    pub fn detect(&mut self, frame: &Frame) -> Result<Vec<f64>, TrackerError> {
        let res = match self {
            HeatmapDetector::Blob { res, .. } | HeatmapDetector::SdNet { res, .. } => *res,
        };
        if frame.resolution != res {
            return Err(TrackerError::WrongResolution {
                expected: res,
                got: frame.resolution,
            });
        }
        let mut heat = match self {
            HeatmapDetector::Blob { sigma, .. } => smooth(&frame.to_f64(), res, *sigma),
            HeatmapDetector::SdNet { runner, .. } => runner.step(&frame.to_f64())?.iter().map(|v| v.max(0.0)).collect(),
        };
        normalize(&mut heat);
        Ok(heat)
    }
}

/// One-shot detection with a fresh detector.
pub fn detect_heatmap(frame: &Frame, detector: &Detector) -> Result<Vec<f64>, TrackerError> {
    HeatmapDetector::new(detector, frame.resolution)?.detect(frame)
}

pub fn blob_heatmap(frame: &Frame, sigma: f64) -> Vec<f64> {
    let mut heat = smooth(&frame.to_f64(), frame.resolution, sigma);
    normalize(&mut heat);
    heat
}

fn normalize(v: &mut [f64]) {
    let max = v.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for x in v.iter_mut() {
            *x = (*x / max).max(0.0);
        }
    } else {
        v.fill(0.0);
    }
}

fn gaussian(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    (-r..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect()
}

fn smooth(src: &[f64], res: Resolution, sigma: f64) -> Vec<f64> {
    let g = gaussian(sigma);
    let r = (g.len() / 2) as i64;
    let (w, h) = (res.width as i64, res.height as i64);
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for d in -r..=r {
                let xx = x + d;
                if xx >= 0 && xx < w {
                    acc += g[(d + r) as usize] * src[(y * w + xx) as usize];
                }
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for d in -r..=r {
                let yy = y + d;
                if yy >= 0 && yy < h {
                    acc += g[(d + r) as usize] * tmp[(yy * w + x) as usize];
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

/// A single convolutional layer, stored sparse, that blurs the event frame
/// with a Gaussian and rectifies: the density detector as a network.
pub fn density_net(res: Resolution, sigma: f64) -> DenseNet {
    let g = gaussian(sigma);
    let r = (g.len() / 2) as i64;
    let (w, h) = (res.width as i64, res.height as i64);
    let mut triples = Vec::new();
    for y in 0..h {
        for x in 0..w {
            for dy in -r..=r {
                for dx in -r..=r {
                    let (sx, sy) = (x + dx, y + dy);
                    if sx >= 0 && sx < w && sy >= 0 && sy < h {
                        let v = g[(dx + r) as usize] * g[(dy + r) as usize];
                        triples.push(((y * w + x) as usize, (sy * w + sx) as usize, v));
                    }
                }
            }
        }
    }
    let n = res.cells();
    DenseNet::new(vec![Layer::new(
        WeightMatrix::sparse(n, n, triples),
        vec![0.0; n],
        Activation::Relu,
    )])
    .expect("density net is well formed")
}
