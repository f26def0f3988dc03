use super::{ControlPoint, ThereminError};
use std::f64::consts::TAU;
use std::io::Cursor;
use std::path::Path;

pub const MIN_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vibrato {
    pub depth_cents: f64,
    pub rate_hz: f64,
}

/// Phase-continuous sine synthesis of a control trace. Frequency and
/// amplitude are interpolated linearly between control points; the output
/// spans from the first point's time to the last one's.
pub fn render_trace(points: &[ControlPoint], sample_rate: u32, vibrato: Option<Vibrato>) -> Result<Vec<i16>, ThereminError> {
    if sample_rate < MIN_SAMPLE_RATE {
        return Err(ThereminError::SampleRate(sample_rate));
    }
    if points.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(ThereminError::BadScore("control points out of time order".into()));
    }
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        return Ok(Vec::new());
    };
    let span = (last.t - first.t) as f64 * 1e-6;
    let n = (span * sample_rate as f64).round() as usize;
    let mut out = Vec::with_capacity(n);
    let mut phase = 0.0f64;
    let mut seg = 0;
    for k in 0..n {
        let t_s = k as f64 / sample_rate as f64;
        let t = first.t as f64 + t_s * 1e6;
        while seg + 2 < points.len() && points[seg + 1].t as f64 <= t {
            seg += 1;
        }
        let (a, b) = (points[seg], points[(seg + 1).min(points.len() - 1)]);
        let w = if b.t > a.t {
            ((t - a.t as f64) / (b.t - a.t) as f64).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut freq = a.freq + (b.freq - a.freq) * w;
        let amp = (a.amp + (b.amp - a.amp) * w).clamp(0.0, 1.0);
        if let Some(v) = vibrato {
            freq *= 2f64.powf(v.depth_cents / 1200.0 * (TAU * v.rate_hz * t_s).sin());
        }
        out.push((amp * phase.sin() * i16::MAX as f64).round() as i16);
        phase = (phase + TAU * freq / sample_rate as f64) % TAU;
    }
    Ok(out)
}

fn spec(sample_rate: u32) -> hound::WavSpec {
    hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

/// RIFF/WAVE, PCM 16-bit mono.
pub fn wav_bytes(samples: &[i16], sample_rate: u32) -> Result<Vec<u8>, ThereminError> {
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec(sample_rate)).map_err(io)?;
        for &s in samples {
            w.write_sample(s).map_err(io)?;
        }
        w.finalize().map_err(io)?;
    }
    Ok(cursor.into_inner())
}

pub fn write_wav(path: &Path, samples: &[i16], sample_rate: u32) -> Result<(), ThereminError> {
    std::fs::write(path, wav_bytes(samples, sample_rate)?).map_err(|e| ThereminError::Io(e.to_string()))
}

fn io(e: hound::Error) -> ThereminError {
    ThereminError::Io(e.to_string())
}
