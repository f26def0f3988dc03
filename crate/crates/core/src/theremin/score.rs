use super::{note_freq, Geometry, PitchCalibration, ThereminError};
use crate::event::{HandId, Trajectory, TrajectorySample, Unit};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const DEFAULT_RAMP_MS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub midi: u8,
    pub duration_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Score {
    pub notes: Vec<Note>,
    /// `(t_ms, level)` breakpoints, linearly interpolated.
    pub volumes: Vec<(u64, f64)>,
}

/// A note's placement on the timeline, in µs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteSpan {
    pub start: u64,
    pub end: u64,
    pub freq: f64,
}

impl Score {
    /// C4 D4 E4 F4 G4 A4 B4 C5, equal durations, full volume.
    pub fn c_major_scale(duration_ms: u32) -> Self {
        Score {
            notes: [60, 62, 64, 65, 67, 69, 71, 72]
                .into_iter()
                .map(|midi| Note { midi, duration_ms })
                .collect(),
            volumes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ThereminError> {
        for (i, n) in self.notes.iter().enumerate() {
            if n.duration_ms == 0 {
                return Err(ThereminError::BadScore(format!("note {i} has zero duration")));
            }
            note_freq(n.midi as i64)?;
        }
        if self.volumes.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(ThereminError::BadScore("volume times decrease".into()));
        }
        if let Some(&(t, l)) = self.volumes.iter().find(|v| !(0.0..=1.0).contains(&v.1)) {
            return Err(ThereminError::BadScore(format!("volume level {l} at {t} ms outside [0, 1]")));
        }
        Ok(())
    }

    /// Note spans at `tempo` (1.0 plays durations as written).
    pub fn spans(&self, tempo: f64) -> Vec<NoteSpan> {
        let mut t = 0u64;
        self.notes
            .iter()
            .map(|n| {
                let len = (n.duration_ms as f64 * 1000.0 / tempo).round() as u64;
                let span = NoteSpan {
                    start: t,
                    end: t + len,
                    freq: note_freq(n.midi as i64).unwrap_or(f64::NAN),
                };
                t += len;
                span
            })
            .collect()
    }

    pub fn duration_us(&self, tempo: f64) -> u64 {
        self.spans(tempo).last().map_or(0, |s| s.end)
    }

    /// Volume level at `t_us` on the score's own (tempo 1) clock.
    pub fn level_at(&self, t_us: u64) -> f64 {
        let t = t_us as f64 / 1000.0;
        match self.volumes.as_slice() {
            [] => 1.0,
            v if t <= v[0].0 as f64 => v[0].1,
            v => {
                let i = v.partition_point(|p| (p.0 as f64) <= t);
                if i == v.len() {
                    return v[i - 1].1;
                }
                let (a, b) = (v[i - 1], v[i]);
                a.1 + (b.1 - a.1) * (t - a.0 as f64) / (b.0 - a.0) as f64
            }
        }
    }
}

/// Hand paths that play `score`: the pitch hand (`HandId::Left`) holds the
/// distance of each note and glides to the next over `ramp_ms` at the note
/// start (shortened to half the note for very short notes); the volume hand
/// (`HandId::Right`) follows the volume breakpoints. Pixel units.
pub fn score_to_trajectory(
    score: &Score,
    cal: &PitchCalibration,
    geom: &Geometry,
    tempo: f64,
    ramp_ms: f64,
) -> Result<Trajectory, ThereminError> {
    score.validate()?;
    cal.validate()?;
    geom.validate()?;
    if !(tempo > 0.0 && tempo.is_finite()) || !(ramp_ms >= 0.0) {
        return Err(ThereminError::BadScore("tempo must be positive and the ramp non-negative".into()));
    }
    let spans = score.spans(tempo);
    let mut samples = Vec::new();
    let mut prev_x: Option<f64> = None;
    for span in &spans {
        let d = cal.distance_for(span.freq);
        if !(d >= 0.0) {
            return Err(ThereminError::Unrepresentable { freq: span.freq, d });
        }
        let x = geom.pitch_column(d);
        let ramp = ((ramp_ms * 1000.0) as u64).min((span.end - span.start) / 2);
        let mut push = |t: u64, x: f64| {
            samples.push(TrajectorySample {
                t,
                hand: HandId::Left,
                x,
                y: geom.pitch_hand_y,
            })
        };
        match prev_x {
            Some(px) if ramp > 0 => {
                push(span.start, px);
                push(span.start + ramp, x);
            }
            _ => push(span.start, x),
        }
        prev_x = Some(x);
    }
    if let (Some(last), Some(x)) = (spans.last(), prev_x) {
        samples.push(TrajectorySample {
            t: last.end,
            hand: HandId::Left,
            x,
            y: geom.pitch_hand_y,
        });
        let end = last.end;
        let mut times: Vec<u64> = vec![0];
        times.extend(score.volumes.iter().map(|v| (v.0 as f64 * 1000.0 / tempo).round() as u64));
        times.push(end);
        times.sort_unstable();
        times.dedup();
        for t in times.into_iter().filter(|&t| t <= end) {
            let level = score.level_at((t as f64 * tempo).round() as u64);
            let h = geom.h_min + level * (geom.h_max - geom.h_min);
            samples.push(TrajectorySample {
                t,
                hand: HandId::Right,
                x: geom.volume_hand_x,
                y: geom.volume_row(h),
            });
        }
    }
    Trajectory::new(Unit::Pixels, samples).map_err(|e| ThereminError::BadScore(e.to_string()))
}

/// Line format: `NOTE <midi> <duration_ms>` and `VOL <t_ms> <level>`;
/// `#` starts a comment.
pub fn parse_score(text: &str) -> Result<Score, ThereminError> {
    let mut score = Score::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| ThereminError::Parse { line: i + 1, reason };
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["NOTE", m, d] => {
                let midi: u8 = m.parse().map_err(|_| err(format!("bad midi number {m:?}")))?;
                let duration_ms: u32 = d.parse().map_err(|_| err(format!("bad duration {d:?}")))?;
                score.notes.push(Note { midi, duration_ms });
            }
            ["VOL", t, l] => {
                let t: u64 = t.parse().map_err(|_| err(format!("bad time {t:?}")))?;
                let l: f64 = l.parse().map_err(|_| err(format!("bad level {l:?}")))?;
                score.volumes.push((t, l));
            }
            _ => return Err(err(format!("unrecognised line {line:?}"))),
        }
    }
    score.validate()?;
    Ok(score)
}

pub fn write_score(score: &Score) -> String {
    let mut out = String::new();
    for n in &score.notes {
        let _ = writeln!(out, "NOTE {} {}", n.midi, n.duration_ms);
    }
    for (t, l) in &score.volumes {
        let _ = writeln!(out, "VOL {t} {l}");
    }
    out
}
