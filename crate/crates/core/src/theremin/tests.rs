use super::*;
use crate::event::HandId;
use crate::tracker::TrackedHand;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c4() -> f64 {
    440.0 * 2f64.powf(-9.0 / 12.0)
}

fn estimate(t: u64, pitch_x: Option<f64>, vol_y: Option<f64>) -> HandEstimate {
    let mut hands = Vec::new();
    if let Some(x) = pitch_x {
        hands.push(TrackedHand {
            label: HandLabel::PitchHand,
            x,
            y: 80.0,
            confidence: 1.0,
        });
    }
    if let Some(y) = vol_y {
        hands.push(TrackedHand {
            label: HandLabel::VolumeHand,
            x: 175.0,
            y,
            confidence: 1.0,
        });
    }
    HandEstimate { t, hands }
}

#[test]
fn equal_temperament() {
    assert_eq!(note_freq(69).unwrap(), 440.0);
    assert!((note_freq(60).unwrap() - 261.6256).abs() < 5e-5);
    assert!((note_freq(72).unwrap() - 523.2511).abs() < 5e-5);
    assert!((note_freq(72).unwrap() - 2.0 * note_freq(60).unwrap()).abs() < 1e-12);
    assert!(note_freq(128).is_err());
    assert!(note_freq(-1).is_err());
}

#[test]
fn octave_closer_doubles_pitch() {
    let cal = PitchCalibration::default();
    assert!((cal.freq_at(0.16) - 523.2511).abs() < 5e-5);
    assert_eq!(cal.freq_at(cal.d_ref), cal.f_ref);
    for d in [0.1, 0.2, 0.37] {
        assert!((cal.freq_at(d - cal.s) / cal.freq_at(d) - 2.0).abs() < 1e-12);
    }
    let mut last = f64::INFINITY;
    for k in 0..100 {
        let f = cal.freq_at(k as f64 * 0.01);
        assert!(f < last);
        last = f;
    }
}

#[test]
fn control_from_hands() {
    let cal = PitchCalibration::default();
    let g = Geometry::default();
    // x = 80 px is 0.40 m from the antenna at -20 px
    let cp = hands_to_control(&estimate(5, Some(80.0), None), &cal, &g).unwrap();
    assert!((cp.freq - cal.f_ref).abs() < 1e-9);
    assert_eq!(cp.amp, 1.0);
    assert_eq!(cp.t, 5);
    let h_min_row = g.volume_row(g.h_min);
    let cp = hands_to_control(&estimate(0, Some(80.0), Some(h_min_row)), &cal, &g).unwrap();
    assert_eq!(cp.amp, 0.0);
    let cp = hands_to_control(&estimate(0, Some(80.0), Some(g.volume_row(g.h_max))), &cal, &g).unwrap();
    assert!((cp.amp - 1.0).abs() < 1e-12);
    assert_eq!(
        hands_to_control(&estimate(0, None, Some(100.0)), &cal, &g),
        Err(ThereminError::MissingPitchHand)
    );
    assert!((g.cents_per_pixel(&cal) - 20.0).abs() < 1e-12);
}

#[test]
fn single_c4_note_holds_reference_distance() {
    let cal = PitchCalibration::default();
    let g = Geometry::default();
    let score = Score {
        notes: vec![Note {
            midi: 60,
            duration_ms: 500,
        }],
        volumes: vec![],
    };
    let traj = score_to_trajectory(&score, &cal, &g, 1.0, DEFAULT_RAMP_MS).unwrap();
    for t in (0..=500_000).step_by(10_000) {
        let (x, _) = traj.position(HandId::Left, t).unwrap();
        assert!((g.pitch_distance(x) - cal.d_ref).abs() < 1e-12);
    }
}

#[test]
fn scale_round_trip_within_one_cent_off_ramps() {
    let cal = PitchCalibration::default();
    let g = Geometry::default();
    let score = Score::c_major_scale(400);
    let traj = score_to_trajectory(&score, &cal, &g, 1.0, DEFAULT_RAMP_MS).unwrap();
    for span in score.spans(1.0) {
        for t in (span.start + 30_000..span.end).step_by(1_000) {
            let (x, _) = traj.position(HandId::Left, t).unwrap();
            let cp = hands_to_control(&estimate(t, Some(x), None), &cal, &g).unwrap();
            assert!(cents(cp.freq, span.freq).abs() < 1.0);
        }
    }
}

#[test]
fn tempo_scales_time() {
    let score = Score::c_major_scale(400);
    assert_eq!(score.duration_us(1.0), 3_200_000);
    assert_eq!(score.duration_us(2.0), 1_600_000);
}

#[test]
fn volume_ramp_maps_to_height() {
    let cal = PitchCalibration::default();
    let g = Geometry::default();
    let score = Score {
        notes: vec![Note {
            midi: 64,
            duration_ms: 1000,
        }],
        volumes: vec![(0, 0.0), (1000, 1.0)],
    };
    let traj = score_to_trajectory(&score, &cal, &g, 1.0, DEFAULT_RAMP_MS).unwrap();
    for k in 0..=10u64 {
        let (_, y) = traj.position(HandId::Right, k * 100_000).unwrap();
        let h = g.volume_height(y);
        let expect = g.h_min + (g.h_max - g.h_min) * k as f64 / 10.0;
        assert!((h - expect).abs() < 1e-9);
    }
}

#[test]
fn unplayable_note_rejected() {
    let cal = PitchCalibration::default();
    let score = Score {
        notes: vec![Note {
            midi: 100,
            duration_ms: 100,
        }],
        volumes: vec![],
    };
    assert!(matches!(
        score_to_trajectory(&score, &cal, &Geometry::default(), 1.0, 30.0),
        Err(ThereminError::Unrepresentable { .. })
    ));
}

#[test]
fn calibration_recovers_noiseless_model() {
    let truth = PitchCalibration {
        d_ref: 0.37,
        f_ref: c4(),
        s: 0.21,
    };
    let samples: Vec<(f64, f64)> = (0..20).map(|k| 0.1 + 0.02 * k as f64).map(|d| (d, truth.freq_at(d))).collect();
    let got = calibrate_pitch(&samples, c4()).unwrap();
    assert!(((got.d_ref - truth.d_ref) / truth.d_ref).abs() < 1e-9);
    assert!(((got.s - truth.s) / truth.s).abs() < 1e-9);
    // idempotent on its own model
    let again: Vec<(f64, f64)> = samples.iter().map(|&(d, _)| (d, got.freq_at(d))).collect();
    let got2 = calibrate_pitch(&again, c4()).unwrap();
    assert!(((got2.s - got.s) / got.s).abs() < 1e-12);
}

#[test]
fn two_points_interpolate_exactly() {
    let samples = [(0.2, 300.0), (0.35, 250.0)];
    let cal = calibrate_pitch(&samples, c4()).unwrap();
    assert!(calibration_residual(&cal, &samples) < 1e-24);
}

#[test]
fn calibration_errors() {
    assert_eq!(calibrate_pitch(&[(0.2, 300.0)], c4()), Err(ThereminError::Underdetermined));
    assert_eq!(
        calibrate_pitch(&[(0.2, 300.0), (0.2, 310.0)], c4()),
        Err(ThereminError::Underdetermined)
    );
    assert_eq!(calibrate_pitch(&[(0.2, 300.0), (0.3, 310.0)], c4()), Err(ThereminError::BadSlope));
}

#[test]
fn noisy_fit_beats_grid() {
    let truth = PitchCalibration::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples: Vec<(f64, f64)> = (0..40)
        .map(|_| {
            let d = rng.gen_range(0.1..0.5);
            (d, truth.freq_at(d) * 2f64.powf(rng.gen_range(-0.03..0.03)))
        })
        .collect();
    let fit = calibrate_pitch(&samples, truth.f_ref).unwrap();
    let best = calibration_residual(&fit, &samples);
    for i in 0..100 {
        for j in 0..100 {
            let cand = PitchCalibration {
                d_ref: 0.30 + 0.2 * i as f64 / 99.0,
                f_ref: truth.f_ref,
                s: 0.15 + 0.2 * j as f64 / 99.0,
            };
            assert!(best <= calibration_residual(&cand, &samples) + 1e-15);
        }
    }
}

#[test]
fn one_second_wav_size() {
    let pts = [
        ControlPoint {
            t: 0,
            freq: 440.0,
            amp: 1.0,
        },
        ControlPoint {
            t: 1_000_000,
            freq: 440.0,
            amp: 1.0,
        },
    ];
    let pcm = render_trace(&pts, 8000, None).unwrap();
    assert_eq!(pcm.len(), 8000);
    let wav = wav_bytes(&pcm, 8000).unwrap();
    let pos = wav.windows(4).position(|w| w == b"data").unwrap();
    let size = u32::from_le_bytes(wav[pos + 4..pos + 8].try_into().unwrap());
    assert_eq!(size, 16_000);
    assert_eq!(wav.len(), pos + 8 + 16_000);
    let reader = hound::WavReader::new(std::io::Cursor::new(wav)).unwrap();
    assert_eq!(reader.spec().channels, 1);
    assert_eq!(reader.spec().bits_per_sample, 16);
}

#[test]
fn render_properties() {
    let pts = [
        ControlPoint {
            t: 0,
            freq: 300.0,
            amp: 0.0,
        },
        ControlPoint {
            t: 200_000,
            freq: 600.0,
            amp: 0.0,
        },
    ];
    assert!(render_trace(&pts, 8000, None).unwrap().iter().all(|&s| s == 0));
    let loud = pts.map(|p| ControlPoint { amp: 0.8, ..p });
    let plain = render_trace(&loud, 16000, None).unwrap();
    let flat = render_trace(
        &loud,
        16000,
        Some(Vibrato {
            depth_cents: 0.0,
            rate_hz: 5.0,
        }),
    )
    .unwrap();
    assert_eq!(plain, flat);
    let wobble = render_trace(
        &loud,
        16000,
        Some(Vibrato {
            depth_cents: 50.0,
            rate_hz: 5.0,
        }),
    )
    .unwrap();
    assert_ne!(plain, wobble);
    assert!(render_trace(&loud, 4000, None).is_err());
}

#[test]
fn rendered_pitch_matches_zero_crossings() {
    let pts = [
        ControlPoint {
            t: 0,
            freq: 440.0,
            amp: 1.0,
        },
        ControlPoint {
            t: 1_000_000,
            freq: 440.0,
            amp: 1.0,
        },
    ];
    let pcm = render_trace(&pts, 44_100, None).unwrap();
    let ups = pcm.windows(2).filter(|w| w[0] < 0 && w[1] >= 0).count();
    assert!((439..=441).contains(&ups), "{ups}");
}

#[test]
fn score_text_roundtrip() {
    let text = "# scale\nNOTE 60 400\nNOTE 62 250 # D\n\nVOL 0 0.5\nVOL 800 1\n";
    let s = parse_score(text).unwrap();
    assert_eq!(s.notes.len(), 2);
    assert_eq!(s.volumes, vec![(0, 0.5), (800, 1.0)]);
    assert_eq!(parse_score(&write_score(&s)).unwrap(), s);
    assert!(matches!(parse_score("NOTE 60"), Err(ThereminError::Parse { line: 1, .. })));
    assert!(parse_score("NOTE 60 0").is_err());
    assert!(parse_score("VOL 10 0.5\nVOL 5 0.5").is_err());
    assert!(parse_score("VOL 10 1.5").is_err());
}
