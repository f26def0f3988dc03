use super::*;
use crate::event::{synth_hand_events, waving_hands, HandId, SynthParams, Trajectory, TrajectorySample, Unit};

const INPUT: Resolution = Resolution::new(240, 180);
const CHIP: Resolution = Resolution::new(86, 65);

fn chip_frame_with(blobs: &[(u16, u16)]) -> Frame {
    let mut f = Frame::zeros(CHIP, 0, 1);
    for &(cx, cy) in blobs {
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                let (x, y) = ((cx as i32 + dx) as u16, (cy as i32 + dy) as u16);
                let i = CHIP.index(x, y);
                f.cells[i] += 5 - dx.abs().max(dy.abs());
            }
        }
    }
    f
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
}

fn local_maxima(v: &[f64], res: Resolution) -> Vec<(usize, usize)> {
    let (w, h) = (res.width as usize, res.height as usize);
    let mut out = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = v[y * w + x];
            let is_max = c > 0.1
                && (-1i64..=1).all(|dy| {
                    (-1i64..=1).all(|dx| {
                        (dx == 0 && dy == 0) || v[((y as i64 + dy) as usize) * w + (x as i64 + dx) as usize] < c
                    })
                });
            if is_max {
                out.push((x, y));
            }
        }
    }
    out
}

#[test]
fn zero_frame_zero_heatmap() {
    let f = Frame::zeros(CHIP, 0, 1);
    assert!(detect_heatmap(&f, &Detector::Blob { sigma: 1.5 }).unwrap().iter().all(|&v| v == 0.0));
    let net = Detector::SdNet {
        net: density_net(CHIP, 1.5),
        threshold: 0.1,
    };
    assert!(detect_heatmap(&f, &net).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn blob_heatmap_peaks_at_blob() {
    let f = chip_frame_with(&[(43, 32)]);
    for det in [
        Detector::Blob { sigma: 1.5 },
        Detector::SdNet {
            net: density_net(CHIP, 1.5),
            threshold: 0.05,
        },
    ] {
        let heat = detect_heatmap(&f, &det).unwrap();
        assert_eq!(argmax(&heat), CHIP.index(43, 32));
        assert!(heat.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn two_blobs_two_maxima() {
    let f = chip_frame_with(&[(20, 30), (65, 35)]);
    let heat = detect_heatmap(&f, &Detector::Blob { sigma: 1.5 }).unwrap();
    assert_eq!(local_maxima(&heat, CHIP), vec![(20, 30), (65, 35)]);
}

#[test]
fn detector_rejects_wrong_resolution() {
    let f = Frame::zeros(INPUT, 0, 1);
    let mut det = HeatmapDetector::new(&Detector::Blob { sigma: 1.5 }, CHIP).unwrap();
    assert!(matches!(det.detect(&f), Err(TrackerError::WrongResolution { .. })));
}

fn peak(x: f64) -> Peak {
    Peak {
        x,
        y: 30.0,
        mass: 10.0,
        max_activation: 5.0,
    }
}

#[test]
fn hand_assignment_convention() {
    let got = assign_hands(&[peak(70.0), peak(10.0)], true);
    assert_eq!(got[0].0, HandLabel::PitchHand);
    assert_eq!(got[0].1.x, 10.0);
    assert_eq!(got[1].0, HandLabel::VolumeHand);

    let single = assign_hands(&[peak(70.0)], true);
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].0, HandLabel::PitchHand);

    let flipped = assign_hands(&[peak(70.0), peak(10.0)], false);
    assert_eq!(flipped[0].0, HandLabel::VolumeHand);
    assert_eq!(flipped[0].1.x, 10.0);
    assert_eq!(flipped[1].0, HandLabel::PitchHand);
    assert_eq!(flipped[1].1.x, 70.0);
    assert!(assign_hands(&[], true).is_empty());
}

#[test]
fn upscale_stays_within_one_chip_cell() {
    let cfg = TrackerConfig::default();
    let span_x = 240.0 / 86.0;
    let span_y = 180.0 / 65.0;
    for x in 0..240u16 {
        let cx = (x as usize * 86 / 240) as f64;
        let (ux, _) = cfg.upscale(cx, 0.0);
        assert!((ux - x as f64).abs() <= span_x, "x={x} -> {ux}");
    }
    for y in 0..180u16 {
        let cy = (y as usize * 65 / 180) as f64;
        let (_, uy) = cfg.upscale(0.0, cy);
        assert!((uy - y as f64).abs() <= span_y);
    }
}

fn single_hand(dur: u64) -> Trajectory {
    let samples = (0..=dur / 5000)
        .map(|k| {
            let t = k * 5000;
            let phase = t as f64 / 500_000.0 * std::f64::consts::TAU;
            TrajectorySample {
                t,
                hand: HandId::Left,
                x: 110.0 + 20.0 * phase.sin(),
                y: 80.0 + 20.0 * phase.cos(),
            }
        })
        .collect();
    Trajectory::new(Unit::Pixels, samples).unwrap()
}

fn mean_error(est: &[HandEstimate], traj: &Trajectory, hand: HandId, label: HandLabel, skip: usize) -> f64 {
    let mut errs = Vec::new();
    for e in est.iter().skip(skip) {
        let truth = traj.position(hand, e.t - 5_000).unwrap();
        let h = e.hand(label).expect("hand missing");
        errs.push(((h.x - truth.0).powi(2) + (h.y - truth.1).powi(2)).sqrt());
    }
    errs.iter().sum::<f64>() / errs.len() as f64
}

#[test]
fn single_hand_accuracy() {
    let traj = single_hand(500_000);
    let stream = synth_hand_events(&traj, &SynthParams::new(INPUT, 8.0, 3)).unwrap();
    let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
    let est = tracker.track_stream(&stream, 0, 500_000).unwrap();
    assert_eq!(est.len(), 50);
    let err = mean_error(&est, &traj, HandId::Left, HandLabel::PitchHand, 5);
    assert!(err <= 8.0, "mean error {err}");
}

#[test]
fn sd_net_detector_tracks_too() {
    let traj = single_hand(500_000);
    let stream = synth_hand_events(&traj, &SynthParams::new(INPUT, 8.0, 3)).unwrap();
    let cfg = TrackerConfig {
        detector: Detector::SdNet {
            net: density_net(CHIP, 1.5),
            threshold: 0.25,
        },
        ..TrackerConfig::default()
    };
    let mut tracker = Tracker::new(cfg).unwrap();
    let est = tracker.track_stream(&stream, 0, 500_000).unwrap();
    let err = mean_error(&est, &traj, HandId::Left, HandLabel::PitchHand, 5);
    assert!(err <= 8.0, "mean error {err}");
}

#[test]
fn two_waving_hands_two_labels() {
    let traj = waving_hands(INPUT, 1_000_000, 30.0, 500_000);
    let stream = synth_hand_events(&traj, &SynthParams::new(INPUT, 8.0, 5)).unwrap();
    let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
    let est = tracker.track_stream(&stream, 0, 1_000_000).unwrap();
    for e in est.iter().skip(5) {
        assert_eq!(e.hands.len(), 2, "at t={}", e.t);
        let p = e.hand(HandLabel::PitchHand).unwrap();
        let v = e.hand(HandLabel::VolumeHand).unwrap();
        assert!(p.x < v.x);
    }
    let errp = mean_error(&est, &traj, HandId::Left, HandLabel::PitchHand, 5);
    let errv = mean_error(&est, &traj, HandId::Right, HandLabel::VolumeHand, 5);
    assert!(errp <= 8.0 && errv <= 8.0, "{errp} {errv}");
}

#[test]
fn silence_holds_estimate_and_decays_confidence() {
    let traj = single_hand(300_000);
    let stream = synth_hand_events(&traj, &SynthParams::new(INPUT, 8.0, 3)).unwrap();
    let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
    tracker.track_stream(&stream, 0, 300_000).unwrap();
    let before = tracker.last_estimate().hand(HandLabel::PitchHand).copied().unwrap();
    assert!(before.confidence > 0.99);

    let mut t = 300_000;
    let mut held = 0;
    let mut prev_conf = before.confidence;
    for _ in 0..10 {
        let e = tracker.track_step(&[], t).unwrap();
        t += 10_000;
        let h = *e.hand(HandLabel::PitchHand).unwrap();
        if tracker.field().max() <= 0.0 {
            held += 1;
            assert_eq!(h.confidence, prev_conf * 0.5);
        }
        prev_conf = h.confidence;
    }
    // the field drains within a few windows, then the decay rule takes over
    assert!(held >= 5, "only {held} held steps");
    let last = tracker.last_estimate().hand(HandLabel::PitchHand).copied().unwrap();
    assert!(last.confidence <= 0.5f64.powi(held));
    assert!((last.x - before.x).abs() < 8.0);
}

#[test]
fn no_prior_estimate_means_no_hands() {
    let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
    for k in 0..10 {
        let e = tracker.track_step(&[], k * 10_000).unwrap();
        assert!(e.hands.is_empty());
    }
}

#[test]
fn deterministic() {
    let traj = waving_hands(INPUT, 300_000, 30.0, 500_000);
    let stream = synth_hand_events(&traj, &SynthParams::new(INPUT, 8.0, 9)).unwrap();
    let run = || {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.track_stream(&stream, 0, 300_000).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn records_format() {
    let e = HandEstimate {
        t: 1000,
        hands: vec![TrackedHand {
            label: HandLabel::PitchHand,
            x: 1.5,
            y: 2.25,
            confidence: 0.5,
        }],
    };
    let mut out = Vec::new();
    e.write_records(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "1000,pitch_hand,1.500,2.250,0.500000\n");
}

#[test]
fn rejects_bad_config() {
    let cfg = TrackerConfig {
        chip_res: Resolution::new(300, 65),
        ..TrackerConfig::default()
    };
    assert!(Tracker::new(cfg).is_err());
    let cfg = TrackerConfig {
        window_us: 0,
        ..TrackerConfig::default()
    };
    assert!(Tracker::new(cfg).is_err());
}
