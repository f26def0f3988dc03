use super::*;
use crate::event::Resolution;

const CHIP: Resolution = Resolution::new(86, 65);

fn bump(res: Resolution, cx: f64, cy: f64, amp: f64, width: f64) -> Vec<f64> {
    let w = res.width as usize;
    (0..res.cells())
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * width * width)).exp()
        })
        .collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scaled(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|x| x * k).collect()
}

fn run(field: &mut Field, s: &[f64], kernel: &Kernel, steps: usize) {
    for _ in 0..steps {
        field.step(s, kernel).unwrap();
    }
}

fn default_kernel(kp: KernelParams) -> Kernel {
    make_kernel(kp, kp.default_radius()).unwrap()
}

fn zero_kernel() -> Kernel {
    let kp = KernelParams {
        c_exc: 0.0,
        c_inh: 0.0,
        g_inh: 0.0,
        ..KernelParams::multi_peak()
    };
    make_kernel(kp, 3).unwrap()
}

#[test]
fn single_gaussian_kernel_is_non_negative() {
    let kp = KernelParams {
        c_inh: 0.0,
        ..KernelParams::multi_peak()
    };
    let k = default_kernel(kp);
    assert!(k.weights().iter().all(|&w| w >= 0.0));
}

#[test]
fn kernel_center_and_symmetry() {
    let k = default_kernel(KernelParams::multi_peak());
    assert_eq!(k.at(0, 0), 15.0 - 10.0);
    assert_eq!(k.at(3, 4), k.at(4, 3));
    assert_eq!(k.at(3, 4), k.at(-3, 4));
    assert_eq!(k.at(3, 4), k.at(3, -4));
    let r = k.radius() as i64;
    assert_eq!(k.at(r + 1, 0), 0.0);
}

#[test]
fn kernel_rejects_bad_params() {
    let mut kp = KernelParams::multi_peak();
    kp.sigma_inh = 2.0;
    assert!(make_kernel(kp, 6).is_err());
    kp = KernelParams::multi_peak();
    kp.c_exc = -1.0;
    assert!(make_kernel(kp, 6).is_err());
}

#[test]
fn field_params_rejected() {
    for p in [
        FieldParams { tau: 0.0, ..Default::default() },
        FieldParams { dt: 11.0, ..Default::default() },
        FieldParams { h: 0.5, ..Default::default() },
        FieldParams { beta: 0.0, ..Default::default() },
    ] {
        assert!(Field::resting(CHIP, p).is_err());
    }
}

#[test]
fn shape_mismatch() {
    let mut f = Field::resting(CHIP, FieldParams::default()).unwrap();
    assert!(matches!(
        f.step(&[0.0; 10], &zero_kernel()),
        Err(DnfError::ShapeMismatch { got: 10, .. })
    ));
}

/// Direct 2D zero-padded convolution; independent of the separable path.
fn direct_conv(rate: &[f64], res: Resolution, k: &Kernel) -> Vec<f64> {
    let (w, h) = (res.width as i64, res.height as i64);
    let r = k.radius() as i64;
    let mut out = vec![0.0; rate.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (sx, sy) = (x + dx, y + dy);
                    if sx >= 0 && sx < w && sy >= 0 && sy < h {
                        acc += k.at(dx, dy) * rate[(sy * w + sx) as usize];
                    }
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

#[test]
fn separable_step_matches_direct_convolution() {
    let res = Resolution::new(30, 22);
    let params = FieldParams::default();
    let u0: Vec<f64> = (0..res.cells())
        .map(|i| -5.0 + 7.0 * ((i * 37 % 101) as f64 / 101.0))
        .collect();
    let s: Vec<f64> = (0..res.cells()).map(|i| (i % 7) as f64 * 0.3).collect();
    let kernel = make_kernel(KernelParams::multi_peak(), 8).unwrap();
    let mut field = Field::with_activation(res, params, u0.clone()).unwrap();
    field.step(&s, &kernel).unwrap();

    let rate: Vec<f64> = u0.iter().map(|&u| params.rate(u)).collect();
    let conv = direct_conv(&rate, res, &kernel);
    for i in 0..res.cells() {
        let expect = u0[i] + params.dt / params.tau * (-u0[i] + params.h + s[i] + conv[i]);
        assert!((field.u[i] - expect).abs() < 1e-9, "cell {i}: {} vs {expect}", field.u[i]);
    }
}

#[test]
fn resting_level_is_a_fixed_point() {
    let mut f = Field::resting(CHIP, FieldParams::default()).unwrap();
    let zeros = vec![0.0; CHIP.cells()];
    run(&mut f, &zeros, &zero_kernel(), 50);
    assert!(f.u.iter().all(|&u| u == -5.0));
}

#[test]
fn geometric_decay_without_interaction() {
    let p = FieldParams::default();
    let u0 = bump(CHIP, 40.0, 30.0, 12.0, 4.0).iter().map(|v| v - 5.0).collect();
    let mut f = Field::with_activation(CHIP, p, u0).unwrap();
    let zeros = vec![0.0; CHIP.cells()];
    let kernel = zero_kernel();
    let ratio = 1.0 - p.dt / p.tau;
    let mut prev_dev = f.u.iter().map(|u| (u - p.h).abs()).fold(0.0, f64::max);
    for _ in 0..60 {
        f.step(&zeros, &kernel).unwrap();
        let dev = f.u.iter().map(|u| (u - p.h).abs()).fold(0.0, f64::max);
        assert!(dev < prev_dev);
        assert!((dev - prev_dev * ratio).abs() < 1e-9);
        prev_dev = dev;
    }
}

#[test]
fn sustained_peak_survives_reduced_input() {
    let kernel = default_kernel(KernelParams::multi_peak());
    let mut f = Field::resting(CHIP, FieldParams::default()).unwrap();
    let s = bump(CHIP, 43.0, 32.0, 8.0, 2.5);
    run(&mut f, &s, &kernel, 150);
    assert_eq!(detect_peaks(&f, 0.0, 5.0).len(), 1);
    let weak = scaled(&s, 0.2);
    for step in 0..100 {
        f.step(&weak, &kernel).unwrap();
        assert_eq!(detect_peaks(&f, 0.0, 5.0).len(), 1, "peak lost after {step} steps");
    }
}

#[test]
fn below_threshold_gives_no_peaks() {
    let f = Field::resting(CHIP, FieldParams::default()).unwrap();
    assert!(detect_peaks(&f, 0.0, 3.0).is_empty());
}

#[test]
fn two_constructed_bumps() {
    let u = add(&bump(CHIP, 10.0, 10.0, 10.0, 2.0), &bump(CHIP, 60.0, 40.0, 8.0, 2.0));
    let u = u.iter().map(|v| v - 5.0).collect();
    let f = Field::with_activation(CHIP, FieldParams::default(), u).unwrap();
    let peaks = detect_peaks(&f, 0.0, 5.0);
    assert_eq!(peaks.len(), 2);
    assert!((peaks[0].x - 10.0).abs() < 0.5 && (peaks[0].y - 10.0).abs() < 0.5);
    assert!((peaks[1].x - 60.0).abs() < 0.5 && (peaks[1].y - 40.0).abs() < 0.5);
    assert!(peaks[0].mass > peaks[1].mass);
}

#[test]
fn single_bump_centroid_is_exact() {
    let u = bump(CHIP, 43.0, 32.0, 10.0, 3.0).iter().map(|v| v - 5.0).collect();
    let f = Field::with_activation(CHIP, FieldParams::default(), u).unwrap();
    let peaks = detect_peaks(&f, 0.0, 5.0);
    assert_eq!(peaks.len(), 1);
    assert!((peaks[0].x - 43.0).abs() < 1e-9);
    assert!((peaks[0].y - 32.0).abs() < 1e-9);
    assert!(peaks[0].mass > 0.0);
}

#[test]
fn nearby_regions_merge() {
    let mut u = vec![-1.0; CHIP.cells()];
    let w = CHIP.width as usize;
    u[10 * w + 10] = 1.0;
    u[10 * w + 13] = 1.0;
    let f = Field::with_activation(CHIP, FieldParams::default(), u).unwrap();
    assert_eq!(detect_peaks(&f, 0.0, 2.0).len(), 2);
    let merged = detect_peaks(&f, 0.0, 4.0);
    assert_eq!(merged.len(), 1);
    assert!((merged[0].x - 11.5).abs() < 1e-12);
}

#[test]
fn impulse_is_forgotten() {
    let kernel = default_kernel(KernelParams::multi_peak());
    let p = FieldParams::default();
    let limit = (5.0 * p.tau / p.dt) as usize;
    let zeros = vec![0.0; CHIP.cells()];
    for amp in [2.0, 8.0, 20.0] {
        let mut f = Field::resting(CHIP, p).unwrap();
        f.step(&bump(CHIP, 43.0, 32.0, amp, 2.5), &kernel).unwrap();
        run(&mut f, &zeros, &kernel, limit);
        assert!(detect_peaks(&f, 0.0, 5.0).is_empty(), "impulse {amp} persisted");
    }
}

#[test]
fn selective_regime_picks_one_winner_in_scan_order() {
    let kernel = default_kernel(KernelParams::selective());
    let mut f = Field::resting(CHIP, FieldParams::default()).unwrap();
    let s = add(&bump(CHIP, 20.0, 32.0, 8.0, 2.5), &bump(CHIP, 65.0, 32.0, 8.0, 2.5));
    run(&mut f, &s, &kernel, 300);
    let peaks = detect_peaks(&f, 0.0, 5.0);
    assert_eq!(peaks.len(), 1);
    assert!((peaks[0].x - 20.0).abs() < 1.0);
}

#[test]
fn field_step_is_pure() {
    let kernel = default_kernel(KernelParams::multi_peak());
    let f = Field::resting(CHIP, FieldParams::default()).unwrap();
    let s = bump(CHIP, 43.0, 32.0, 8.0, 2.5);
    let a = field_step(&f, &s, &kernel).unwrap();
    let b = field_step(&f, &s, &kernel).unwrap();
    assert_eq!(a.u, b.u);
    assert!(f.u.iter().all(|&u| u == -5.0));
}
