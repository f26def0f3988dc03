//! Dynamic neural fields.
//!
//! Euler integration of Amari dynamics on a 2D lattice,
//!
//! ```text
//! τ du/dt = −u + h + s + (k ⊛ f(u)) − g_inh Σ f(u),   f(u) = 1 / (1 + e^(−βu))
//! ```
//!
//! with a difference-of-Gaussians lateral kernel `k` and zero padding at the
//! borders. With `g_inh = 0` the field supports several coexisting localized
//! peaks; a positive `g_inh` makes it select a single winner.

mod kernel;
mod peaks;

pub use kernel::{make_kernel, Kernel, KernelParams};
pub use peaks::{detect_peaks, Peak};

use crate::event::Resolution;
use crate::pgm;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DnfError {
    #[error("invalid field parameters: {0}")]
    BadParams(String),
    #[error("invalid kernel parameters: {0}")]
    BadKernel(String),
    #[error("input has {got} cells, field has {expected}")]
    ShapeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    /// Time constant, in steps.
    pub tau: f64,
    /// Resting level.
    pub h: f64,
    /// Sigmoid steepness.
    pub beta: f64,
    pub dt: f64,
    /// Resting-level advantage of early row-major cells, applied only when
    /// global inhibition is on. Breaks exact ties between equal inputs in
    /// favour of the first one in scan order.
    pub tie_break: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams {
            tau: 10.0,
            h: -5.0,
            beta: 4.0,
            dt: 1.0,
            tie_break: 1e-6,
        }
    }
}

impl FieldParams {
    pub fn validate(&self) -> Result<(), DnfError> {
        let ok = self.tau > 0.0
            && self.dt > 0.0
            && self.dt <= self.tau
            && self.h < 0.0
            && self.beta > 0.0
            && self.tie_break >= 0.0
            && [self.tau, self.h, self.beta, self.dt, self.tie_break].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(DnfError::BadParams(format!("{self:?}")))
        }
    }

    pub fn rate(&self, u: f64) -> f64 {
        1.0 / (1.0 + (-self.beta * u).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub resolution: Resolution,
    pub params: FieldParams,
    pub u: Vec<f64>,
    #[serde(skip)]
    scratch: Scratch,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Scratch {
    rate: Vec<f64>,
    tmp: Vec<f64>,
    exc: Vec<f64>,
    inh: Vec<f64>,
}

impl Field {
    /// A field at its resting level everywhere.
    pub fn resting(resolution: Resolution, params: FieldParams) -> Result<Self, DnfError> {
        params.validate()?;
        Ok(Field {
            resolution,
            params,
            u: vec![params.h; resolution.cells()],
            scratch: Scratch::default(),
        })
    }

    pub fn with_activation(resolution: Resolution, params: FieldParams, u: Vec<f64>) -> Result<Self, DnfError> {
        params.validate()?;
        if u.len() != resolution.cells() {
            return Err(DnfError::ShapeMismatch {
                expected: resolution.cells(),
                got: u.len(),
            });
        }
        Ok(Field {
            resolution,
            params,
            u,
            scratch: Scratch::default(),
        })
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.u[y * self.resolution.width as usize + x]
    }

    pub fn max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// One Euler step with input `s` (same row-major layout as `u`).
    pub fn step(&mut self, s: &[f64], kernel: &Kernel) -> Result<(), DnfError> {
        let n = self.u.len();
        if s.len() != n {
            return Err(DnfError::ShapeMismatch { expected: n, got: s.len() });
        }
        let p = self.params;
        let (w, h) = (self.resolution.width as usize, self.resolution.height as usize);
        let sc = &mut self.scratch;
        sc.rate.clear();
        sc.rate.extend(self.u.iter().map(|&u| p.rate(u)));
        let total: f64 = sc.rate.iter().sum();

        let kp = kernel.params();
        sc.exc.resize(n, 0.0);
        sc.inh.resize(n, 0.0);
        if kp.c_exc != 0.0 {
            separable_conv(&sc.rate, w, h, kernel.exc_profile(), &mut sc.tmp, &mut sc.exc);
        } else {
            sc.exc.fill(0.0);
        }
        if kp.c_inh != 0.0 {
            separable_conv(&sc.rate, w, h, kernel.inh_profile(), &mut sc.tmp, &mut sc.inh);
        } else {
            sc.inh.fill(0.0);
        }
        let global = kp.g_inh * total;
        let bias = if kp.g_inh > 0.0 { p.tie_break } else { 0.0 };
        let k = p.dt / p.tau;
        for i in 0..n {
            let lateral = kp.c_exc * sc.exc[i] - kp.c_inh * sc.inh[i];
            let rest = p.h - bias * (i as f64 / n as f64);
            let u = self.u[i];
            self.u[i] = u + k * (-u + rest + s[i] + lateral - global);
        }
        Ok(())
    }

    /// Field snapshot as 16-bit PGM, mapping `[lo, hi]` onto the full range.
    pub fn to_pgm(&self, lo: f64, hi: f64) -> Vec<u8> {
        pgm::encode16(self.resolution, &self.u, lo, hi)
    }
}

/// Pure form of [`Field::step`].
pub fn field_step(field: &Field, s: &[f64], kernel: &Kernel) -> Result<Field, DnfError> {
    let mut next = field.clone();
    next.step(s, kernel)?;
    Ok(next)
}

/// Zero-padded 2D convolution with the outer product of a symmetric 1D
/// profile with itself: a row pass then a column pass.
fn separable_conv(src: &[f64], w: usize, h: usize, profile: &[f64], tmp: &mut Vec<f64>, out: &mut [f64]) {
    let r = profile.len() / 2;
    tmp.clear();
    tmp.resize(w * h, 0.0);
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let dst = &mut tmp[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            *d = (lo..=hi).map(|xx| row[xx] * profile[xx + r - x]).sum();
        }
    }
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            out[y * w + x] = (lo..=hi).map(|yy| tmp[yy * w + x] * profile[yy + r - y]).sum();
        }
    }
}

#[cfg(test)]
mod tests;
