use super::DnfError;
use serde::{Deserialize, Serialize};

/// Difference-of-Gaussians lateral interaction plus a uniform global
/// inhibition term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub c_exc: f64,
    pub sigma_exc: f64,
    pub c_inh: f64,
    pub sigma_inh: f64,
    pub g_inh: f64,
}

impl KernelParams {
    /// Multi-peak regime.
    pub fn multi_peak() -> Self {
        KernelParams {
            c_exc: 15.0,
            sigma_exc: 3.0,
            c_inh: 10.0,
            sigma_inh: 6.0,
            g_inh: 0.0,
        }
    }

    /// Single-winner regime: same lateral kernel with global inhibition.
    pub fn selective() -> Self {
        KernelParams {
            g_inh: 3.0,
            ..Self::multi_peak()
        }
    }

    pub fn validate(&self) -> Result<(), DnfError> {
        let finite = [self.c_exc, self.sigma_exc, self.c_inh, self.sigma_inh, self.g_inh]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.sigma_exc <= 0.0 || self.sigma_inh <= self.sigma_exc {
            return Err(DnfError::BadKernel(format!(
                "need sigma_inh > sigma_exc > 0, got {} / {}",
                self.sigma_inh, self.sigma_exc
            )));
        }
        if self.c_exc < 0.0 || self.c_inh < 0.0 || self.g_inh < 0.0 {
            return Err(DnfError::BadKernel("amplitudes must be non-negative".into()));
        }
        Ok(())
    }

    pub fn eval(&self, r2: f64) -> f64 {
        self.c_exc * (-r2 / (2.0 * self.sigma_exc * self.sigma_exc)).exp()
            - self.c_inh * (-r2 / (2.0 * self.sigma_inh * self.sigma_inh)).exp()
    }

    /// Support radius covering three inhibitory widths.
    pub fn default_radius(&self) -> usize {
        (3.0 * self.sigma_inh).ceil() as usize
    }
}

/// A sampled kernel on a `(2r+1)²` square.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    params: KernelParams,
    radius: usize,
    weights: Vec<f64>,
    exc_profile: Vec<f64>,
    inh_profile: Vec<f64>,
}

pub fn make_kernel(params: KernelParams, radius: usize) -> Result<Kernel, DnfError> {
    params.validate()?;
    let side = 2 * radius + 1;
    let r = radius as i64;
    let mut weights = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            weights.push(params.eval((dx * dx + dy * dy) as f64));
        }
    }
    let profile = |sigma: f64| -> Vec<f64> {
        (-r..=r)
            .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
            .collect()
    };
    Ok(Kernel {
        params,
        radius,
        weights,
        exc_profile: profile(params.sigma_exc),
        inh_profile: profile(params.sigma_inh),
    })
}

impl Kernel {
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Weight at offset `(dx, dy)`; zero outside the support.
    pub fn at(&self, dx: i64, dy: i64) -> f64 {
        let r = self.radius as i64;
        if dx.abs() > r || dy.abs() > r {
            return 0.0;
        }
        let side = 2 * r + 1;
        self.weights[((dy + r) * side + dx + r) as usize]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(super) fn exc_profile(&self) -> &[f64] {
        &self.exc_profile
    }

    pub(super) fn inh_profile(&self) -> &[f64] {
        &self.inh_profile
    }
}
