//! Sigma-delta spiking communication.
//!
//! A delta encoder sends the residual between a neuron's current activation
//! and the value it last transmitted, but only once that residual reaches the
//! threshold. The receiving side integrates the residuals (sigma decoding),
//! so between spikes the reconstruction lags the true value by less than the
//! threshold and equals it exactly at spike instants.

mod net;

pub use net::{dense_forward, load_net, parse_net, save_net, write_net, Activation, DenseNet, Layer, SdRunner, WeightMatrix};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdError {
    #[error("expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("spike address {address} outside population of {size}")]
    AddressOutOfRange { address: u32, size: usize },
    #[error("threshold must be finite and non-negative, got {0}")]
    BadThreshold(f64),
    #[error("layer {layer}: {reason}")]
    BadLayer { layer: usize, reason: String },
    #[error("network file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

/// Address plus signed magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradedSpike {
    pub address: u32,
    pub value: f64,
}

/// Per-neuron record of the last transmitted activation.
#[derive(Debug, Clone, PartialEq)]
pub struct SdState {
    last_sent: Vec<f64>,
}

impl SdState {
    pub fn new(size: usize) -> Self {
        SdState {
            last_sent: vec![0.0; size],
        }
    }

    pub fn size(&self) -> usize {
        self.last_sent.len()
    }

    pub fn last_sent(&self) -> &[f64] {
        &self.last_sent
    }

    /// Emits one spike per neuron whose residual reaches `threshold` (any
    /// nonzero residual when the threshold is zero).
    pub fn encode(&mut self, activations: &[f64], threshold: f64) -> Result<Vec<GradedSpike>, SdError> {
        let mut spikes = Vec::new();
        self.encode_into(activations, threshold, &mut spikes)?;
        Ok(spikes)
    }

    pub fn encode_into(&mut self, activations: &[f64], threshold: f64, out: &mut Vec<GradedSpike>) -> Result<(), SdError> {
        check_threshold(threshold)?;
        if activations.len() != self.last_sent.len() {
            return Err(SdError::SizeMismatch {
                expected: self.last_sent.len(),
                got: activations.len(),
            });
        }
        for (i, (&a, last)) in activations.iter().zip(self.last_sent.iter_mut()).enumerate() {
            let d = a - *last;
            let fire = if threshold > 0.0 { d.abs() >= threshold } else { d != 0.0 };
            if fire {
                out.push(GradedSpike {
                    address: i as u32,
                    value: d,
                });
                *last = a;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_threshold(threshold: f64) -> Result<(), SdError> {
    if threshold.is_finite() && threshold >= 0.0 {
        Ok(())
    } else {
        Err(SdError::BadThreshold(threshold))
    }
}

/// Free-function form of [`SdState::encode`].
pub fn delta_encode(state: &mut SdState, activations: &[f64], threshold: f64) -> Result<Vec<GradedSpike>, SdError> {
    state.encode(activations, threshold)
}

/// Adds every spike's value into the accumulator at its address. On error the
/// accumulator is left untouched.
pub fn sigma_decode(accumulator: &mut [f64], spikes: &[GradedSpike]) -> Result<(), SdError> {
    if let Some(s) = spikes.iter().find(|s| s.address as usize >= accumulator.len()) {
        return Err(SdError::AddressOutOfRange {
            address: s.address,
            size: accumulator.len(),
        });
    }
    for s in spikes {
        accumulator[s.address as usize] += s.value;
    }
    Ok(())
}

/// Result of pushing a sequence through a network over sigma-delta links.
#[derive(Debug, Clone, PartialEq)]
pub struct SdOutput {
    pub outputs: Vec<Vec<f64>>,
    /// Total spikes emitted by each layer's output encoder.
    pub spikes_per_layer: Vec<u64>,
}

/// Runs `inputs` through `net`, with every layer output delta-encoded and
/// sigma-decoded before it reaches the next layer (or the caller).
pub fn sd_forward(net: &DenseNet, inputs: &[Vec<f64>], threshold: f64) -> Result<SdOutput, SdError> {
    let mut runner = SdRunner::new(net, threshold)?;
    let mut outputs = Vec::with_capacity(inputs.len());
    for x in inputs {
        outputs.push(runner.step(x)?.to_vec());
    }
    Ok(SdOutput {
        outputs,
        spikes_per_layer: runner.spike_counts().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_step_through() {
        let mut enc = SdState::new(1);
        let mut acc = vec![0.0];
        let mut fired = Vec::new();
        for a in [0.0, 0.3, 0.9, 1.0] {
            let s = enc.encode(&[a], 0.5).unwrap();
            sigma_decode(&mut acc, &s).unwrap();
            fired.push(s.first().map(|s| s.value));
        }
        assert_eq!(fired, vec![None, None, Some(0.9), None]);
        assert_eq!(acc[0], 0.9);
        assert!((1.0 - acc[0]) < 0.5);
        assert!(((1.0 - acc[0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_threshold_sends_every_change() {
        let mut enc = SdState::new(1);
        let mut acc = vec![0.0];
        let seq = [0.5, 0.25, -1.0, -1.0, 3.0];
        let mut values = Vec::new();
        for a in seq {
            let s = enc.encode(&[a], 0.0).unwrap();
            sigma_decode(&mut acc, &s).unwrap();
            values.extend(s.iter().map(|s| s.value));
            assert_eq!(acc[0], a);
        }
        assert_eq!(values, vec![0.5, -0.25, -1.25, 4.0]);
    }

    #[test]
    fn constant_input_is_silent() {
        let mut enc = SdState::new(3);
        let first = enc.encode(&[1.0, 2.0, 3.0], 0.1).unwrap();
        assert_eq!(first.len(), 3);
        for _ in 0..100 {
            assert!(enc.encode(&[1.0, 2.0, 3.0], 0.1).unwrap().is_empty());
        }
    }

    #[test]
    fn errors() {
        let mut enc = SdState::new(2);
        assert!(matches!(enc.encode(&[1.0], 0.1), Err(SdError::SizeMismatch { expected: 2, got: 1 })));
        assert!(matches!(enc.encode(&[1.0, 1.0], -0.1), Err(SdError::BadThreshold(_))));
        let mut acc = vec![0.0; 2];
        let bad = [GradedSpike { address: 0, value: 1.0 }, GradedSpike { address: 2, value: 1.0 }];
        assert!(matches!(sigma_decode(&mut acc, &bad), Err(SdError::AddressOutOfRange { address: 2, size: 2 })));
        assert_eq!(acc, vec![0.0, 0.0]);
    }

    #[test]
    fn empty_spikes_leave_accumulator() {
        let mut acc = vec![1.5, -2.0];
        sigma_decode(&mut acc, &[]).unwrap();
        assert_eq!(acc, vec![1.5, -2.0]);
    }

    proptest! {
        #[test]
        fn reconstruction_within_threshold(
            seq in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 4), 1..60),
            theta in 0.01f64..3.0,
        ) {
            let mut enc = SdState::new(4);
            let mut acc = vec![0.0; 4];
            for a in &seq {
                let spikes = enc.encode(a, theta).unwrap();
                sigma_decode(&mut acc, &spikes).unwrap();
                for i in 0..4 {
                    prop_assert!((acc[i] - a[i]).abs() < theta);
                }
                for s in &spikes {
                    let i = s.address as usize;
                    prop_assert!((acc[i] - a[i]).abs() <= 1e-9 * a[i].abs().max(1.0));
                }
            }
        }

        #[test]
        fn deterministic(seq in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..30)) {
            let run = || {
                let mut enc = SdState::new(3);
                seq.iter().map(|a| enc.encode(a, 0.4).unwrap()).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
