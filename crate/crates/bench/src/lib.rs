//! Benchmark fixtures shared by the criterion benches.

use neurotheremin::aer::{SafeFrame, SafeRecord};
use neurotheremin::event::{synth_hand_events, waving_hands, EventStream, Resolution, SynthParams};
use neurotheremin::sigma_delta::{Activation, DenseNet, Layer, WeightMatrix};

pub const SENSOR: Resolution = Resolution::new(240, 180);

/// One second of two waving hands at sensor resolution.
pub fn waving_stream(seed: u64) -> EventStream {
    let traj = waving_hands(SENSOR, 1_000_000, 30.0, 500_000);
    synth_hand_events(&traj, &SynthParams::new(SENSOR, 8.0, seed)).expect("valid trajectory")
}

pub fn frame(records: usize) -> SafeFrame {
    SafeFrame {
        seq: 7,
        timestamp: 123_456,
        records: (0..records)
            .map(|i| SafeRecord {
                address: i as u32 * 31,
                value: i as i16 - 50,
                dt_offset: i as u16,
            })
            .collect(),
    }
}

/// Two dense ReLU layers with deterministic weights.
pub fn mlp(input: usize, hidden: usize, output: usize) -> DenseNet {
    let w = |rows: usize, cols: usize| {
        WeightMatrix::dense(
            rows,
            cols,
            (0..rows * cols).map(|k| ((k * 7919 % 97) as f64 / 97.0 - 0.5) * 0.2).collect(),
        )
    };
    DenseNet::new(vec![
        Layer::new(w(hidden, input), vec![0.0; hidden], Activation::Relu),
        Layer::new(w(output, hidden), vec![0.0; output], Activation::Relu),
    ])
    .expect("consistent shapes")
}
