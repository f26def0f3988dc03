//! Binary portable graymap (P5) output.

use crate::event::Resolution;

/// 16-bit P5 image; `values` are row-major and mapped linearly from
/// `[lo, hi]` to `[0, 65535]`, clamping outside that range.
pub fn encode16(res: Resolution, values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", res.width, res.height).into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    for &v in values.iter().take(res.cells()) {
        let g = (((v - lo) / span).clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&g.to_be_bytes());
    }
    out
}
