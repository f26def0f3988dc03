use super::{PitchCalibration, ThereminError};

/// Least-squares fit of `log2 f = log2 f_ref + (d_ref − d)/s` to
/// `(distance m, frequency Hz)` samples.
///
/// The law has two degrees of freedom, so the reference frequency is chosen
/// by the caller and the fit returns the distance that produces it.
pub fn calibrate_pitch(samples: &[(f64, f64)], f_ref: f64) -> Result<PitchCalibration, ThereminError> {
    if !(f_ref > 0.0 && f_ref.is_finite()) {
        return Err(ThereminError::BadCalibration(format!("reference frequency {f_ref}")));
    }
    if samples.iter().any(|&(d, f)| !d.is_finite() || !(f > 0.0 && f.is_finite())) {
        return Err(ThereminError::BadCalibration("non-finite distance or non-positive frequency".into()));
    }
    let n = samples.len() as f64;
    let first = samples.first().map(|s| s.0);
    if first.is_none() || samples.iter().all(|s| Some(s.0) == first) {
        return Err(ThereminError::Underdetermined);
    }
    let md = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1.log2()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(d, f) in samples {
        sxy += (d - md) * (f.log2() - my);
        sxx += (d - md) * (d - md);
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(ThereminError::BadSlope);
    }
    let s = -1.0 / slope;
    // line passes through the centroid: my = log2 f_ref + (d_ref − md)/s
    let d_ref = md + s * (my - f_ref.log2());
    Ok(PitchCalibration { d_ref, f_ref, s })
}

/// Sum of squared log2-frequency residuals.
pub fn calibration_residual(cal: &PitchCalibration, samples: &[(f64, f64)]) -> f64 {
    samples
        .iter()
        .map(|&(d, f)| (f.log2() - cal.freq_at(d).log2()).powi(2))
        .sum()
}
