//! Coefficient of determination.

use super::RegressError;

/// R-squared: `1 - SS_res / SS_tot` with `SS_tot` taken about the mean of
/// `y_true`. Can be negative for models worse than the mean baseline.
pub fn r_squared(y_true: &[f64], y_pred: &[f64]) -> Result<f64, RegressError> {
    if y_true.len() != y_pred.len() || y_true.len() < 2 {
        return Err(RegressError::LengthMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in y_true {
        min = min.min(v);
        max = max.max(v);
    }
    if min == max {
        return Err(RegressError::ConstantTarget);
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}
