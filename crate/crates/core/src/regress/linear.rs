//! Ordinary least squares and ridge regression via centered normal
//! equations.
//!
//! Centering handles the unpenalized intercept for both fits. Exactly
//! collinear columns (the role one-hots sum to the intercept, so the full
//! schema is always singular) surface as collapsed LDL^T pivots; those
//! coefficients are forced to zero and the column names recorded in the
//! model notes. The result is still a least-squares minimizer, so residual
//! orthogonality holds across all columns.

use std::time::Instant;

use crate::matrix::{dot, solve_ldlt, Matrix};

use super::{LinearModel, ModelMeta, RegressError};

fn validate(x: &Matrix, y: &[f64]) -> Result<(), RegressError> {
    if x.rows() != y.len() {
        return Err(RegressError::LengthMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFiniteInput);
    }
    Ok(())
}

/// Center the columns of `x` and the target; returns (xc, yc, col_means, y_mean).
pub(super) fn center(x: &Matrix, y: &[f64]) -> (Matrix, Vec<f64>, Vec<f64>, f64) {
    let means = x.col_means();
    let mut xc = x.clone();
    for r in 0..xc.rows() {
        let row = xc.row_mut(r);
        for (c, m) in means.iter().enumerate() {
            row[c] -= m;
        }
    }
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    (xc, yc, means, y_mean)
}

fn solve_normal_equations(
    xc: &Matrix,
    yc: &[f64],
    l2_diag: f64,
) -> (Vec<f64>, Vec<usize>) {
    let p = xc.cols();
    let mut g = xc.gram();
    if l2_diag > 0.0 {
        for i in 0..p {
            g[i * p + i] += l2_diag;
        }
    }
    let b = xc.tmatvec(yc);
    match solve_ldlt(&g, &b, p) {
        Some(sol) => (sol.x, sol.dropped),
        // Every pivot collapsed: no usable column variance at all. The
        // least-squares answer is the mean-only model.
        None => (vec![0.0; p], (0..p).collect()),
    }
}

/// Least-squares fit minimizing the sum of squared residuals.
pub fn fit_ols(x: &Matrix, y: &[f64], columns: &[String]) -> Result<LinearModel, RegressError> {
    validate(x, y)?;
    let (n, p) = (x.rows(), x.cols());
    if n <= p {
        return Err(RegressError::RankDeficient {
            columns: columns.to_vec(),
            n,
            p,
        });
    }
    let started = Instant::now();
    let (xc, yc, means, y_mean) = center(x, y);
    let (w, dropped) = solve_normal_equations(&xc, &yc, 0.0);
    let intercept = y_mean - dot(&means, &w);
    let mut meta = ModelMeta::new("LinearRegression", serde_json::json!({}), columns);
    if !dropped.is_empty() {
        let names: Vec<&str> = dropped.iter().map(|&i| columns[i].as_str()).collect();
        meta.notes
            .push(format!("collinear columns zeroed: {names:?}"));
    }
    meta.fit_time_s = started.elapsed().as_secs_f64();
    Ok(LinearModel {
        intercept,
        coefficients: w,
        meta,
    })
}

/// Ridge fit minimizing `||y - a0 - Xw||^2 + alpha * ||w||^2` with the
/// intercept unpenalized.
pub fn fit_ridge(
    x: &Matrix,
    y: &[f64],
    alpha: f64,
    columns: &[String],
) -> Result<LinearModel, RegressError> {
    validate(x, y)?;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(RegressError::NonFiniteInput);
    }
    let started = Instant::now();
    let (xc, yc, means, y_mean) = center(x, y);
    let (w, dropped) = solve_normal_equations(&xc, &yc, alpha);
    let intercept = y_mean - dot(&means, &w);
    let mut meta = ModelMeta::new("Ridge", serde_json::json!({ "alpha": alpha }), columns);
    if !dropped.is_empty() {
        let names: Vec<&str> = dropped.iter().map(|&i| columns[i].as_str()).collect();
        meta.notes
            .push(format!("collinear columns zeroed: {names:?}"));
    }
    meta.fit_time_s = started.elapsed().as_secs_f64();
    Ok(LinearModel {
        intercept,
        coefficients: w,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn noiseless_line_is_fit_exactly() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let y = vec![2.0, 4.0, 6.0];
        let m = fit_ols(&x, &y, &cols(1)).unwrap();
        assert!(m.intercept.abs() < 1e-12);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_target_gives_mean_only_model() {
        let x = Matrix::from_rows(&[vec![1.0], vec![5.0], vec![9.0]]);
        let y = vec![3.0, 3.0, 3.0];
        let m = fit_ols(&x, &y, &cols(1)).unwrap();
        assert_eq!(m.coefficients, vec![0.0]);
        assert!((m.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_are_orthogonal_to_columns_even_when_collinear() {
        // Third column = first + second: exactly dependent.
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let a = ((i * 13 + 5) % 17) as f64;
                let b = ((i * 7 + 2) % 11) as f64;
                vec![a, b, a + b]
            })
            .collect();
        let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[0] * 2.0 - r[1] + (i % 3) as f64).collect();
        let x = Matrix::from_rows(&rows);
        let m = fit_ols(&x, &y, &cols(3)).unwrap();
        assert!(!m.meta.notes.is_empty());
        let pred = m.predict_matrix(&x);
        let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let g = x.tmatvec(&resid);
        for v in g {
            assert!(v.abs() < 1e-8 * x.rows() as f64, "orthogonality violated: {v}");
        }
        assert!(resid.iter().sum::<f64>().abs() < 1e-8);
    }

    #[test]
    fn ols_rejects_underdetermined_systems() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let y = vec![1.0, 2.0];
        assert!(matches!(
            fit_ols(&x, &y, &cols(2)),
            Err(RegressError::RankDeficient { n: 2, p: 2, .. })
        ));
    }

    #[test]
    fn ridge_matches_one_dimensional_closed_form() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![0.0], vec![1.0]]);
        let y = vec![-2.0, 0.0, 2.0];
        let m = fit_ridge(&x, &y, 0.5, &cols(1)).unwrap();
        // Sxy / (Sxx + alpha) = 4 / 2.5
        assert!((m.coefficients[0] - 1.6).abs() < 1e-12);
        assert!(m.intercept.abs() < 1e-12);
    }

    #[test]
    fn ridge_at_zero_alpha_equals_ols() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64, ((i * 3) % 5) as f64, ((i * 11) % 13) as f64])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.5 * r[0] - 0.5 * r[1] + 0.25 * r[2] + 3.0)
            .collect();
        let x = Matrix::from_rows(&rows);
        let ols = fit_ols(&x, &y, &cols(3)).unwrap();
        let ridge = fit_ridge(&x, &y, 0.0, &cols(3)).unwrap();
        for (a, b) in ols.coefficients.iter().zip(&ridge.coefficients) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((ols.intercept - ridge.intercept).abs() < 1e-8);
    }

    #[test]
    fn huge_alpha_shrinks_slopes_to_zero_and_intercept_to_mean() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let y = vec![1.0, 5.0, 2.0, 8.0];
        let m = fit_ridge(&x, &y, 1e6, &cols(1)).unwrap();
        assert!(m.coefficients[0].abs() < 1e-4);
        let mean = 4.0;
        assert!((m.intercept - mean).abs() < 2e-2);
    }
}
