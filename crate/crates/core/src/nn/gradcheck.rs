//! Central finite-difference gradient oracle. Deliberately independent of
//! every backward implementation: it only evaluates forward losses.

/// Central finite-difference gradient of `loss` at `x0`.
pub fn finite_difference_gradient<F>(mut loss: F, x0: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x0.len()];
    let mut x = x0.to_vec();
    for i in 0..x0.len() {
        x[i] = x0[i] + step;
        let plus = loss(&x);
        x[i] = x0[i] - step;
        let minus = loss(&x);
        x[i] = x0[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Worst relative error between an analytic and a finite-difference
/// gradient. Coordinates where both are essentially zero are skipped.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst: f64 = 0.0;
    for (&a, &n) in analytic.iter().zip(numeric) {
        let scale = a.abs().max(n.abs());
        if scale < 1e-7 {
            continue;
        }
        worst = worst.max((a - n).abs() / scale.max(1e-2));
    }
    worst
}
