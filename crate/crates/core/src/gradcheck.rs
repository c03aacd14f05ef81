//! Central finite differences for verifying analytic derivatives.
//!
//! These routines only evaluate the function being checked; they never touch
//! the analytic derivative code paths.

use crate::linalg::Jacobian;

/// Step used by the gradient suites (64-bit central differences).
pub const FD_STEP: f64 = 1e-6;

/// Agreement threshold for analytic vs finite-difference derivatives.
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// Magnitude below which entries are compared absolutely instead of relatively.
///
/// Central differences at `h = 1e-6` carry round-off of roughly `1e-10·|f|/h`,
/// so entries much smaller than this are dominated by noise.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// Central-difference Jacobian of a vector-valued function.
pub fn central_jacobian<F>(f: F, point: &[f64], h: f64) -> Jacobian
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let rows = f(point).len();
    let cols = point.len();
    let mut columns = Vec::with_capacity(cols);
    let mut probe = point.to_vec();
    for j in 0..cols {
        probe[j] = point[j] + h;
        let plus = f(&probe);
        probe[j] = point[j] - h;
        let minus = f(&probe);
        probe[j] = point[j];
        columns.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<_>>());
    }
    let mut jac = Jacobian::zeros(rows, cols);
    for (j, col) in columns.iter().enumerate() {
        let mut e = vec![0.0; cols];
        e[j] = 1.0;
        jac.add_outer(1.0, col, &e);
    }
    jac
}

/// Central-difference gradient of a scalar function.
pub fn central_gradient<F>(f: F, point: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = point.to_vec();
    (0..point.len())
        .map(|j| {
            probe[j] = point[j] + h;
            let plus = f(&probe);
            probe[j] = point[j] - h;
            let minus = f(&probe);
            probe[j] = point[j];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Largest elementwise [`relative_error`]; `INFINITY` on length mismatch or NaN.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    if analytic.len() != numeric.len() {
        return f64::INFINITY;
    }
    analytic.iter().zip(numeric).fold(0.0, |acc, (a, b)| {
        let e = relative_error(*a, *b);
        if e.is_nan() {
            f64::INFINITY
        } else {
            acc.max(e)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let g = central_gradient(|v| v[0] * v[0] + 3.0 * v[0] * v[1], &[1.0, 2.0], FD_STEP);
        assert!(max_relative_error(&g, &[8.0, 3.0]) < 1e-8);
    }

    #[test]
    fn jacobian_layout_is_row_major_out_by_in() {
        let j = central_jacobian(|v| vec![v[0] * 2.0, v[1] * v[0]], &[1.0, 3.0], FD_STEP);
        assert!((j.get(0, 0) - 2.0).abs() < 1e-8);
        assert!(j.get(0, 1).abs() < 1e-8);
        assert!((j.get(1, 0) - 3.0).abs() < 1e-8);
        assert!((j.get(1, 1) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn relative_error_uses_floor_for_tiny_entries() {
        assert!(relative_error(1e-12, 2e-12) < 1e-8);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(max_relative_error(&[1.0], &[1.0, 2.0]), f64::INFINITY);
        assert_eq!(max_relative_error(&[f64::NAN], &[1.0]), f64::INFINITY);
    }
}
