//! Min-max δ against exhaustive triple enumeration and closed-form cases.

mod common;

use common::{ball, rng, vector};
use hypsiam_core::hyperbolicity::{delta, delta_report, distance_matrix, gromov_matrix, relative_delta, GromovMatrix};
use hypsiam_core::Metric;
use ndarray::Array2;
use rand::Rng;

/// `max over (y, z, w) of min((y,w)_x, (w,z)_x) − (y,z)_x` straight from a distance matrix.
fn brute_force(d: &Array2<f64>, base: usize) -> f64 {
    let n = d.nrows();
    let g = |y: usize, z: usize| 0.5 * (d[[base, y]] + d[[base, z]] - d[[y, z]]);
    let mut best = f64::NEG_INFINITY;
    for y in 0..n {
        for z in 0..n {
            for w in 0..n {
                best = best.max(g(y, w).min(g(w, z)) - g(y, z));
            }
        }
    }
    best
}

fn random_set(r: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = r.random_range(2..=12);
    let dim = r.random_range(1..=5);
    (0..n).map(|_| vector(r, dim, 0.9)).collect()
}

#[test]
fn minmax_matches_exhaustive_enumeration() {
    let mut r = rng(10);
    let poincare = Metric::Poincare(ball(0.7));
    for i in 0..200 {
        let pts = random_set(&mut r);
        let metric = if i % 2 == 0 { &Metric::Euclidean } else { &poincare };
        let base = r.random_range(0..pts.len());
        let d = distance_matrix(&pts, metric).unwrap();
        let oracle = brute_force(&d, base);
        let got = delta(&pts, base, metric).unwrap();
        assert!((got - oracle).abs() <= 1e-10, "set {i}: {got} vs {oracle}");
    }
}

/// Path metric of a random weighted tree on `n` nodes (node i hangs off a random earlier node).
fn tree_metric(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut d = Array2::<f64>::zeros((n, n));
    for i in 1..n {
        let parent = r.random_range(0..i);
        let w = r.random_range(0.1..3.0);
        for j in 0..i {
            let v = d[[parent, j]] + w;
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

#[test]
fn tree_metrics_have_zero_delta() {
    let mut r = rng(11);
    for _ in 0..50 {
        let n = r.random_range(4..40);
        let d = tree_metric(&mut r, n);
        let base = r.random_range(0..n);
        let delta = GromovMatrix::from_distances(&d, base).unwrap().delta();
        assert!(delta.abs() <= 1e-10, "{delta}");
    }
}

#[test]
fn unit_square_closed_form() {
    let sq = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let r = delta_report(&sq, 0, &Metric::Euclidean).unwrap();
    assert!((r.delta - (2f64.sqrt() - 1.0)).abs() <= 1e-12);
    assert!((r.relative().unwrap() - (2.0 - 2f64.sqrt())).abs() <= 1e-12);
}

#[test]
fn delta_is_nonnegative_and_zero_for_three_points() {
    let mut r = rng(12);
    for _ in 0..200 {
        let pts = random_set(&mut r);
        assert!(delta(&pts, 0, &Metric::Euclidean).unwrap() >= 0.0);
        let three: Vec<Vec<f64>> = pts.iter().take(3).cloned().collect();
        if three.len() >= 2 {
            assert!(delta(&three, 0, &Metric::Euclidean).unwrap().abs() <= 1e-12);
        }
    }
}

#[test]
fn relative_delta_lies_in_unit_interval() {
    let mut r = rng(13);
    for _ in 0..1000 {
        let mut pts = random_set(&mut r);
        if pts.len() < 2 {
            continue;
        }
        pts[0].iter_mut().for_each(|v| *v += 1.0);
        let rel = relative_delta(&pts, 0, &Metric::Euclidean).unwrap();
        assert!((0.0..=1.0).contains(&rel), "{rel}");
    }
}

#[test]
fn relative_delta_is_scale_invariant() {
    let mut r = rng(14);
    for _ in 0..100 {
        let pts: Vec<Vec<f64>> = (0..10).map(|_| vector(&mut r, 3, 1.0)).collect();
        let alpha = r.random_range(0.01..100.0);
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * alpha).collect()).collect();
        let a = relative_delta(&pts, 0, &Metric::Euclidean).unwrap();
        let b = relative_delta(&scaled, 0, &Metric::Euclidean).unwrap();
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
}

#[test]
fn gromov_matrix_is_symmetric_with_zero_base_row() {
    let mut r = rng(15);
    for _ in 0..100 {
        let pts = random_set(&mut r);
        let base = r.random_range(0..pts.len());
        let g = gromov_matrix(&pts, base, &Metric::Euclidean).unwrap();
        let a = g.matrix();
        assert_eq!(a, &a.t());
        assert!(a.row(base).iter().all(|&v| v == 0.0));
        assert!(a.column(base).iter().all(|&v| v == 0.0));
    }
}
