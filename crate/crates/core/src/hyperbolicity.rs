//! Gromov δ-hyperbolicity of finite point sets.
//!
//! Pairwise Gromov products relative to a base point form a matrix `A`; the
//! pointed δ is the largest entry of `(A ⊕ A) − A`, where `⊕` is the min-max
//! matrix product `(A ⊕ B)_ij = max_k min(A_ik, B_kj)`. The relative value
//! `2δ / diam` lies in `[0, 1]`.

use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ball::PoincareBall;
use crate::error::{check_dim, Error, Result};

/// Largest point set handled by the exact O(n³) computation.
pub const EXACT_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    Euclidean,
    /// Points are projected into the ball before distances are taken.
    Poincare(PoincareBall),
}

impl Metric {
    pub fn poincare(c: f64) -> Result<Self> {
        Ok(Metric::Poincare(PoincareBall::from_c(c)?))
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        match self {
            Metric::Euclidean => Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()),
            Metric::Poincare(ball) => ball.distance(&ball.project(x), &ball.project(y)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Poincare(_) => "poincare",
        }
    }
}

/// `(y, z)_x = ½(d(x, y) + d(x, z) − d(y, z))`.
pub fn gromov_product(x: &[f64], y: &[f64], z: &[f64], metric: &Metric) -> Result<f64> {
    Ok(0.5 * (metric.distance(x, y)? + metric.distance(x, z)? - metric.distance(y, z)?))
}

/// Symmetric pairwise distance matrix.
pub fn distance_matrix(points: &[Vec<f64>], metric: &Metric) -> Result<Array2<f64>> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Empty("point set"));
    }
    let dim = points[0].len();
    for p in points {
        check_dim(dim, p.len())?;
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| metric.distance(&points[i], &points[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut d = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            d[[i, i + 1 + off]] = *v;
            d[[i + 1 + off, i]] = *v;
        }
    }
    Ok(d)
}

/// Pairwise Gromov products `A_ij = (y_i, y_j)_{x_base}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GromovMatrix {
    a: Array2<f64>,
    base: usize,
}

impl GromovMatrix {
    pub fn from_distances(d: &Array2<f64>, base: usize) -> Result<Self> {
        let n = d.nrows();
        check_dim(n, d.ncols())?;
        if base >= n {
            return Err(Error::InvalidParameter(format!("base index {base} out of range for {n} points")));
        }
        let a = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (d[[base, i]] + d[[base, j]] - d[[i, j]]));
        Ok(Self { a, base })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn base_index(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `max_ij [(A ⊕ A)_ij − A_ij]` without materializing `A ⊕ A`.
    pub fn delta(&self) -> f64 {
        let a = &self.a;
        let n = a.nrows();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let ri = a.row(i);
                let mut best = f64::NEG_INFINITY;
                for j in i..n {
                    let rj = a.row(j);
                    let mm = ri.iter().zip(rj.iter()).fold(f64::NEG_INFINITY, |acc, (x, y)| acc.max(x.min(*y)));
                    best = best.max(mm - a[[i, j]]);
                }
                best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }
}

pub fn gromov_matrix(points: &[Vec<f64>], base: usize, metric: &Metric) -> Result<GromovMatrix> {
    check_min_points(points.len())?;
    GromovMatrix::from_distances(&distance_matrix(points, metric)?, base)
}

/// Min-max matrix product `(A ⊕ B)_ij = max_k min(A_ik, B_kj)`.
pub fn minmax_product(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    check_dim(a.ncols(), b.nrows())?;
    Ok(Array2::from_shape_fn((a.nrows(), b.ncols()), |(i, j)| {
        (0..a.ncols()).fold(f64::NEG_INFINITY, |acc, k| acc.max(a[[i, k]].min(b[[k, j]])))
    }))
}

fn check_min_points(n: usize) -> Result<()> {
    match n {
        0 => Err(Error::Empty("point set")),
        1 => Err(Error::InvalidParameter("δ needs at least two points".into())),
        _ => Ok(()),
    }
}

/// δ, diameter and relative δ of one point set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaReport {
    pub delta: f64,
    pub diameter: f64,
}

impl DeltaReport {
    /// `2δ / diam`; fails on a zero-diameter set.
    pub fn relative(&self) -> Result<f64> {
        if self.diameter > 0.0 {
            Ok(2.0 * self.delta / self.diameter)
        } else {
            Err(Error::ZeroDiameter)
        }
    }
}

/// Exact pointed δ together with the set's diameter.
pub fn delta_report(points: &[Vec<f64>], base: usize, metric: &Metric) -> Result<DeltaReport> {
    check_min_points(points.len())?;
    if points.len() > EXACT_LIMIT {
        return Err(Error::TooManyPoints { n: points.len(), limit: EXACT_LIMIT });
    }
    let d = distance_matrix(points, metric)?;
    let diameter = d.iter().copied().fold(0.0, f64::max);
    let delta = GromovMatrix::from_distances(&d, base)?.delta();
    Ok(DeltaReport { delta, diameter })
}

pub fn delta(points: &[Vec<f64>], base: usize, metric: &Metric) -> Result<f64> {
    Ok(delta_report(points, base, metric)?.delta)
}

pub fn relative_delta(points: &[Vec<f64>], base: usize, metric: &Metric) -> Result<f64> {
    delta_report(points, base, metric)?.relative()
}

/// Summary over random subsamples.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDelta {
    pub delta_mean: f64,
    pub delta_std: f64,
    pub trials: Vec<DeltaReport>,
}

impl SampledDelta {
    /// Mean and standard deviation of the per-trial relative δ; fails if any
    /// subsample has zero diameter.
    pub fn relative(&self) -> Result<(f64, f64)> {
        let values: Vec<f64> = self.trials.iter().map(|r| r.relative()).collect::<Result<_>>()?;
        Ok(mean_std(&values))
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Relative δ over `trials` subsamples of `sample_size` points drawn without
/// replacement. Trial `i` draws from its own ChaCha stream `(seed, i)` and uses
/// its first drawn point as base, so results do not depend on scheduling.
pub fn delta_sampled(points: &[Vec<f64>], sample_size: usize, trials: usize, seed: u64, metric: &Metric) -> Result<SampledDelta> {
    if sample_size < 4 {
        return Err(Error::InvalidParameter(format!("sample size must be at least 4, got {sample_size}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if sample_size > points.len() {
        return Err(Error::InvalidParameter(format!("sample size {sample_size} exceeds {} points", points.len())));
    }
    let reports: Vec<DeltaReport> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let picked: Vec<Vec<f64>> = index::sample(&mut rng, points.len(), sample_size)
                .into_iter()
                .map(|i| points[i].clone())
                .collect();
            delta_report(&picked, 0, metric)
        })
        .collect::<Result<_>>()?;
    let deltas: Vec<f64> = reports.iter().map(|r| r.delta).collect();
    let (delta_mean, delta_std) = mean_std(&deltas);
    Ok(SampledDelta { delta_mean, delta_std, trials: reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]
    }

    #[test]
    fn gromov_product_examples() {
        let e = Metric::Euclidean;
        let x = [0.0, 0.0];
        let y = [1.0, 0.0];
        assert!((gromov_product(&x, &y, &y, &e).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gromov_product(&x, &y, &[-1.0, 0.0], &e).unwrap(), 0.0);
        let g = gromov_product(&x, &y, &[0.0, 1.0], &e).unwrap();
        assert!((g - 0.292_893_218_813_452_5).abs() < 1e-15);
        assert!(gromov_product(&x, &[1.0], &y, &e).is_err());
    }

    #[test]
    fn gromov_matrix_examples() {
        let g = gromov_matrix(&[vec![0.0, 0.0], vec![3.0, 4.0]], 0, &Metric::Euclidean).unwrap();
        assert_eq!(g.matrix().row(0).to_vec(), vec![0.0, 0.0]);
        assert_eq!(g.matrix()[[1, 1]], 5.0);

        let g = gromov_matrix(&square(), 0, &Metric::Euclidean).unwrap();
        let row: Vec<f64> = g.matrix().row(1).to_vec();
        let expected = [0.0, 1.0, 1.0 - std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        for (a, e) in row.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert_eq!(g.matrix(), &g.matrix().t());
        assert!(gromov_matrix(&[], 0, &Metric::Euclidean).is_err());
        assert!(gromov_matrix(&square(), 9, &Metric::Euclidean).is_err());
    }

    #[test]
    fn minmax_product_examples() {
        let a = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(minmax_product(&a, &a).unwrap(), a);
        let z = Array2::<f64>::zeros((3, 3));
        assert_eq!(minmax_product(&z, &z).unwrap(), z);
        let p = minmax_product(&Array2::from_elem((1, 1), 2.0), &Array2::from_elem((1, 1), 0.5)).unwrap();
        assert_eq!(p[[0, 0]], 0.5);
        assert!(minmax_product(&Array2::zeros((2, 3)), &Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn fused_delta_matches_explicit_product() {
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![(i as f64 * 1.7).sin(), (i as f64 * 0.3).cos() * 2.0]).collect();
        let g = gromov_matrix(&pts, 2, &Metric::Euclidean).unwrap();
        let p = minmax_product(g.matrix(), g.matrix()).unwrap();
        let explicit = (&p - g.matrix()).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(g.delta(), explicit);
    }

    #[test]
    fn square_delta_and_relative() {
        let r = delta_report(&square(), 0, &Metric::Euclidean).unwrap();
        assert!((r.delta - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((r.relative().unwrap() - (2.0 - 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn star_tree_has_zero_delta() {
        // hub 0; four leaves at distance 1 from the hub and 2 from each other
        let mut d = Array2::from_elem((5, 5), 2.0);
        for i in 0..5 {
            d[[i, i]] = 0.0;
            d[[0, i]] = if i == 0 { 0.0 } else { 1.0 };
            d[[i, 0]] = d[[0, i]];
        }
        assert_eq!(GromovMatrix::from_distances(&d, 0).unwrap().delta(), 0.0);
    }

    #[test]
    fn small_sets_have_zero_delta() {
        let e = Metric::Euclidean;
        assert_eq!(delta(&[vec![0.0, 1.0], vec![2.0, 3.0]], 1, &e).unwrap(), 0.0);
        let three = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![-1.0, 0.5]];
        for base in 0..3 {
            assert!(delta(&three, base, &e).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let same = vec![vec![1.0, 1.0]; 3];
        assert!(matches!(relative_delta(&same, 0, &Metric::Euclidean), Err(Error::ZeroDiameter)));
        assert!(delta(&[vec![1.0]], 0, &Metric::Euclidean).is_err());
        let big: Vec<Vec<f64>> = (0..EXACT_LIMIT + 1).map(|i| vec![i as f64]).collect();
        assert!(matches!(delta(&big, 0, &Metric::Euclidean), Err(Error::TooManyPoints { .. })));
    }

    #[test]
    fn poincare_metric_projects_outside_points() {
        let m = Metric::poincare(1.0).unwrap();
        let d = m.distance(&[5.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(d.is_finite() && d > 10.0);
    }

    #[test]
    fn sampled_line_is_tree_like_and_deterministic() {
        let line: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64 * 0.5, 0.0]).collect();
        let s = delta_sampled(&line, 10, 5, 7, &Metric::Euclidean).unwrap();
        assert!(s.trials.iter().all(|t| t.delta.abs() < 1e-12));
        assert!(s.relative().unwrap().0.abs() < 1e-12);
        assert_eq!(s, delta_sampled(&line, 10, 5, 7, &Metric::Euclidean).unwrap());
        assert!(delta_sampled(&line, 61, 1, 7, &Metric::Euclidean).is_err());
        assert!(delta_sampled(&line, 3, 1, 7, &Metric::Euclidean).is_err());
    }

    #[test]
    fn mean_std_single_value() {
        assert_eq!(mean_std(&[2.5]), (2.5, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
