//! Seeded generator of hierarchical change/no-change pairs.
//!
//! Leaf prototypes of a random tree stand for tree states. A "no change" pair
//! observes one state twice under a shared nuisance offset; a "change" pair
//! observes two different states under independent offsets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hyplayers::Label;
use crate::linalg::norm;
use crate::siamese::PairSample;

/// Share of "change" pairs by default (72 / 28 split).
pub const DEFAULT_CHANGE_FRACTION: f64 = 0.72;
pub const DEFAULT_TRAIN_COUNT: usize = 2000;
pub const DEFAULT_TEST_COUNT: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchySpec {
    pub depth: usize,
    pub branching: usize,
    pub dim: usize,
    pub class_sep: f64,
    pub nuisance_strength: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for HierarchySpec {
    fn default() -> Self {
        Self { depth: 3, branching: 3, dim: 16, class_sep: 1.0, nuisance_strength: 0.5, noise_std: 0.1, seed: 42 }
    }
}

impl HierarchySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.depth < 1 {
            return bad(format!("depth must be at least 1, got {}", self.depth));
        }
        if self.branching < 2 {
            return bad(format!("branching must be at least 2, got {}", self.branching));
        }
        if self.dim < 1 {
            return bad("dim must be at least 1".into());
        }
        if !(self.class_sep.is_finite() && self.class_sep > 0.0) {
            return bad(format!("class_sep must be positive, got {}", self.class_sep));
        }
        for (name, v) in [("nuisance_strength", self.nuisance_strength), ("noise_std", self.noise_std)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.branching.checked_pow(self.depth as u32).is_none_or(|n| n > 1 << 20) {
            return bad("tree has too many leaves".into());
        }
        Ok(())
    }

    pub fn leaf_count(&self) -> usize {
        self.branching.pow(self.depth as u32)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, dim: usize, sd: f64) -> Vec<f64> {
    (0..dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Leaf vectors of a rooted tree; a node at level `l` (root = 0) offsets its
/// parent by `N(0, (class_sep / l)²)` per coordinate.
pub fn build_state_tree(spec: &HierarchySpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let mut rng = spec.rng(0);
    let mut level = vec![vec![0.0; spec.dim]];
    for l in 1..=spec.depth {
        let sd = spec.class_sep / l as f64;
        level = level
            .iter()
            .flat_map(|parent| {
                (0..spec.branching)
                    .map(|_| parent.iter().zip(gaussian(&mut rng, spec.dim, sd)).map(|(p, o)| p + o).collect())
                    .collect::<Vec<Vec<f64>>>()
            })
            .collect();
    }
    Ok(level)
}

fn nuisance<R: Rng + ?Sized>(rng: &mut R, dim: usize, strength: f64) -> Vec<f64> {
    if strength == 0.0 {
        return vec![0.0; dim];
    }
    let dir = gaussian(rng, dim, 1.0);
    let n = norm(&dir);
    let len = rng.random_range(0.0..=strength);
    dir.iter().map(|d| d * len / n).collect()
}

fn observe<R: Rng + ?Sized>(rng: &mut R, state: &[f64], offset: &[f64], noise_std: f64) -> Vec<f64> {
    let noise = gaussian(rng, state.len(), noise_std);
    state.iter().zip(offset).zip(noise).map(|((s, o), e)| s + o + e).collect()
}

/// Draws `count` labelled pairs; exactly `round(count·change_fraction)` are changes.
pub fn sample_pairs<R: Rng + ?Sized>(
    prototypes: &[Vec<f64>],
    spec: &HierarchySpec,
    count: usize,
    change_fraction: f64,
    rng: &mut R,
) -> Result<Vec<PairSample>> {
    if count == 0 {
        return Err(Error::InvalidParameter("pair count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&change_fraction) {
        return Err(Error::InvalidParameter(format!("change fraction must lie in [0, 1], got {change_fraction}")));
    }
    if prototypes.is_empty() {
        return Err(Error::Empty("prototypes"));
    }
    let changes = (count as f64 * change_fraction).round() as usize;
    if changes > 0 && prototypes.len() < 2 {
        return Err(Error::InvalidParameter("change pairs need at least two prototypes".into()));
    }
    let mut labels: Vec<Label> = (0..count).map(|i| Label::from_bool(i < changes)).collect();
    labels.shuffle(rng);

    let dim = prototypes[0].len();
    let n = prototypes.len();
    Ok(labels
        .into_iter()
        .map(|label| match label {
            Label::NoChange => {
                let s = &prototypes[rng.random_range(0..n)];
                let shared = nuisance(rng, dim, spec.nuisance_strength);
                let x1 = observe(rng, s, &shared, spec.noise_std);
                let x2 = observe(rng, s, &shared, spec.noise_std);
                PairSample { x1, x2, label }
            }
            Label::Change => {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                let o1 = nuisance(rng, dim, spec.nuisance_strength);
                let o2 = nuisance(rng, dim, spec.nuisance_strength);
                let x1 = observe(rng, &prototypes[a], &o1, spec.noise_std);
                let x2 = observe(rng, &prototypes[b], &o2, spec.noise_std);
                PairSample { x1, x2, label }
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedDataset {
    pub train: Vec<PairSample>,
    pub test: Vec<PairSample>,
    pub change_fraction: f64,
}

/// Train and test splits over one shared state tree, on separate random streams.
pub fn generate(spec: &HierarchySpec, train_count: usize, test_count: usize, change_fraction: f64) -> Result<GeneratedDataset> {
    let prototypes = build_state_tree(spec)?;
    let train = sample_pairs(&prototypes, spec, train_count, change_fraction, &mut spec.rng(1))?;
    let test = sample_pairs(&prototypes, spec, test_count, change_fraction, &mut spec.rng(2))?;
    Ok(GeneratedDataset { train, test, change_fraction })
}

/// Index of the prototype closest to `x` (Euclidean).
pub fn nearest_prototype(prototypes: &[Vec<f64>], x: &[f64]) -> usize {
    let d = |p: &Vec<f64>| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    (0..prototypes.len()).min_by(|&i, &j| d(&prototypes[i]).total_cmp(&d(&prototypes[j]))).unwrap_or(0)
}
