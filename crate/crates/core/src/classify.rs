//! Nearest-neighbour classification over precomputed distance matrices.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Grid resolution of the weight search: the simplex is sampled in steps of `1/WEIGHT_STEPS`.
pub const WEIGHT_STEPS: usize = 20;

/// Nonnegative weights of the four quadrant distances, summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantWeights(pub [f64; 4]);

impl QuadrantWeights {
    pub fn new(w: [f64; 4]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(
                "quadrant weights must be finite and nonnegative",
            ));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                what: "sum of quadrant weights",
                value: s,
                domain: "{1}",
            });
        }
        Ok(QuadrantWeights(w))
    }

    pub fn uniform() -> Self {
        QuadrantWeights([0.25; 4])
    }

    /// Weighted sum of four equally shaped distance matrices.
    pub fn fuse(&self, parts: [&DMatrix<f64>; 4]) -> Result<DMatrix<f64>> {
        let shape = parts[0].shape();
        if parts.iter().any(|p| p.shape() != shape) {
            return Err(Error::invalid("quadrant distance matrices differ in shape"));
        }
        let mut out = DMatrix::zeros(shape.0, shape.1);
        for (w, p) in self.0.iter().zip(parts) {
            out += p * *w;
        }
        Ok(out)
    }
}

/// Index and distance of the nearest finite entry of `row`, optionally skipping one index.
///
/// Ties go to the lowest index; NaN entries (missing distances) are ignored.
pub fn nearest(row: &[f64], skip: Option<usize>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &d) in row.iter().enumerate() {
        if Some(j) == skip || d.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((j, d));
        }
    }
    best
}

/// One test item's 1-NN decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Position in the test set.
    pub test: usize,
    /// Nearest training item, or `None` if the row has no finite distance.
    pub neighbor: Option<usize>,
    pub distance: f64,
    /// Class index into [`ClassificationReport::classes`].
    pub predicted: Option<usize>,
    pub truth: usize,
}

/// Accuracy, per-class rates and confusion counts of a 1-NN run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport<L> {
    /// Sorted distinct labels of the training and test sets.
    pub classes: Vec<L>,
    pub predictions: Vec<Prediction>,
    /// `confusion[truth][predicted]`; unclassifiable items are not counted.
    pub confusion: Vec<Vec<usize>>,
    /// Fraction of test items of each class classified correctly.
    pub per_class: Vec<f64>,
    pub accuracy: f64,
}

fn classes_of<L: Ord + Clone>(a: &[L], b: &[L]) -> Vec<L> {
    let mut c: Vec<L> = a.iter().chain(b).cloned().collect();
    c.sort();
    c.dedup();
    c
}

fn class_index<L: Ord>(classes: &[L], l: &L) -> usize {
    classes
        .binary_search(l)
        .expect("label present in class list")
}

/// 1-NN labels for the rows of a `test × train` distance matrix.
pub fn classify_nn<L: Ord + Clone>(
    dist: &DMatrix<f64>,
    train_labels: &[L],
    test_labels: &[L],
) -> Result<ClassificationReport<L>> {
    if train_labels.is_empty() {
        return Err(Error::invalid("the training split is empty"));
    }
    if dist.nrows() != test_labels.len() || dist.ncols() != train_labels.len() {
        return Err(Error::invalid(
            "distance matrix does not match the test/train split",
        ));
    }
    let classes = classes_of(train_labels, test_labels);
    let k = classes.len();
    let train: Vec<usize> = train_labels
        .iter()
        .map(|l| class_index(&classes, l))
        .collect();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut totals = vec![0usize; k];
    let mut predictions = Vec::with_capacity(test_labels.len());
    for (i, l) in test_labels.iter().enumerate() {
        let truth = class_index(&classes, l);
        totals[truth] += 1;
        let row: Vec<f64> = dist.row(i).iter().copied().collect();
        let hit = nearest(&row, None);
        let predicted = hit.map(|(j, _)| train[j]);
        if let Some(p) = predicted {
            confusion[truth][p] += 1;
        }
        predictions.push(Prediction {
            test: i,
            neighbor: hit.map(|h| h.0),
            distance: hit.map_or(f64::NAN, |h| h.1),
            predicted,
            truth,
        });
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let per_class = (0..k)
        .map(|c| {
            if totals[c] == 0 {
                f64::NAN
            } else {
                confusion[c][c] as f64 / totals[c] as f64
            }
        })
        .collect();
    let n = test_labels.len().max(1) as f64;
    Ok(ClassificationReport {
        classes,
        predictions,
        confusion,
        per_class,
        accuracy: correct as f64 / n,
    })
}

/// Leave-one-out 1-NN accuracy on a square distance matrix.
pub fn loo_accuracy<L: PartialEq>(dist: &DMatrix<f64>, labels: &[L]) -> f64 {
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let mut row = vec![0.0; n];
    let correct = (0..n)
        .filter(|&i| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = dist[(i, j)];
            }
            nearest(&row, Some(i)).is_some_and(|(j, _)| labels[j] == labels[i])
        })
        .count();
    correct as f64 / n as f64
}

/// All points of the simplex grid with spacing `1/steps`, in lexicographic order.
pub fn simplex_grid(steps: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..=steps {
        for b in 0..=steps - a {
            for c in 0..=steps - a - b {
                out.push([a, b, c, steps - a - b - c]);
            }
        }
    }
    out
}

/// Quadrant weights maximizing leave-one-out 1-NN accuracy on the training split.
///
/// Searches the simplex grid with spacing 0.05. Among equally accurate weights
/// the one closest to uniform wins, then the lexicographically smallest.
pub fn train_weights<L: PartialEq>(
    parts: [&DMatrix<f64>; 4],
    labels: &[L],
) -> Result<QuadrantWeights> {
    let n = labels.len();
    if parts.iter().any(|p| p.shape() != (n, n)) {
        return Err(Error::invalid(
            "quadrant matrices must be square over the training labels",
        ));
    }
    if n < 2 || labels.iter().all(|l| *l == labels[0]) {
        return Err(Error::invalid("weight training needs at least two classes"));
    }
    let steps = WEIGHT_STEPS;
    let uniform_gap = |g: &[usize; 4]| -> usize {
        // 16·‖λ − ¼‖² in grid units, exact in integers
        g.iter().map(|&k| (4 * k).abs_diff(steps).pow(2)).sum()
    };
    let mut best: Option<([usize; 4], f64, usize)> = None;
    for g in simplex_grid(steps) {
        let w = g.map(|k| k as f64 / steps as f64);
        let fused = QuadrantWeights(w).fuse(parts)?;
        let acc = loo_accuracy(&fused, labels);
        let gap = uniform_gap(&g);
        let better = match best {
            None => true,
            Some((_, a, d)) => acc > a || (acc == a && gap < d),
        };
        if better {
            best = Some((g, acc, gap));
        }
    }
    let (g, _, _) = best.expect("nonempty grid");
    let mut w = g.map(|k| k as f64 / steps as f64);
    let s: f64 = w[..3].iter().sum();
    w[3] = (1.0 - s).max(0.0);
    QuadrantWeights::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn symmetric(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn identical_item_is_its_own_neighbor() {
        let dist = DMatrix::from_row_slice(2, 3, &[0.4, 0.0, 0.9, 0.3, 0.8, 0.2]);
        let r = classify_nn(&dist, &["a", "b", "c"], &["b", "c"]).unwrap();
        assert_eq!(r.predictions[0].neighbor, Some(1));
        assert_eq!(r.predictions[0].distance, 0.0);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.classes, ["a", "b", "c"]);
        assert_eq!(r.confusion[1][1] + r.confusion[2][2], 2);
        assert!(r.per_class[0].is_nan());
    }

    #[test]
    fn confusion_counts_mistakes() {
        let dist = DMatrix::from_row_slice(3, 2, &[0.1, 0.5, 0.2, 0.4, 0.9, 0.3]);
        let r = classify_nn(&dist, &[0, 1], &[0, 1, 1]).unwrap();
        assert_eq!(r.confusion, vec![vec![1, 0], vec![1, 1]]);
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_class, vec![1.0, 0.5]);
    }

    #[test]
    fn missing_distances_are_skipped() {
        let dist = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.7, f64::NAN, f64::NAN]);
        let r = classify_nn(&dist, &["x", "y"], &["y", "x"]).unwrap();
        assert_eq!(r.predictions[0].neighbor, Some(1));
        assert_eq!(r.predictions[1].predicted, None);
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn empty_train_split_is_an_error() {
        let dist = DMatrix::<f64>::zeros(1, 0);
        assert!(classify_nn::<&str>(&dist, &[], &["a"]).is_err());
    }

    #[test]
    fn simplex_grid_size() {
        let g = simplex_grid(WEIGHT_STEPS);
        assert_eq!(g.len(), 1771);
        assert!(g.iter().all(|p| p.iter().sum::<usize>() == WEIGHT_STEPS));
    }

    #[test]
    fn identical_quadrants_give_uniform_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = symmetric(12, |_, _| rng.random_range(0.0..1.0));
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let w = train_weights([&d, &d, &d, &d], &labels).unwrap();
        assert_eq!(w, QuadrantWeights::uniform());
    }

    #[test]
    fn discriminative_quadrant_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 30;
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let good = symmetric(n, |i, j| if labels[i] == labels[j] { 0.0 } else { 1.0 });
        let noise: Vec<DMatrix<f64>> = (0..3)
            .map(|_| symmetric(n, |_, _| rng.random_range(0.0..100.0)))
            .collect();
        let w = train_weights([&noise[0], &noise[1], &good, &noise[2]], &labels).unwrap();
        assert!(w.0[2] >= 0.9, "{:?}", w.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let d = DMatrix::<f64>::zeros(3, 3);
        assert!(train_weights([&d, &d, &d, &d], &[1, 1, 1]).is_err());
    }

    #[test]
    fn weights_validate_the_simplex() {
        assert!(QuadrantWeights::new([0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(QuadrantWeights::new([0.3, 0.3, 0.3, 0.3]).is_err());
        assert!(QuadrantWeights::new([0.1, 0.2, 0.3, 0.4]).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn trained_weights_sum_to_one(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 9;
            let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let m: Vec<DMatrix<f64>> = (0..4).map(|_| symmetric(n, |_, _| rng.random_range(0.0..1.0))).collect();
            let w = train_weights([&m[0], &m[1], &m[2], &m[3]], &labels).unwrap();
            prop_assert!((w.0.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(w.0.iter().all(|&v| v >= 0.0));
        }
    }
}
