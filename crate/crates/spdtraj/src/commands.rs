//! The work behind each subcommand, kept free of argument parsing so tests
//! and other programs can call it directly.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use spdtraj_core::{
    bundle_distance_dc, classify_nn, cross_sectional_variance, fast_distance_dc, karcher_mean,
    register_symmetric, train_weights, tsrvf_of, video_to_trajectory, BaselineMode, FeatureConfig,
    GrayImage, Manifold, MeanOptions, QuadrantWeights, RegisterOptions, SpdManifold, Sphere,
    Trajectory, TsrvfRepr, VideoDescriptor, WarpFn,
};

use crate::error::{AppError, AppResult};
use crate::format::{read_trajectory, AnyTrajectory, Manifest, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum Metric {
    /// Bundle distance without alignment.
    #[value(name = "d_c")]
    #[serde(rename = "d_c")]
    Dc,
    /// Quotient distance after registration.
    #[value(name = "d_q")]
    #[serde(rename = "d_q")]
    Dq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryError {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairError {
    pub a: String,
    pub b: String,
    pub error: String,
}

/// Machine-readable list of entry- and pair-level failures.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub entries: Vec<EntryError>,
    pub pairs: Vec<PairError>,
}

impl ErrorReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.pairs.is_empty()
    }
}

/// Loads every manifest entry (part `part` of multi-part files); failures are kept per entry.
pub fn load_entries(manifest: &Manifest, part: Option<usize>) -> Vec<AppResult<AnyTrajectory>> {
    manifest
        .entries
        .par_iter()
        .map(|e| read_trajectory(&manifest.resolve(e), part))
        .collect()
}

/// Splits loaded entries into trajectories and an error list.
pub fn partition_loaded(
    manifest: &Manifest,
    loaded: Vec<AppResult<AnyTrajectory>>,
) -> (Vec<Option<AnyTrajectory>>, Vec<EntryError>) {
    let mut errors = Vec::new();
    let trajs = loaded
        .into_iter()
        .zip(&manifest.entries)
        .map(|(r, e)| match r {
            Ok(t) => Some(t),
            Err(err) => {
                log::warn!("entry {}: {err}", e.id);
                errors.push(EntryError {
                    id: e.id.clone(),
                    error: err.to_string(),
                });
                None
            }
        })
        .collect();
    (trajs, errors)
}

enum AnyRepr {
    Spd(TsrvfRepr<SpdManifold>),
    Sphere(TsrvfRepr<Sphere>),
}

fn repr_of(t: &AnyTrajectory, len: usize) -> AppResult<AnyRepr> {
    let t = if t.len() == len {
        t.clone()
    } else {
        t.resample(len)?
    };
    Ok(match &t {
        AnyTrajectory::Spd(x) => AnyRepr::Spd(tsrvf_of(&SpdManifold::new(), x)?),
        AnyTrajectory::Sphere(x) => AnyRepr::Sphere(tsrvf_of(&Sphere, x)?),
    })
}

/// Outcome of one pairwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub d_c: f64,
    pub d_q: Option<f64>,
    #[serde(skip)]
    pub gamma: Option<WarpFn>,
    /// `gamma` warps the first trajectory of the pair rather than the second.
    pub reversed: bool,
    pub iterations: usize,
    pub converged: bool,
    pub approximate: bool,
}

fn compare_typed<M: Manifold>(
    m: &M,
    a: &TsrvfRepr<M>,
    b: &TsrvfRepr<M>,
    metric: Metric,
    opts: &RegisterOptions,
) -> AppResult<PairRecord> {
    match metric {
        Metric::Dc => {
            let d = match opts.mode {
                BaselineMode::Fast => fast_distance_dc(m, a, b)?,
                BaselineMode::Full => bundle_distance_dc(m, a, b, &opts.shoot)?,
            };
            Ok(PairRecord {
                d_c: d.value,
                d_q: None,
                gamma: None,
                reversed: false,
                iterations: 0,
                converged: d.converged,
                approximate: opts.mode == BaselineMode::Fast && a.start != b.start,
            })
        }
        Metric::Dq => {
            let r = register_symmetric(m, a, b, opts)?;
            Ok(PairRecord {
                d_c: r.d_c_before,
                d_q: Some(r.d_q),
                gamma: Some(r.gamma_star),
                reversed: r.reversed,
                iterations: r.iterations,
                converged: r.converged,
                approximate: r.approximate,
            })
        }
    }
}

fn compare(
    a: &AnyRepr,
    b: &AnyRepr,
    metric: Metric,
    opts: &RegisterOptions,
) -> AppResult<PairRecord> {
    match (a, b) {
        (AnyRepr::Spd(x), AnyRepr::Spd(y)) => {
            compare_typed(&SpdManifold::new(), x, y, metric, opts)
        }
        (AnyRepr::Sphere(x), AnyRepr::Sphere(y)) => compare_typed(&Sphere, x, y, metric, opts),
        _ => Err(AppError::invalid(
            "trajectories live on different manifolds",
        )),
    }
}

/// Compares `a` and `b` after resampling to a common length. For `d_q` both
/// registration directions are tried and the smaller distance is kept.
pub fn compare_pair(
    a: &AnyTrajectory,
    b: &AnyTrajectory,
    metric: Metric,
    opts: &RegisterOptions,
) -> AppResult<PairRecord> {
    let len = a.len().max(b.len());
    compare(&repr_of(a, len)?, &repr_of(b, len)?, metric, opts)
}

/// Symmetric distance matrix over `trajs` with the upper triangle evaluated
/// and mirrored; missing trajectories give `NaN` rows and columns.
pub struct DistanceOutput {
    pub matrix: DMatrix<f64>,
    /// Records of the evaluated pairs `(i, j)`, `i < j`.
    pub pairs: Vec<(usize, usize, PairRecord)>,
    pub errors: Vec<(usize, usize, String)>,
}

pub fn distance_matrix(
    trajs: &[Option<AnyTrajectory>],
    metric: Metric,
    opts: &RegisterOptions,
) -> DistanceOutput {
    let n = trajs.len();
    let len = trajs
        .iter()
        .flatten()
        .map(AnyTrajectory::len)
        .max()
        .unwrap_or(2);
    let reprs: Vec<Option<AppResult<AnyRepr>>> = trajs
        .par_iter()
        .map(|t| t.as_ref().map(|t| repr_of(t, len)))
        .collect();
    let mut matrix = DMatrix::from_element(n, n, f64::NAN);
    let mut errors = Vec::new();
    for (i, r) in reprs.iter().enumerate() {
        match r {
            Some(Ok(_)) => matrix[(i, i)] = 0.0,
            Some(Err(e)) => errors.push((i, i, e.to_string())),
            None => {}
        }
    }
    let todo: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| matches!((&reprs[i], &reprs[j]), (Some(Ok(_)), Some(Ok(_)))))
        .collect();
    let results: Vec<AppResult<PairRecord>> = todo
        .par_iter()
        .map(|&(i, j)| match (&reprs[i], &reprs[j]) {
            (Some(Ok(a)), Some(Ok(b))) => compare(a, b, metric, opts),
            _ => unreachable!("filtered above"),
        })
        .collect();
    let mut pairs = Vec::with_capacity(results.len());
    for (&(i, j), r) in todo.iter().zip(results) {
        match r {
            Ok(rec) => {
                let d = rec.d_q.unwrap_or(rec.d_c);
                matrix[(i, j)] = d;
                matrix[(j, i)] = d;
                pairs.push((i, j, rec));
            }
            Err(e) => errors.push((i, j, e.to_string())),
        }
    }
    DistanceOutput {
        matrix,
        pairs,
        errors,
    }
}

/// How entries are divided into training and test items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitProtocol {
    /// Use the manifest's split tags.
    Manifest,
    /// Per class, a seeded random half (rounded up) is used for training.
    RandomHalf { seed: u64 },
}

pub fn split_indices(manifest: &Manifest, protocol: SplitProtocol) -> (Vec<usize>, Vec<usize>) {
    match protocol {
        SplitProtocol::Manifest => {
            let pick = |s: Split| {
                manifest
                    .entries
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.split == s)
                    .map(|(i, _)| i)
                    .collect()
            };
            (pick(Split::Train), pick(Split::Test))
        }
        SplitProtocol::RandomHalf { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, e) in manifest.entries.iter().enumerate() {
                by_label.entry(e.label.as_str()).or_default().push(i);
            }
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for idx in by_label.values_mut() {
                idx.shuffle(&mut rng);
                let k = idx.len().div_ceil(2);
                train.extend_from_slice(&idx[..k]);
                test.extend_from_slice(&idx[k..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            (train, test)
        }
    }
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub id: String,
    pub truth: String,
    pub predicted: Option<String>,
    pub neighbor: Option<String>,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub per_class: BTreeMap<String, f64>,
    pub classes: Vec<String>,
    /// `confusion[truth][predicted]` in the order of `classes`.
    pub confusion: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_method: Option<String>,
    pub predictions: Vec<PredictionRecord>,
}

/// 1-NN classification of the test items against the training items of a
/// square distance matrix indexed like the manifest.
pub fn classify_manifest(
    manifest: &Manifest,
    dist: &DMatrix<f64>,
    protocol: SplitProtocol,
    within_speaker: bool,
) -> AppResult<ClassifyReport> {
    let n = manifest.entries.len();
    if dist.shape() != (n, n) {
        return Err(AppError::invalid(format!(
            "distance matrix is {}×{} but the manifest has {n} entries",
            dist.nrows(),
            dist.ncols()
        )));
    }
    let (train, test) = split_indices(manifest, protocol);
    if train.is_empty() {
        return Err(AppError::invalid("the training split is empty"));
    }
    let mut sub = submatrix(dist, &test, &train);
    if within_speaker {
        for (r, &i) in test.iter().enumerate() {
            for (c, &j) in train.iter().enumerate() {
                if manifest.entries[i].speaker != manifest.entries[j].speaker {
                    sub[(r, c)] = f64::NAN;
                }
            }
        }
    }
    let labels = manifest.labels();
    let train_labels: Vec<String> = train.iter().map(|&i| labels[i].clone()).collect();
    let test_labels: Vec<String> = test.iter().map(|&i| labels[i].clone()).collect();
    let r = classify_nn(&sub, &train_labels, &test_labels)?;
    let predictions = r
        .predictions
        .iter()
        .map(|p| PredictionRecord {
            id: manifest.entries[test[p.test]].id.clone(),
            truth: r.classes[p.truth].clone(),
            predicted: p.predicted.map(|c| r.classes[c].clone()),
            neighbor: p.neighbor.map(|j| manifest.entries[train[j]].id.clone()),
            distance: p.neighbor.map(|_| p.distance),
        })
        .collect();
    let correct = (0..r.classes.len()).map(|c| r.confusion[c][c]).sum();
    Ok(ClassifyReport {
        accuracy: r.accuracy,
        correct,
        total: test.len(),
        per_class: r
            .classes
            .iter()
            .cloned()
            .zip(r.per_class.iter().copied())
            .filter(|(_, v)| !v.is_nan())
            .collect(),
        classes: r.classes,
        confusion: r.confusion,
        weights: None,
        weights_method: None,
        predictions,
    })
}

pub const WEIGHTS_METHOD: &str =
    "simplex grid search (step 0.05) maximizing leave-one-out 1-NN accuracy on the training split";

/// Quadrant weights trained on the training items of four square matrices.
pub fn train_quadrant_weights(
    manifest: &Manifest,
    parts: [&DMatrix<f64>; 4],
    protocol: SplitProtocol,
) -> AppResult<QuadrantWeights> {
    let (train, _) = split_indices(manifest, protocol);
    let labels = manifest.labels();
    let train_labels: Vec<&String> = train.iter().map(|&i| &labels[i]).collect();
    let subs: Vec<DMatrix<f64>> = parts.iter().map(|p| submatrix(p, &train, &train)).collect();
    Ok(train_weights(
        [&subs[0], &subs[1], &subs[2], &subs[3]],
        &train_labels,
    )?)
}

/// Karcher mean and groupwise alignment of trajectories on one manifold.
pub struct MeanOutput {
    pub mean: AnyTrajectory,
    pub aligned: Vec<AnyTrajectory>,
    pub warps: Vec<WarpFn>,
    pub variance_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub cross_variance_before: f64,
    pub cross_variance_after: f64,
}

fn mean_typed<M: Manifold>(
    m: &M,
    trajs: Vec<Trajectory<M>>,
    opts: &MeanOptions,
    wrap: fn(Trajectory<M>) -> AnyTrajectory,
) -> AppResult<MeanOutput> {
    let before = cross_sectional_variance(m, &trajs)?;
    let r = karcher_mean(m, &trajs, opts)?;
    let aligned: Vec<Trajectory<M>> = r.aligned.iter().map(|(t, _)| t.clone()).collect();
    let after = cross_sectional_variance(m, &aligned)?;
    Ok(MeanOutput {
        mean: wrap(r.mean_trajectory),
        warps: r.aligned.into_iter().map(|(_, g)| g).collect(),
        aligned: aligned.into_iter().map(wrap).collect(),
        variance_history: r.variance_history,
        iterations: r.iterations,
        converged: r.converged,
        cross_variance_before: before,
        cross_variance_after: after,
    })
}

/// Karcher mean of trajectories resampled to a common length.
pub fn mean_of(trajs: &[AnyTrajectory], opts: &MeanOptions) -> AppResult<MeanOutput> {
    let first = trajs
        .first()
        .ok_or_else(|| AppError::invalid("no trajectories to average"))?;
    let len = trajs.iter().map(AnyTrajectory::len).max().unwrap_or(2);
    let resampled = trajs
        .iter()
        .map(|t| {
            if t.len() == len {
                Ok(t.clone())
            } else {
                t.resample(len)
            }
        })
        .collect::<AppResult<Vec<_>>>()?;
    match first.kind() {
        crate::format::ManifoldKind::Spd => {
            let typed = resampled
                .into_iter()
                .map(|t| match t {
                    AnyTrajectory::Spd(x) => Ok(x),
                    _ => Err(AppError::invalid(
                        "trajectories live on different manifolds",
                    )),
                })
                .collect::<AppResult<Vec<_>>>()?;
            mean_typed(&SpdManifold::new(), typed, opts, AnyTrajectory::Spd)
        }
        crate::format::ManifoldKind::Sphere => {
            let typed = resampled
                .into_iter()
                .map(|t| match t {
                    AnyTrajectory::Sphere(x) => Ok(x),
                    _ => Err(AppError::invalid(
                        "trajectories live on different manifolds",
                    )),
                })
                .collect::<AppResult<Vec<_>>>()?;
            mean_typed(&Sphere, typed, opts, AnyTrajectory::Sphere)
        }
    }
}

/// Descriptor trajectories of a video: one part, or four in quadrant mode.
pub fn video_parts(frames: &[GrayImage], config: &FeatureConfig) -> AppResult<Vec<AnyTrajectory>> {
    Ok(match video_to_trajectory(frames, config)? {
        VideoDescriptor::Whole(t) => vec![AnyTrajectory::Spd(t)],
        VideoDescriptor::Quadrants(q) => q.into_iter().map(AnyTrajectory::Spd).collect(),
    })
}
