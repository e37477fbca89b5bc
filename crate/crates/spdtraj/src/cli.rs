//! Argument parsing and file handling for the `spdtraj` binary.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use spdtraj_core::{
    BaselineMode, FeatureConfig, FeatureKind, HogParams, MeanOptions, QuadrantWeights,
    RegisterOptions, ShootOptions,
};

use crate::commands::{
    classify_manifest, compare_pair, distance_matrix, load_entries, mean_of, partition_loaded,
    train_quadrant_weights, video_parts, EntryError, ErrorReport, Metric, PairError, PairRecord,
    SplitProtocol, WEIGHTS_METHOD,
};
use crate::error::{AppError, AppResult};
use crate::format::{
    read_ids, read_json, read_matrix, read_trajectory, write_ids, write_json_pretty, write_matrix,
    write_parts, write_trajectory, write_warp, AnyTrajectory, Manifest, ManifestEntry,
    ManifoldKind,
};
use crate::frames::load_video;
use crate::simulate::{simulate, write_simulation, SimSpec};

#[derive(Debug, Parser)]
#[command(
    name = "spdtraj",
    version,
    about = "Rate-invariant analysis of trajectories of covariance descriptors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Grid size of the warp search.
    #[arg(long, global = true, default_value_t = 100)]
    pub grid: usize,

    /// Integration steps along bundle geodesics.
    #[arg(long, global = true, default_value_t = 20)]
    pub steps: usize,

    /// Use the start-point geodesic as baseline (default).
    #[arg(long, global = true, conflicts_with = "full")]
    pub fast: bool,

    /// Shoot bundle geodesics for the baseline.
    #[arg(long, global = true)]
    pub full: bool,

    /// Registration stops when the warp update is this close to the identity.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub tol: f64,

    /// Seed for simulation and random splits.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

impl Common {
    pub fn register_options(&self) -> RegisterOptions {
        RegisterOptions {
            grid: self.grid,
            tol: self.tol,
            mode: if self.full {
                BaselineMode::Full
            } else {
                BaselineMode::Fast
            },
            shoot: ShootOptions {
                steps: self.steps,
                ..ShootOptions::default()
            },
            ..RegisterOptions::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic dataset.
    Simulate(SimulateArgs),
    /// Turn frame directories into covariance-descriptor trajectories.
    Features(FeaturesArgs),
    /// Register trajectories pairwise and report warps and distances.
    Register(RegisterArgs),
    /// Distance matrix over a manifest.
    Dist(DistArgs),
    /// Karcher mean and groupwise alignment.
    Mean(MeanArgs),
    /// Nearest-neighbour classification from distance matrices.
    Classify(ClassifyArgs),
    /// Learn quadrant weights from four distance matrices.
    TrainWeights(TrainWeightsArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ManifoldKind::Spd)]
    pub manifold: ManifoldKind,
    /// Matrix size of SPD samples.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    /// Samples per trajectory.
    #[arg(long = "len", default_value_t = 50)]
    pub len: usize,
    #[arg(long, default_value_t = 1.0)]
    pub warp_noise: f64,
    #[arg(long, default_value_t = 0.1)]
    pub start_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.06)]
    pub bump_width: f64,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// A frame directory, or a manifest whose entries are frame directories.
    pub input: PathBuf,
    /// HOG features instead of the seven intensity features.
    #[arg(long)]
    pub hog: bool,
    /// Four overlapping quadrant descriptors per frame.
    #[arg(long)]
    pub quadrants: bool,
    #[arg(long, default_value_t = spdtraj_core::features::DEFAULT_OVERLAP)]
    pub overlap: f64,
    #[arg(long, default_value_t = 8)]
    pub cell: usize,
    #[arg(long, default_value_t = 2)]
    pub block: usize,
    #[arg(long, default_value_t = 7)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Two trajectory files (reference first), unless --manifest is given.
    pub inputs: Vec<PathBuf>,
    /// Register every pair of a manifest instead.
    #[arg(long, conflicts_with = "inputs")]
    pub manifest: Option<PathBuf>,
    /// Part of multi-part (quadrant) files.
    #[arg(long)]
    pub part: Option<usize>,
    /// Also write each pair's warp in manifest mode, as `<fixed>__<moving>.csv`.
    #[arg(long)]
    pub dump_warps: bool,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Dq)]
    pub metric: Metric,
    /// Part of multi-part (quadrant) files.
    #[arg(long)]
    pub part: Option<usize>,
    /// Base name of the matrix file.
    #[arg(long, default_value = "dist")]
    pub name: String,
    /// Write per-pair warps (d_q only), as `<fixed>__<moving>.csv`.
    #[arg(long)]
    pub dump_warps: bool,
}

#[derive(Debug, Args)]
pub struct MeanArgs {
    /// Trajectory files, unless --manifest is given.
    pub inputs: Vec<PathBuf>,
    #[arg(long, conflicts_with = "inputs")]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub part: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Train on a seeded random half of every class instead of the manifest's split tags.
    #[arg(long)]
    pub random_half: bool,
}

impl SplitArgs {
    fn protocol(&self, seed: u64) -> SplitProtocol {
        if self.random_half {
            SplitProtocol::RandomHalf { seed }
        } else {
            SplitProtocol::Manifest
        }
    }
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub manifest: PathBuf,
    /// One distance matrix, or four per-quadrant matrices in UL, UR, LL, LR order.
    #[arg(long = "matrix", required = true, num_args = 1..)]
    pub matrices: Vec<PathBuf>,
    /// Quadrant weights `w1,w2,w3,w4`; trained on the training split when omitted.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Weights file written by train-weights.
    #[arg(long, conflicts_with = "weights")]
    pub weights_file: Option<PathBuf>,
    /// Only compare items of the same speaker.
    #[arg(long)]
    pub within_speaker: bool,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args)]
pub struct TrainWeightsArgs {
    pub manifest: PathBuf,
    /// Four per-quadrant matrices in UL, UR, LL, LR order.
    #[arg(long = "matrix", required = true, num_args = 4)]
    pub matrices: Vec<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
}

/// Success, or success with entry-level failures listed in `errors.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Partial,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => ExitCode::SUCCESS,
            Status::Partial => ExitCode::from(2),
        }
    }
}

fn finish(out: &Path, report: &ErrorReport) -> AppResult<Status> {
    write_json_pretty(&out.join("errors.json"), report)?;
    if report.is_empty() {
        Ok(Status::Ok)
    } else {
        log::warn!(
            "{} entry and {} pair failures, see {}",
            report.entries.len(),
            report.pairs.len(),
            out.join("errors.json").display()
        );
        Ok(Status::Partial)
    }
}

pub fn run(cli: &Cli) -> AppResult<Status> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| AppError::invalid(format!("cannot start worker threads: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> AppResult<Status> {
    let c = &cli.common;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(c, a),
        Command::Features(a) => cmd_features(c, a),
        Command::Register(a) => cmd_register(c, a),
        Command::Dist(a) => cmd_dist(c, a),
        Command::Mean(a) => cmd_mean(c, a),
        Command::Classify(a) => cmd_classify(c, a),
        Command::TrainWeights(a) => cmd_train_weights(c, a),
    }
}

fn cmd_simulate(c: &Common, a: &SimulateArgs) -> AppResult<Status> {
    let spec = SimSpec {
        manifold: a.manifold,
        n: a.n,
        classes: a.classes,
        per_class: a.per_class,
        len: a.len,
        warp_noise: a.warp_noise,
        start_noise: a.start_noise,
        amplitude: a.amplitude,
        bump_width: a.bump_width,
        seed: c.seed,
    };
    let samples = simulate(&spec)?;
    write_simulation(&c.out, &spec, &samples)?;
    log::info!(
        "wrote {} trajectories to {}",
        samples.len(),
        c.out.display()
    );
    Ok(Status::Ok)
}

fn feature_config(a: &FeaturesArgs) -> FeatureConfig {
    FeatureConfig {
        kind: if a.hog {
            FeatureKind::Hog(HogParams {
                cell: a.cell,
                block: a.block,
                bins: a.bins,
            })
        } else {
            FeatureKind::Intensity
        },
        quadrants: a.quadrants.then_some(a.overlap),
    }
}

fn describe_video(dir: &Path, config: &FeatureConfig) -> AppResult<Vec<AnyTrajectory>> {
    let frames = load_video(dir)?;
    video_parts(&frames, config)
}

fn cmd_features(c: &Common, a: &FeaturesArgs) -> AppResult<Status> {
    let config = feature_config(a);
    if a.input.is_dir() {
        let parts = describe_video(&a.input, &config)?;
        let name = a
            .input
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("video");
        let path = c.out.join(format!("{name}.json"));
        write_parts(&path, &parts)?;
        log::info!("wrote {}", path.display());
        return Ok(Status::Ok);
    }
    let manifest = Manifest::load(&a.input)?;
    let results: Vec<AppResult<Vec<AnyTrajectory>>> = manifest
        .entries
        .par_iter()
        .map(|e| describe_video(&manifest.resolve(e), &config))
        .collect();
    let mut entries = Vec::new();
    let mut report = ErrorReport::default();
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(parts) => {
                let rel = Path::new("trajectories").join(format!("{}.json", e.id));
                write_parts(&c.out.join(&rel), &parts)?;
                entries.push(ManifestEntry {
                    path: rel,
                    ..e.clone()
                });
            }
            Err(err) => {
                log::warn!("entry {}: {err}", e.id);
                report.entries.push(EntryError {
                    id: e.id.clone(),
                    error: err.to_string(),
                });
            }
        }
    }
    Manifest::new(&c.out, entries)?.save(&c.out.join("manifest.json"))?;
    finish(&c.out, &report)
}

#[derive(Serialize)]
struct RegisterReport {
    d_c: f64,
    d_q: f64,
    iterations: usize,
    converged: bool,
    approximate: bool,
    /// Which input `gamma.csv` warps: "second" (aligned to the first) or "first".
    warped: &'static str,
}

/// Warp file name `<fixed>__<moving>.csv` for a pair record.
fn warp_file(ids: &[String], i: usize, j: usize, r: &PairRecord) -> String {
    let (fixed, moving) = if r.reversed { (j, i) } else { (i, j) };
    format!("{}__{}.csv", ids[fixed], ids[moving])
}

fn cmd_register(c: &Common, a: &RegisterArgs) -> AppResult<Status> {
    let opts = c.register_options();
    let Some(manifest_path) = &a.manifest else {
        let [x, y] = a.inputs.as_slice() else {
            return Err(AppError::invalid(
                "register needs exactly two trajectory files or --manifest",
            ));
        };
        let t1 = read_trajectory(x, a.part)?;
        let t2 = read_trajectory(y, a.part)?;
        let r = compare_pair(&t1, &t2, Metric::Dq, &opts)?;
        let gamma = r.gamma.as_ref().expect("registration yields a warp");
        write_warp(&c.out.join("gamma.csv"), gamma)?;
        write_json_pretty(
            &c.out.join("register.json"),
            &RegisterReport {
                d_c: r.d_c,
                d_q: r.d_q.unwrap_or(r.d_c),
                iterations: r.iterations,
                converged: r.converged,
                approximate: r.approximate,
                warped: if r.reversed { "first" } else { "second" },
            },
        )?;
        return Ok(Status::Ok);
    };
    let manifest = Manifest::load(manifest_path)?;
    let (trajs, entry_errors) = partition_loaded(&manifest, load_entries(&manifest, a.part));
    let out = distance_matrix(&trajs, Metric::Dq, &opts);
    let ids = manifest.ids();
    let path = c.out.join("pairs.csv");
    let mut w = csv::Writer::from_path(&path).map_err(AppError::csv(&path))?;
    w.write_record(["a", "b", "d_c", "d_q", "warped", "iterations", "converged"])
        .map_err(AppError::csv(&path))?;
    for (i, j, r) in &out.pairs {
        w.write_record([
            ids[*i].clone(),
            ids[*j].clone(),
            r.d_c.to_string(),
            r.d_q.unwrap_or(r.d_c).to_string(),
            ids[if r.reversed { *i } else { *j }].clone(),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])
        .map_err(AppError::csv(&path))?;
        if a.dump_warps {
            if let Some(g) = &r.gamma {
                write_warp(&c.out.join("warps").join(warp_file(&ids, *i, *j, r)), g)?;
            }
        }
    }
    w.flush().map_err(AppError::io(&path))?;
    finish(&c.out, &error_report(&ids, entry_errors, out.errors))
}

fn error_report(
    ids: &[String],
    mut entries: Vec<EntryError>,
    pairs: Vec<(usize, usize, String)>,
) -> ErrorReport {
    let mut report = ErrorReport::default();
    for (i, j, error) in pairs {
        if i == j {
            entries.push(EntryError {
                id: ids[i].clone(),
                error,
            });
        } else {
            report.pairs.push(PairError {
                a: ids[i].clone(),
                b: ids[j].clone(),
                error,
            });
        }
    }
    report.entries = entries;
    report
}

fn cmd_dist(c: &Common, a: &DistArgs) -> AppResult<Status> {
    let opts = c.register_options();
    let manifest = Manifest::load(&a.manifest)?;
    let (trajs, entry_errors) = partition_loaded(&manifest, load_entries(&manifest, a.part));
    let out = distance_matrix(&trajs, a.metric, &opts);
    let ids = manifest.ids();
    let path = c.out.join(format!("{}.csv", a.name));
    write_matrix(&path, &out.matrix)?;
    write_ids(&path, &ids)?;
    if a.dump_warps {
        for (i, j, r) in &out.pairs {
            if let Some(g) = &r.gamma {
                write_warp(&c.out.join("warps").join(warp_file(&ids, *i, *j, r)), g)?;
            }
        }
    }
    log::info!("wrote {}", path.display());
    finish(&c.out, &error_report(&ids, entry_errors, out.errors))
}

#[derive(Serialize)]
struct MeanReport {
    iterations: usize,
    converged: bool,
    variance_history: Vec<f64>,
    cross_sectional_variance_before: f64,
    cross_sectional_variance_after: f64,
    ids: Vec<String>,
}

fn cmd_mean(c: &Common, a: &MeanArgs) -> AppResult<Status> {
    let (ids, trajs) = match &a.manifest {
        Some(p) => {
            let manifest = Manifest::load(p)?;
            let loaded = load_entries(&manifest, a.part)
                .into_iter()
                .collect::<AppResult<Vec<_>>>()?;
            (manifest.ids(), loaded)
        }
        None => {
            if a.inputs.is_empty() {
                return Err(AppError::invalid(
                    "mean needs trajectory files or --manifest",
                ));
            }
            let ids = a
                .inputs
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    p.file_stem()
                        .and_then(|s| s.to_str())
                        .map_or_else(|| format!("item{k}"), str::to_string)
                })
                .collect();
            let loaded = a
                .inputs
                .iter()
                .map(|p| read_trajectory(p, a.part))
                .collect::<AppResult<Vec<_>>>()?;
            (ids, loaded)
        }
    };
    let opts = MeanOptions {
        register: c.register_options(),
        max_iter: a.max_iter,
        ..MeanOptions::default()
    };
    let r = mean_of(&trajs, &opts)?;
    write_trajectory(&c.out.join("mean.json"), &r.mean)?;
    let path = c.out.join("variance.csv");
    let mut w = csv::Writer::from_path(&path).map_err(AppError::csv(&path))?;
    w.write_record(["iteration", "variance"])
        .map_err(AppError::csv(&path))?;
    for (k, v) in r.variance_history.iter().enumerate() {
        w.write_record([k.to_string(), v.to_string()])
            .map_err(AppError::csv(&path))?;
    }
    w.flush().map_err(AppError::io(&path))?;
    for ((id, t), g) in ids.iter().zip(&r.aligned).zip(&r.warps) {
        write_trajectory(&c.out.join("aligned").join(format!("{id}.json")), t)?;
        write_warp(&c.out.join("warps").join(format!("{id}.csv")), g)?;
    }
    write_json_pretty(
        &c.out.join("mean_report.json"),
        &MeanReport {
            iterations: r.iterations,
            converged: r.converged,
            variance_history: r.variance_history,
            cross_sectional_variance_before: r.cross_variance_before,
            cross_sectional_variance_after: r.cross_variance_after,
            ids,
        },
    )?;
    Ok(Status::Ok)
}

/// Reads a matrix and reorders it to manifest order using its id sidecar, if present.
pub fn load_manifest_matrix(manifest: &Manifest, path: &Path) -> AppResult<DMatrix<f64>> {
    let m = read_matrix(path)?;
    let n = manifest.entries.len();
    let ids = match read_ids(path) {
        Ok(ids) => ids,
        Err(AppError::Io { .. }) => {
            if m.shape() != (n, n) {
                return Err(AppError::invalid(format!(
                    "{}: {}×{} matrix does not match {n} manifest entries",
                    path.display(),
                    m.nrows(),
                    m.ncols()
                )));
            }
            return Ok(m);
        }
        Err(e) => return Err(e),
    };
    if m.shape() != (ids.len(), ids.len()) {
        return Err(AppError::invalid(format!(
            "{}: matrix and id sidecar disagree",
            path.display()
        )));
    }
    let pos = manifest
        .entries
        .iter()
        .map(|e| {
            ids.iter().position(|id| *id == e.id).ok_or_else(|| {
                AppError::invalid(format!("{}: no row for entry {:?}", path.display(), e.id))
            })
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| m[(pos[i], pos[j])]))
}

#[derive(Debug, Serialize, serde::Deserialize)]
pub struct WeightsFile {
    pub weights: [f64; 4],
    pub method: String,
}

fn four(manifest: &Manifest, paths: &[PathBuf]) -> AppResult<Vec<DMatrix<f64>>> {
    if paths.len() != 4 {
        return Err(AppError::invalid(
            "quadrant mode needs exactly four matrices",
        ));
    }
    paths
        .iter()
        .map(|p| load_manifest_matrix(manifest, p))
        .collect()
}

fn cmd_classify(c: &Common, a: &ClassifyArgs) -> AppResult<Status> {
    let manifest = Manifest::load(&a.manifest)?;
    let protocol = a.split.protocol(c.seed);
    let (dist, weights, method) = if a.matrices.len() == 1 {
        (load_manifest_matrix(&manifest, &a.matrices[0])?, None, None)
    } else {
        let parts = four(&manifest, &a.matrices)?;
        let refs = [&parts[0], &parts[1], &parts[2], &parts[3]];
        let (w, method) = match (&a.weights, &a.weights_file) {
            (Some(v), _) => {
                let arr: [f64; 4] = v
                    .as_slice()
                    .try_into()
                    .map_err(|_| AppError::invalid("--weights needs four values"))?;
                (QuadrantWeights::new(arr)?, "user supplied".to_string())
            }
            (None, Some(p)) => {
                let f: WeightsFile = read_json(p)?;
                (QuadrantWeights::new(f.weights)?, f.method)
            }
            (None, None) => (
                train_quadrant_weights(&manifest, refs, protocol)?,
                WEIGHTS_METHOD.to_string(),
            ),
        };
        (w.fuse(refs)?, Some(w.0), Some(method))
    };
    let mut report = classify_manifest(&manifest, &dist, protocol, a.within_speaker)?;
    report.weights = weights;
    report.weights_method = method;
    log::info!(
        "accuracy {:.4} ({}/{})",
        report.accuracy,
        report.correct,
        report.total
    );
    write_json_pretty(&c.out.join("classify.json"), &report)?;
    Ok(Status::Ok)
}

fn cmd_train_weights(c: &Common, a: &TrainWeightsArgs) -> AppResult<Status> {
    let manifest = Manifest::load(&a.manifest)?;
    let parts = four(&manifest, &a.matrices)?;
    let w = train_quadrant_weights(
        &manifest,
        [&parts[0], &parts[1], &parts[2], &parts[3]],
        a.split.protocol(c.seed),
    )?;
    write_json_pretty(
        &c.out.join("weights.json"),
        &WeightsFile {
            weights: w.0,
            method: WEIGHTS_METHOD.to_string(),
        },
    )?;
    Ok(Status::Ok)
}
