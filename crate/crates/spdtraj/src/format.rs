//! On-disk formats: trajectory JSON, dataset manifests, distance matrices and warp tables.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Vector3};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use spdtraj_core::{SpdManifold, SpdPoint, Sphere, SpherePoint, Trajectory, WarpFn};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Spd,
    Sphere,
}

/// One trajectory as stored on disk. SPD points are row-major `n × n`
/// arrays; sphere points are unit 3-vectors with `n = 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub manifold: ManifoldKind,
    pub n: usize,
    #[serde(rename = "T")]
    pub len: usize,
    pub points: Vec<Vec<f64>>,
}

/// A trajectory file holds one record, or several parts (the four quadrants of a video).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrajectoryDoc {
    One(TrajectoryRecord),
    Parts(Vec<TrajectoryRecord>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyTrajectory {
    Spd(Trajectory<SpdManifold>),
    Sphere(Trajectory<Sphere>),
}

impl AnyTrajectory {
    pub fn kind(&self) -> ManifoldKind {
        match self {
            AnyTrajectory::Spd(_) => ManifoldKind::Spd,
            AnyTrajectory::Sphere(_) => ManifoldKind::Sphere,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AnyTrajectory::Spd(t) => t.len(),
            AnyTrajectory::Sphere(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Matrix size for SPD trajectories, 3 for the sphere.
    pub fn dim(&self) -> usize {
        match self {
            AnyTrajectory::Spd(t) => t.start().dim(),
            AnyTrajectory::Sphere(_) => 3,
        }
    }

    pub fn resample(&self, len: usize) -> AppResult<Self> {
        Ok(match self {
            AnyTrajectory::Spd(t) => AnyTrajectory::Spd(t.resample(&SpdManifold::new(), len)?),
            AnyTrajectory::Sphere(t) => AnyTrajectory::Sphere(t.resample(&Sphere, len)?),
        })
    }

    pub fn to_record(&self) -> TrajectoryRecord {
        let points: Vec<Vec<f64>> = match self {
            AnyTrajectory::Spd(t) => t.points().iter().map(|p| p.to_row_major()).collect(),
            AnyTrajectory::Sphere(t) => t
                .points()
                .iter()
                .map(|p| p.vector().iter().copied().collect())
                .collect(),
        };
        TrajectoryRecord {
            manifold: self.kind(),
            n: self.dim(),
            len: points.len(),
            points,
        }
    }

    pub fn from_record(r: &TrajectoryRecord) -> AppResult<Self> {
        if r.points.len() != r.len {
            return Err(AppError::invalid(format!(
                "trajectory declares T = {} but has {} points",
                r.len,
                r.points.len()
            )));
        }
        match r.manifold {
            ManifoldKind::Spd => {
                let pts = r
                    .points
                    .iter()
                    .map(|p| SpdPoint::from_row_major(r.n, p))
                    .collect::<spdtraj_core::Result<Vec<_>>>()?;
                Ok(AnyTrajectory::Spd(Trajectory::new(pts)?))
            }
            ManifoldKind::Sphere => {
                if r.n != 3 {
                    return Err(AppError::invalid("sphere trajectories must have n = 3"));
                }
                let pts = r
                    .points
                    .iter()
                    .map(|p| {
                        if p.len() != 3 {
                            return Err(spdtraj_core::Error::DimensionMismatch {
                                expected: 3,
                                found: p.len(),
                            });
                        }
                        SpherePoint::new(Vector3::new(p[0], p[1], p[2]))
                    })
                    .collect::<spdtraj_core::Result<Vec<_>>>()?;
                Ok(AnyTrajectory::Sphere(Trajectory::new(pts)?))
            }
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let f = File::open(path).map_err(AppError::io(path))?;
    serde_json::from_reader(BufReader::new(f)).map_err(AppError::json(path))
}

fn create(path: &Path) -> AppResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(AppError::io(dir))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(AppError::io(path))?,
    ))
}

/// Compact JSON, used for bulky numeric files.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> AppResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, value).map_err(AppError::json(path))?;
    w.write_all(b"\n").map_err(AppError::io(path))?;
    w.flush().map_err(AppError::io(path))
}

/// Indented JSON, used for reports and manifests.
pub fn write_json_pretty<T: Serialize + ?Sized>(path: &Path, value: &T) -> AppResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(AppError::json(path))?;
    w.write_all(b"\n").map_err(AppError::io(path))?;
    w.flush().map_err(AppError::io(path))
}

pub fn read_parts(path: &Path) -> AppResult<Vec<AnyTrajectory>> {
    let records = match read_json::<TrajectoryDoc>(path)? {
        TrajectoryDoc::One(r) => vec![r],
        TrajectoryDoc::Parts(rs) => rs,
    };
    if records.is_empty() {
        return Err(AppError::invalid(format!(
            "{}: no trajectories",
            path.display()
        )));
    }
    records.iter().map(AnyTrajectory::from_record).collect()
}

/// Reads a single trajectory, or part `part` of a multi-part file.
pub fn read_trajectory(path: &Path, part: Option<usize>) -> AppResult<AnyTrajectory> {
    let mut parts = read_parts(path)?;
    match part {
        None if parts.len() == 1 => Ok(parts.remove(0)),
        None => Err(AppError::invalid(format!(
            "{}: file has {} parts, select one",
            path.display(),
            parts.len()
        ))),
        Some(k) if k < parts.len() => Ok(parts.swap_remove(k)),
        Some(k) => Err(AppError::invalid(format!(
            "{}: part {k} requested but the file has {}",
            path.display(),
            parts.len()
        ))),
    }
}

pub fn write_trajectory(path: &Path, t: &AnyTrajectory) -> AppResult<()> {
    write_json(path, &TrajectoryDoc::One(t.to_record()))
}

pub fn write_parts(path: &Path, parts: &[AnyTrajectory]) -> AppResult<()> {
    if parts.len() == 1 {
        return write_trajectory(path, &parts[0]);
    }
    write_json(
        path,
        &TrajectoryDoc::Parts(parts.iter().map(|t| t.to_record()).collect()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    #[default]
    Unassigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Trajectory file or frame directory, relative to the manifest.
    pub path: PathBuf,
    pub label: String,
    #[serde(default)]
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory relative paths are resolved against.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> AppResult<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(AppError::invalid(format!(
                    "duplicate manifest id {:?}",
                    e.id
                )));
            }
            if e.label.is_empty() {
                return Err(AppError::invalid(format!(
                    "entry {:?} has an empty label",
                    e.id
                )));
            }
        }
        Ok(Manifest {
            root: root.into(),
            entries,
        })
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let entries: Vec<ManifestEntry> = read_json(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(root, entries)
    }

    pub fn save(&self, path: &Path) -> AppResult<()> {
        write_json_pretty(path, &self.entries)
    }

    pub fn resolve(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.path)
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.label.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }
}

/// Headerless CSV; missing entries are written as `NaN`.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> AppResult<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        w.write_record(&row).map_err(AppError::csv(path))?;
    }
    w.flush().map_err(AppError::io(path))
}

pub fn read_matrix(path: &Path) -> AppResult<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(AppError::csv(path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(AppError::csv(path))?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    AppError::invalid(format!("{}: not a number: {s:?}", path.display()))
                })
            })
            .collect::<AppResult<Vec<f64>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(AppError::invalid(format!(
            "{}: ragged matrix",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Sidecar of a matrix file mapping row index to entry id: `dist.csv` → `dist.ids.json`.
pub fn ids_path(matrix: &Path) -> PathBuf {
    matrix.with_extension("ids.json")
}

pub fn write_ids(matrix: &Path, ids: &[String]) -> AppResult<()> {
    write_json_pretty(&ids_path(matrix), ids)
}

pub fn read_ids(matrix: &Path) -> AppResult<Vec<String>> {
    read_json(&ids_path(matrix))
}

/// `t,gamma` table of a warping function.
pub fn write_warp(path: &Path, gamma: &WarpFn) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "gamma"])
        .map_err(AppError::csv(path))?;
    for (t, g) in gamma.times().iter().zip(gamma.values()) {
        w.write_record([t.to_string(), g.to_string()])
            .map_err(AppError::csv(path))?;
    }
    w.flush().map_err(AppError::io(path))
}

pub fn read_warp(path: &Path) -> AppResult<WarpFn> {
    let mut r = csv::Reader::from_path(path).map_err(AppError::csv(path))?;
    let mut values = Vec::new();
    for rec in r.deserialize::<(f64, f64)>() {
        values.push(rec.map_err(AppError::csv(path))?.1);
    }
    Ok(WarpFn::new(values)?)
}
