//! Seeded synthetic datasets: per class a base trajectory, per sample a
//! random warp and a small perturbation.
//!
//! Class `k` rises and falls along two fixed directions with bumps centred at
//! times that depend on `k`, so classes differ in the order of events and
//! cannot be warped into each other, while samples of one class differ
//! mostly in timing.

use std::path::Path;

use nalgebra::{DMatrix, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spdtraj_core::linalg::{sym_matrix_function, symmetrize, MatrixFunction};
use spdtraj_core::{SpdPoint, SpherePoint, Trajectory, WarpFn};

use crate::error::{AppError, AppResult};
use crate::format::{
    write_trajectory, AnyTrajectory, Manifest, ManifestEntry, ManifoldKind, Split,
};

/// Samples of the fine grid used to integrate random warp slopes.
const WARP_GRID: usize = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub manifold: ManifoldKind,
    /// Matrix size for SPD data (ignored on the sphere).
    pub n: usize,
    pub classes: usize,
    /// Samples per class; the first half is tagged train, the rest test.
    pub per_class: usize,
    #[serde(rename = "T")]
    pub len: usize,
    /// Amplitude of the random log-slope of each warp.
    pub warp_noise: f64,
    /// Size of the random start displacement and of the smooth perturbation.
    pub start_noise: f64,
    /// Height of the class bumps.
    pub amplitude: f64,
    /// Width (standard deviation in time) of the class bumps.
    pub bump_width: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            manifold: ManifoldKind::Spd,
            n: 3,
            classes: 3,
            per_class: 10,
            len: 50,
            warp_noise: 1.0,
            start_noise: 0.1,
            amplitude: 1.0,
            bump_width: 0.06,
            seed: 0,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: &str| Err(AppError::invalid(format!("invalid simulation spec: {m}")));
        if self.classes == 0 || self.per_class == 0 {
            return bad("classes and per-class count must be positive");
        }
        if self.len < 2 {
            return bad("T must be at least 2");
        }
        if !(self.bump_width > 0.0 && self.bump_width.is_finite()) {
            return bad("bump width must be positive");
        }
        if self.manifold == ManifoldKind::Spd && self.n < 2 {
            return bad("n must be at least 2");
        }
        for (name, v) in [
            ("warp noise", self.warp_noise),
            ("start noise", self.start_noise),
            ("amplitude", self.amplitude),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(&format!("{name} must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: String,
    pub split: Split,
    pub trajectory: AnyTrajectory,
    /// Warp applied to the class template.
    pub warp: WarpFn,
}

fn bump(t: f64, centre: f64, width: f64) -> f64 {
    (-(t - centre).powi(2) / (2.0 * width * width)).exp()
}

/// Bump centres of class `k`: the first direction moves from early to late
/// across classes, the second from late to early.
fn centres(k: usize, classes: usize) -> (f64, f64) {
    let f = if classes == 1 {
        0.5
    } else {
        k as f64 / (classes - 1) as f64
    };
    (0.25 + 0.5 * f, 0.75 - 0.5 * f)
}

/// Random warp with log-slope `a₁ sin πt + a₂ sin 2πt`, `aᵢ ~ U(−noise, noise)`.
fn random_warp(rng: &mut ChaCha8Rng, noise: f64) -> impl Fn(f64) -> f64 {
    let a = [
        rng.random_range(-1.0..=1.0) * noise,
        rng.random_range(-1.0..=1.0) * noise,
    ];
    let h = 1.0 / (WARP_GRID - 1) as f64;
    let slope = |t: f64| {
        (a[0] * (std::f64::consts::PI * t).sin() + a[1] * (2.0 * std::f64::consts::PI * t).sin())
            .exp()
    };
    let mut cum = vec![0.0; WARP_GRID];
    for i in 1..WARP_GRID {
        let (t0, t1) = ((i - 1) as f64 * h, i as f64 * h);
        cum[i] = cum[i - 1] + 0.5 * h * (slope(t0) + slope(t1));
    }
    let total = cum[WARP_GRID - 1];
    let identity = noise == 0.0;
    move |t: f64| {
        if identity || t <= 0.0 || t >= 1.0 {
            return t.clamp(0.0, 1.0);
        }
        let u = t / h;
        let i = (u.floor() as usize).min(WARP_GRID - 2);
        let f = u - i as f64;
        ((1.0 - f) * cum[i] + f * cum[i + 1]) / total
    }
}

fn random_unit_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s = symmetrize(&g);
    let norm = s.norm().max(1e-12);
    s / norm
}

fn random_unit_vec(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Generates the dataset described by `spec`, classes in order.
pub fn simulate(spec: &SimSpec) -> AppResult<Vec<Sample>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grid: Vec<f64> = (0..spec.len)
        .map(|i| i as f64 / (spec.len - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(spec.classes * spec.per_class);
    match spec.manifold {
        ManifoldKind::Spd => {
            let n = spec.n;
            let dirs = [random_unit_sym(&mut rng, n), random_unit_sym(&mut rng, n)];
            let drift = random_unit_sym(&mut rng, n) * 0.5;
            for k in 0..spec.classes {
                let (c1, c2) = centres(k, spec.classes);
                let template = |t: f64| {
                    &drift * t
                        + &dirs[0] * (spec.amplitude * bump(t, c1, spec.bump_width))
                        + &dirs[1] * (spec.amplitude * bump(t, c2, spec.bump_width))
                };
                for s in 0..spec.per_class {
                    let gamma = random_warp(&mut rng, spec.warp_noise);
                    let shift = random_unit_sym(&mut rng, n) * (0.5 * spec.start_noise);
                    let wiggle = random_unit_sym(&mut rng, n) * (0.5 * spec.start_noise);
                    let g = sym_matrix_function(&shift, MatrixFunction::Exp)?;
                    let points = grid
                        .iter()
                        .map(|&t| {
                            let a = template(gamma(t)) + &wiggle * (std::f64::consts::PI * t).sin();
                            let p = sym_matrix_function(&a, MatrixFunction::Exp)?;
                            SpdPoint::new(symmetrize(&(&g * p * &g)))
                        })
                        .collect::<spdtraj_core::Result<Vec<_>>>()?;
                    out.push(sample(
                        spec,
                        k,
                        s,
                        AnyTrajectory::Spd(Trajectory::new(points)?),
                        &grid,
                        &gamma,
                    )?);
                }
            }
        }
        ManifoldKind::Sphere => {
            let pole = Vector3::z();
            let dirs = [Vector3::x(), Vector3::y()];
            let drift = (Vector3::x() - Vector3::y()) * 0.3;
            for k in 0..spec.classes {
                let (c1, c2) = centres(k, spec.classes);
                let template = |t: f64| {
                    drift * t
                        + dirs[0] * (spec.amplitude * bump(t, c1, spec.bump_width))
                        + dirs[1] * (spec.amplitude * bump(t, c2, spec.bump_width))
                };
                for s in 0..spec.per_class {
                    let gamma = random_warp(&mut rng, spec.warp_noise);
                    let axis = random_unit_vec(&mut rng) * spec.start_noise;
                    let rot = Rotation3::from_scaled_axis(axis);
                    let wiggle = random_unit_vec(&mut rng) * (0.5 * spec.start_noise);
                    let points = grid
                        .iter()
                        .map(|&t| {
                            let v = pole
                                + template(gamma(t))
                                + wiggle * (std::f64::consts::PI * t).sin();
                            SpherePoint::normalized(rot * v)
                        })
                        .collect::<spdtraj_core::Result<Vec<_>>>()?;
                    out.push(sample(
                        spec,
                        k,
                        s,
                        AnyTrajectory::Sphere(Trajectory::new(points)?),
                        &grid,
                        &gamma,
                    )?);
                }
            }
        }
    }
    Ok(out)
}

fn sample(
    spec: &SimSpec,
    class: usize,
    index: usize,
    trajectory: AnyTrajectory,
    grid: &[f64],
    gamma: &impl Fn(f64) -> f64,
) -> AppResult<Sample> {
    let split = if index < spec.per_class.div_ceil(2) {
        Split::Train
    } else {
        Split::Test
    };
    Ok(Sample {
        id: format!("c{class}_s{index:03}"),
        label: format!("class{class}"),
        split,
        trajectory,
        warp: WarpFn::new(grid.iter().map(|&t| gamma(t)).collect())?,
    })
}

/// Writes `trajectories/<id>.json`, `manifest.json` and `simulation.json` under `dir`.
pub fn write_simulation(dir: &Path, spec: &SimSpec, samples: &[Sample]) -> AppResult<Manifest> {
    let mut entries = Vec::with_capacity(samples.len());
    for s in samples {
        let rel = Path::new("trajectories").join(format!("{}.json", s.id));
        write_trajectory(&dir.join(&rel), &s.trajectory)?;
        entries.push(ManifestEntry {
            id: s.id.clone(),
            path: rel,
            label: s.label.clone(),
            split: s.split,
            speaker: None,
        });
    }
    let manifest = Manifest::new(dir, entries)?;
    manifest.save(&dir.join("manifest.json"))?;
    crate::format::write_json_pretty(&dir.join("simulation.json"), spec)?;
    Ok(manifest)
}
