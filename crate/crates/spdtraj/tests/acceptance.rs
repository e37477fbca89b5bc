//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.
//!
//! Runs as a single test so that the runtime budgets are measured without
//! other tests competing for the cores.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdtraj::commands::{distance_matrix, Metric};
use spdtraj::format::read_matrix;
use spdtraj::simulate::{simulate, SimSpec};
use spdtraj::{AnyTrajectory, Manifest};
use spdtraj_core::bundle::geodesic_residuals;
use spdtraj_core::linalg::{sym_matrix_function, symmetrize, MatrixFunction};
use spdtraj_core::{
    bundle_distance_dc, bundle_exp, bundle_shoot, cross_sectional_variance, fast_distance_dc,
    karcher_mean, pairwise_register, tsrvf_of, warp_trajectory, Manifold, MeanOptions,
    RegisterOptions, ShootOptions, SpdManifold, SpdPoint, SpdTangent, Sphere, SpherePoint,
    TangentVector, Trajectory, TsrvfRepr, WarpFn,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_sym<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    symmetrize(&DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))) * scale
}

fn random_spd<R: Rng>(rng: &mut R, n: usize) -> SpdPoint {
    let s = random_sym(rng, n, 0.7);
    SpdPoint::new(sym_matrix_function(&s, MatrixFunction::Exp).unwrap()).unwrap()
}

fn random_spd_tangent<R: Rng>(rng: &mut R, n: usize, scale: f64) -> SpdTangent {
    SpdTangent::from_body(random_sym(rng, n, scale)).unwrap()
}

fn spd_curve<R: Rng>(rng: &mut R, n: usize, len: usize, scale: f64) -> Trajectory<SpdManifold> {
    let s0 = random_sym(rng, n, 0.5);
    let s1 = random_sym(rng, n, scale);
    let s2 = random_sym(rng, n, scale);
    let w = rng.random_range(1.0..3.0);
    let points = (0..len)
        .map(|i| {
            let t = i as f64 / (len - 1) as f64;
            let a = &s0 + &s1 * t + &s2 * (w * t).sin();
            SpdPoint::new(sym_matrix_function(&a, MatrixFunction::Exp).unwrap()).unwrap()
        })
        .collect();
    Trajectory::new(points).unwrap()
}

fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            return v.normalize();
        }
    }
}

fn sphere_curve<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Trajectory<Sphere> {
    let p = random_unit(rng);
    let a = random_unit(rng) * scale;
    let b = random_unit(rng) * scale;
    let w = rng.random_range(1.0..3.0);
    let points = (0..len)
        .map(|i| {
            let t = i as f64 / (len - 1) as f64;
            SpherePoint::normalized(p + a * t + b * (w * t).sin()).unwrap()
        })
        .collect();
    Trajectory::new(points).unwrap()
}

/// Smooth random warp mixing an exponential and a sinusoidal deformation.
fn random_warp<R: Rng>(rng: &mut R, len: usize) -> WarpFn {
    let a: f64 = rng.random_range(0.5..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let b: f64 = rng.random_range(-0.6..0.6);
    let mix: f64 = rng.random_range(0.0..1.0);
    WarpFn::from_fn(len, |t| {
        let e = (a * t).exp_m1() / a.exp_m1();
        let s = t + b * (2.0 * std::f64::consts::PI * t).sin() / (2.0 * std::f64::consts::PI);
        mix * e + (1.0 - mix) * s
    })
}

/// Affine-invariant distance `‖log(A^{-1/2} B A^{-1/2})‖_F` by Cholesky.
fn affine_invariant(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let l = a.clone().cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let s = &li * b * li.transpose();
    let s = (&s + s.transpose()) * 0.5;
    s.symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|x| x.ln().powi(2))
        .sum::<f64>()
        .sqrt()
}

fn geometry() -> Outcome {
    let m = SpdManifold::new();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let started = Instant::now();
    let (mut roundtrip, mut transport, mut bianchi, mut symmetry) = (0f64, 0f64, 0f64, 0f64);
    let mut antisym_exact = true;
    let mut triangle_ok = true;
    for n in [2, 3, 7] {
        for _ in 0..200 {
            let p = random_spd(&mut rng, n);
            let q = random_spd(&mut rng, n);
            let r = random_spd(&mut rng, n);

            let back = m.exp(&p, &m.log(&p, &q).unwrap()).unwrap();
            roundtrip = roundtrip.max(m.distance(&back, &q).unwrap());
            let v = random_spd_tangent(&mut rng, n, 0.8);
            let v_back = m.log(&p, &m.exp(&p, &v).unwrap()).unwrap();
            roundtrip = roundtrip.max(m.norm(&p, &v_back.minus(&v)));

            let u = random_spd_tangent(&mut rng, n, 1.0);
            let w = random_spd_tangent(&mut rng, n, 1.0);
            let tu = m.transport(&p, &q, &u).unwrap();
            let tw = m.transport(&p, &q, &w).unwrap();
            transport = transport.max((m.inner(&q, &tu, &tw) - m.inner(&p, &u, &w)).abs());

            let z = random_spd_tangent(&mut rng, n, 1.0);
            let rxy = m.curvature(&p, &u, &w, &z);
            let ryx = m.curvature(&p, &w, &u, &z);
            antisym_exact &= rxy.body() == &(-ryx.body().clone());
            let cyc = rxy
                .plus(&m.curvature(&p, &w, &z, &u))
                .plus(&m.curvature(&p, &z, &u, &w));
            bianchi = bianchi.max(m.norm(&p, &cyc));

            let dpq = m.distance(&p, &q).unwrap();
            let dqr = m.distance(&q, &r).unwrap();
            let dpr = m.distance(&p, &r).unwrap();
            symmetry = symmetry.max((dpq - m.distance(&q, &p).unwrap()).abs());
            triangle_ok &= dpr <= dpq + dqr + 1e-8;
        }
    }
    let i3 = SpdPoint::identity(3);
    let e = std::f64::consts::E;
    let c1 = (m.distance(&i3, &SpdPoint::scaled_identity(3, e)).unwrap() - 3f64.sqrt()).abs();
    let diag = SpdPoint::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        e,
        1.0 / e,
        1.0,
    ])))
    .unwrap();
    let c2 = (m.distance(&i3, &diag).unwrap() - 2f64.sqrt()).abs();
    let elapsed = started.elapsed();
    check(
        roundtrip < 1e-8
            && transport < 1e-8
            && antisym_exact
            && bianchi < 1e-10
            && symmetry < 1e-10
            && triangle_ok
            && c1 < 1e-10
            && c2 < 1e-10
            && elapsed < Duration::from_secs(30),
        format!(
            "exp/log {roundtrip:.1e}, transport {transport:.1e}, antisymmetry exact {antisym_exact}, \
             Bianchi {bianchi:.1e}, symmetry {symmetry:.1e}, triangle {triangle_ok}, \
             closed forms {c1:.1e}/{c2:.1e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

struct BundleStats {
    ratios_ok: usize,
    min_ratio: f64,
    converged: usize,
}

fn bundle_pairs<M: Manifold>(m: &M, pairs: &[(TsrvfRepr<M>, TsrvfRepr<M>)]) -> BundleStats {
    let opts = ShootOptions::default();
    let mut stats = BundleStats {
        ratios_ok: 0,
        min_ratio: f64::INFINITY,
        converged: 0,
    };
    for (a, b) in pairs {
        let shot = bundle_shoot(m, a, b, &opts).unwrap();
        if shot.converged && shot.iterations <= 100 && shot.base_gap < 1e-4 && shot.fiber_gap < 1e-4
        {
            stats.converged += 1;
        }
        let res: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&s| {
                let path = bundle_exp(m, a, &shot.direction, s).unwrap();
                geodesic_residuals(m, &path).unwrap().base
            })
            .collect();
        let r = (res[0] / res[1]).min(res[1] / res[2]);
        stats.min_ratio = stats.min_ratio.min(r);
        if r >= 1.8 {
            stats.ratios_ok += 1;
        }
    }
    stats
}

fn bundle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let len = 30;
    let sphere: Vec<_> = (0..10)
        .map(|_| {
            let a = tsrvf_of(&Sphere, &sphere_curve(&mut rng, len, 0.8)).unwrap();
            let b = tsrvf_of(&Sphere, &sphere_curve(&mut rng, len, 0.8)).unwrap();
            (a, b)
        })
        .collect();
    let m = SpdManifold::new();
    let spd: Vec<_> = (0..10)
        .map(|_| {
            let a = tsrvf_of(&m, &spd_curve(&mut rng, 3, len, 0.6)).unwrap();
            let b = tsrvf_of(&m, &spd_curve(&mut rng, 3, len, 0.6)).unwrap();
            (a, b)
        })
        .collect();
    let s = bundle_pairs(&Sphere, &sphere);
    let p = bundle_pairs(&m, &spd);

    let a = &spd[0].0;
    let other = &spd[1].0;
    let flat_target = TsrvfRepr::new(a.start.clone(), other.q.clone()).unwrap();
    let flat = bundle_shoot(&m, a, &flat_target, &ShootOptions::default()).unwrap();
    let flat_ok = flat.converged
        && flat.iterations == 0
        && flat.base_gap == 0.0
        && flat.fiber_gap < 1e-12
        && flat.path.base.iter().all(|x| *x == a.start);
    let elapsed = started.elapsed();
    check(
        s.ratios_ok == 10
            && p.ratios_ok == 10
            && s.converged >= 9
            && p.converged >= 9
            && flat_ok
            && elapsed < Duration::from_secs(300),
        format!(
            "residual ratio ≥ 1.8 on {}/10 sphere and {}/10 SPD pairs (min {:.2}/{:.2}), \
             converged {}/10 and {}/10, flat fiber at iteration 0 {flat_ok}, {:.1}s",
            s.ratios_ok,
            p.ratios_ok,
            s.min_ratio,
            p.min_ratio,
            s.converged,
            p.converged,
            elapsed.as_secs_f64()
        ),
    )
}

fn co_warp_invariance() -> Outcome {
    let m = SpdManifold::new();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let len = 200;
    let opts = ShootOptions::default();
    let mut worst = 0f64;
    let mut all_converged = true;
    for _ in 0..20 {
        let a = spd_curve(&mut rng, 3, len, 0.6);
        let b = spd_curve(&mut rng, 3, len, 0.6);
        let gamma = random_warp(&mut rng, len);
        let before = bundle_distance_dc(
            &m,
            &tsrvf_of(&m, &a).unwrap(),
            &tsrvf_of(&m, &b).unwrap(),
            &opts,
        )
        .unwrap();
        let aw = tsrvf_of(&m, &warp_trajectory(&m, &a, &gamma).unwrap()).unwrap();
        let bw = tsrvf_of(&m, &warp_trajectory(&m, &b, &gamma).unwrap()).unwrap();
        let after = bundle_distance_dc(&m, &aw, &bw, &opts).unwrap();
        all_converged &= before.converged && after.converged;
        worst = worst.max((after.value - before.value).abs());
    }
    check(
        worst < 1e-3,
        format!("max |d_c(co-warped) − d_c| = {worst:.2e} over 20 cases, all shots converged {all_converged}"),
    )
}

fn warp_recovery() -> Outcome {
    let m = SpdManifold::new();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let len = 200;
    let opts = RegisterOptions {
        grid: 100,
        ..RegisterOptions::default()
    };
    let (mut worst_ratio, mut worst_err) = (0f64, 0f64);
    for _ in 0..20 {
        let alpha = spd_curve(&mut rng, 3, len, 0.8);
        let g0 = random_warp(&mut rng, len);
        let warped = warp_trajectory(&m, &alpha, &g0).unwrap();
        let r = pairwise_register(&m, &alpha, &warped, &opts).unwrap();
        worst_ratio = worst_ratio.max(r.d_q / r.d_c_before);
        let err = r.gamma_star.compose(&g0).l2_distance_to_identity();
        worst_err = worst_err.max(err);
    }
    check(
        worst_ratio < 0.05 && worst_err < 0.03,
        format!("max d_q/d_c_before = {worst_ratio:.4}, max ‖γ*∘γ₀ − id‖ = {worst_err:.4} over 20 cases"),
    )
}

fn quotient_property() -> Outcome {
    let spec = SimSpec {
        classes: 4,
        per_class: 5,
        seed: 5,
        ..SimSpec::default()
    };
    let trajs: Vec<Option<AnyTrajectory>> = simulate(&spec)
        .unwrap()
        .into_iter()
        .map(|s| Some(s.trajectory))
        .collect();
    assert_eq!(trajs.len(), 20);
    let opts = RegisterOptions::default();
    let dc = distance_matrix(&trajs, Metric::Dc, &opts);
    let dq = distance_matrix(&trajs, Metric::Dq, &opts);
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    for i in 0..20 {
        for j in (i + 1)..20 {
            worst = worst.max(dq.matrix[(i, j)] - dc.matrix[(i, j)]);
            pairs += 1;
        }
    }
    check(
        worst <= 1e-6 && dc.errors.is_empty() && dq.errors.is_empty(),
        format!("max d_q − d_c = {worst:.2e} over {pairs} pairs"),
    )
}

fn karcher() -> Outcome {
    let m = SpdManifold::new();
    let opts = MeanOptions::default();

    let spec = SimSpec {
        classes: 1,
        per_class: 8,
        seed: 6,
        ..SimSpec::default()
    };
    let ensemble: Vec<Trajectory<SpdManifold>> = simulate(&spec)
        .unwrap()
        .into_iter()
        .map(|s| match s.trajectory {
            AnyTrajectory::Spd(t) => t,
            AnyTrajectory::Sphere(_) => unreachable!(),
        })
        .collect();
    let r = karcher_mean(&m, &ensemble, &opts).unwrap();
    let monotone = r.variance_history.windows(2).all(|w| w[1] <= w[0] + 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let alpha = spd_curve(&mut rng, 3, 50, 0.8);
    let ra = tsrvf_of(&m, &alpha).unwrap();
    let copies: Vec<_> = (0..8)
        .map(|_| warp_trajectory(&m, &alpha, &random_warp(&mut rng, 50)).unwrap())
        .collect();
    let mean_dc = copies
        .iter()
        .map(|c| {
            fast_distance_dc(&m, &ra, &tsrvf_of(&m, c).unwrap())
                .unwrap()
                .value
        })
        .sum::<f64>()
        / copies.len() as f64;
    let rc = karcher_mean(&m, &copies, &opts).unwrap();
    let to_original = pairwise_register(&m, &alpha, &rc.mean_trajectory, &opts.register)
        .unwrap()
        .d_q;
    let aligned: Vec<_> = rc.aligned.iter().map(|(t, _)| t.clone()).collect();
    let before = cross_sectional_variance(&m, &copies).unwrap();
    let after = cross_sectional_variance(&m, &aligned).unwrap();
    check(
        monotone && to_original < 0.05 * mean_dc && after < 0.1 * before,
        format!(
            "history non-increasing {monotone} ({} iterates), d_q(mean, original) = {to_original:.4} \
             vs 0.05·{mean_dc:.4}, cross-sectional variance {before:.4} → {after:.4}",
            r.variance_history.len()
        ),
    )
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_spdtraj"))
        .args(args)
        .status()
        .expect("run spdtraj");
    assert!(status.success(), "spdtraj {args:?} failed: {status}");
}

fn accuracy(manifest: &Manifest, matrix: &Path) -> f64 {
    let d = read_matrix(matrix).unwrap();
    let labels = manifest.labels();
    let (train, test): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| manifest.entries[i].split == spdtraj::Split::Train);
    let correct = test
        .iter()
        .filter(|&&i| {
            let nn = train
                .iter()
                .copied()
                .min_by(|&a, &b| d[(i, a)].total_cmp(&d[(i, b)]))
                .unwrap();
            labels[nn] == labels[i]
        })
        .count();
    correct as f64 / test.len() as f64
}

fn synthetic_classification() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    run_cli(&["simulate", "--out", &s(&data)]);
    let manifest_path = data.join("manifest.json");
    let mp = s(&manifest_path);
    run_cli(&[
        "dist",
        &mp,
        "--metric",
        "d_c",
        "--name",
        "dc",
        "--out",
        &s(&out),
    ]);
    run_cli(&[
        "dist",
        &mp,
        "--metric",
        "d_q",
        "--name",
        "dq",
        "--out",
        &s(&out),
    ]);
    let classify_out = out.join("classify");
    run_cli(&[
        "classify",
        &mp,
        "--matrix",
        &s(&out.join("dq.csv")),
        "--out",
        &s(&classify_out),
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(classify_out.join("classify.json")).unwrap())
            .unwrap();
    let acc_q = report["accuracy"].as_f64().unwrap();
    let manifest = Manifest::load(&manifest_path).unwrap();
    let acc_c = accuracy(&manifest, &out.join("dc.csv"));
    let own_q = accuracy(&manifest, &out.join("dq.csv"));
    let elapsed = started.elapsed();
    check(
        acc_q >= 0.95 && acc_q > acc_c && own_q == acc_q && elapsed < Duration::from_secs(600),
        format!(
            "d_q accuracy {acc_q:.3}, d_c accuracy {acc_c:.3}, {} test items, {:.1}s end to end",
            manifest
                .entries
                .iter()
                .filter(|e| e.split == spdtraj::Split::Test)
                .count(),
            elapsed.as_secs_f64()
        ),
    )
}

fn squaring_map() -> Outcome {
    let m = SpdManifold::new();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut rankings_agree = 0;
    let mut worst = 0f64;
    for set in 0..100 {
        let n = [2, 3, 5][set % 3];
        let query = random_spd(&mut rng, n);
        let cands: Vec<SpdPoint> = (0..10).map(|_| random_spd(&mut rng, n)).collect();
        let ours: Vec<f64> = cands
            .iter()
            .map(|c| m.distance(&query, c).unwrap())
            .collect();
        let classic: Vec<f64> = cands
            .iter()
            .map(|c| SpdManifold::classic_affine_distance(&query.squared(), &c.squared()).unwrap())
            .collect();
        let order = |d: &[f64]| {
            let mut idx: Vec<usize> = (0..d.len()).collect();
            idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
            idx
        };
        if order(&ours) == order(&classic) {
            rankings_agree += 1;
        }
        for (c, (&d, &dc)) in cands.iter().zip(ours.iter().zip(&classic)) {
            // Both distances equal half the affine-invariant distance of the squares.
            let (q, x) = (query.mat(), c.mat());
            let oracle = 0.5 * affine_invariant(&(q * q), &(x * x));
            worst = worst.max((d - oracle).abs()).max((dc - oracle).abs());
        }
    }
    check(
        rankings_agree == 100 && worst < 1e-8,
        format!(
            "rankings agree on {rankings_agree}/100 sets, max deviation from oracle {worst:.1e}"
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("1 geometry", geometry),
        ("2 bundle geodesics", bundle),
        ("3 co-warp invariance of d_c", co_warp_invariance),
        ("4 warp recovery", warp_recovery),
        ("5 d_q ≤ d_c", quotient_property),
        ("6 Karcher mean", karcher),
        ("7 synthetic classification", synthetic_classification),
        ("9 squaring map", squaring_map),
    ];
    let mut failed = Vec::new();
    // libtest prints the test name without a newline
    println!();
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    println!("SKIP criterion 8 dataset reproduction: run `cargo test -p spdtraj --test acceptance -- --ignored` with the dataset manifests set");
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

/// Runs the full pipeline on a user-supplied dataset and returns the accuracy.
fn dataset_accuracy(manifest: &Path, quadrants: bool, within_speaker: bool) -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let feats = dir.path().join("features");
    let mut args = vec![
        "features".to_string(),
        s(manifest),
        "--out".into(),
        s(&feats),
    ];
    if quadrants {
        args.extend(["--hog".into(), "--quadrants".into()]);
    }
    run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let fm = s(&feats.join("manifest.json"));
    let out = dir.path().join("out");
    let mut matrices = Vec::new();
    let parts: Vec<Option<usize>> = if quadrants {
        (0..4).map(Some).collect()
    } else {
        vec![None]
    };
    for p in parts {
        let name = p.map_or("dq".to_string(), |k| format!("dq{k}"));
        let mut a = vec![
            "dist".to_string(),
            fm.clone(),
            "--name".into(),
            name.clone(),
        ];
        if let Some(k) = p {
            a.extend(["--part".into(), k.to_string()]);
        }
        a.extend(["--out".into(), s(&out)]);
        run_cli(&a.iter().map(String::as_str).collect::<Vec<_>>());
        matrices.push(s(&out.join(format!("{name}.csv"))));
    }
    let mut a = vec![
        "classify".to_string(),
        fm,
        "--out".into(),
        s(&out),
        "--matrix".into(),
    ];
    a.extend(matrices);
    if quadrants {
        a.push("--random-half".into());
    }
    if within_speaker {
        a.push("--within-speaker".into());
    }
    run_cli(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("classify.json")).unwrap()).unwrap();
    report["accuracy"].as_f64().unwrap()
}

/// Needs `SPDTRAJ_CAMBRIDGE_MANIFEST` (a manifest of Set1 frame directories)
/// and/or `SPDTRAJ_OULUVS_MANIFEST` (cropped mouth frame directories with
/// per-speaker train/test tags).
#[test]
#[ignore]
fn dataset_reproduction() {
    let mut ran = false;
    let mut ok = true;
    if let Ok(p) = std::env::var("SPDTRAJ_CAMBRIDGE_MANIFEST") {
        let acc = dataset_accuracy(Path::new(&p), true, false);
        let pass = (acc - 0.99).abs() <= 0.03;
        println!(
            "{} criterion 8 hand gestures: Set1 accuracy {acc:.3} (target 0.99 ± 0.03)",
            if pass { "PASS" } else { "FAIL" }
        );
        ok &= pass;
        ran = true;
    }
    if let Ok(p) = std::env::var("SPDTRAJ_OULUVS_MANIFEST") {
        let acc = dataset_accuracy(Path::new(&p), false, true);
        let pass = (acc - 0.786).abs() <= 0.03;
        println!(
            "{} criterion 8 lip reading: speaker-dependent accuracy {acc:.3} (target 0.786 ± 0.03)",
            if pass { "PASS" } else { "FAIL" }
        );
        ok &= pass;
        ran = true;
    }
    if !ran {
        println!("SKIP criterion 8: no dataset manifest in the environment");
    }
    assert!(ok);
}
