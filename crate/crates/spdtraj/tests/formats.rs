use std::fs;

use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;
use spdtraj::format::{
    ids_path, read_ids, read_matrix, read_parts, read_trajectory, read_warp, write_ids,
    write_matrix, write_parts, write_trajectory, write_warp,
};
use spdtraj::{AnyTrajectory, AppError, Manifest, ManifestEntry, Split};
use spdtraj_core::{SpdPoint, SpherePoint, Trajectory, WarpFn};

fn spd_trajectory(len: usize) -> AnyTrajectory {
    let points = (0..len)
        .map(|k| {
            let t = k as f64 / (len - 1) as f64;
            SpdPoint::new(DMatrix::from_row_slice(
                2,
                2,
                &[1.0 + t, 0.3 * t, 0.3 * t, 2.0 - t * t],
            ))
            .unwrap()
        })
        .collect();
    AnyTrajectory::Spd(Trajectory::new(points).unwrap())
}

fn sphere_trajectory(len: usize) -> AnyTrajectory {
    let points = (0..len)
        .map(|k| SpherePoint::normalized(Vector3::new(1.0, k as f64 * 0.1, 0.5)).unwrap())
        .collect();
    AnyTrajectory::Sphere(Trajectory::new(points).unwrap())
}

#[test]
fn trajectory_json_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    write_trajectory(&path, &spd_trajectory(3)).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["manifold"], "spd");
    assert_eq!(v["n"], 2);
    assert_eq!(v["T"], 3);
    assert_eq!(v["points"][0], serde_json::json!([1.0, 0.0, 0.0, 2.0]));
}

#[test]
fn trajectories_roundtrip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for t in [spd_trajectory(7), sphere_trajectory(5)] {
        let path = dir.path().join("t.json");
        write_trajectory(&path, &t).unwrap();
        assert_eq!(read_trajectory(&path, None).unwrap(), t);
    }
}

#[test]
fn multi_part_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("parts.json");
    let parts = vec![
        spd_trajectory(4),
        spd_trajectory(4),
        spd_trajectory(4),
        spd_trajectory(4),
    ];
    write_parts(&path, &parts).unwrap();
    assert_eq!(read_parts(&path).unwrap(), parts);
    assert_eq!(read_trajectory(&path, Some(2)).unwrap(), parts[2]);
    assert!(read_trajectory(&path, Some(4)).is_err());
    assert!(read_trajectory(&path, None).is_err());
}

#[test]
fn invalid_trajectory_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    for doc in [
        r#"{"manifold":"spd","n":2,"T":2,"points":[[1,0,0,1],[1,0,0,-1]]}"#,
        r#"{"manifold":"spd","n":2,"T":3,"points":[[1,0,0,1],[1,0,0,1]]}"#,
        r#"{"manifold":"spd","n":2,"T":2,"points":[[1,0,0,1],[1,0,1]]}"#,
        r#"{"manifold":"sphere","n":3,"T":2,"points":[[1,0,0],[0,0,0]]}"#,
        r#"{"manifold":"torus","n":2,"T":2,"points":[]}"#,
        "not json",
    ] {
        fs::write(&path, doc).unwrap();
        assert!(read_trajectory(&path, None).is_err(), "{doc}");
    }
    assert!(matches!(
        read_trajectory(&dir.path().join("absent.json"), None),
        Err(AppError::Io { .. })
    ));
}

#[test]
fn matrices_keep_missing_entries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let m = DMatrix::from_row_slice(2, 2, &[0.0, f64::NAN, f64::NAN, 0.0]);
    write_matrix(&path, &m).unwrap();
    let back = read_matrix(&path).unwrap();
    assert_eq!(back[(0, 0)], 0.0);
    assert!(back[(0, 1)].is_nan() && back[(1, 0)].is_nan());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn ids_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dist.csv");
    assert_eq!(ids_path(&path), dir.path().join("dist.ids.json"));
    let ids = vec!["a".to_string(), "b".to_string()];
    write_ids(&path, &ids).unwrap();
    assert_eq!(read_ids(&path).unwrap(), ids);
}

#[test]
fn warps_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let g = WarpFn::from_fn(11, |t| t * t);
    write_warp(&path, &g).unwrap();
    assert_eq!(read_warp(&path).unwrap(), g);
    assert!(fs::read_to_string(&path).unwrap().starts_with("t,gamma"));
}

fn entry(id: &str, label: &str) -> ManifestEntry {
    ManifestEntry {
        id: id.into(),
        path: format!("{id}.json").into(),
        label: label.into(),
        split: Split::Unassigned,
        speaker: None,
    }
}

#[test]
fn manifest_validation_and_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(Manifest::new(dir.path(), vec![entry("a", "x"), entry("a", "y")]).is_err());
    assert!(Manifest::new(dir.path(), vec![entry("a", "")]).is_err());

    let mut e = entry("b", "y");
    e.split = Split::Train;
    e.speaker = Some("s1".into());
    let m = Manifest::new(dir.path(), vec![entry("a", "x"), e]).unwrap();
    let path = dir.path().join("manifest.json");
    m.save(&path).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    assert!(v.is_array());
    assert_eq!(v[1]["split"], "train");
    let back = Manifest::load(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.resolve(&back.entries[0]), dir.path().join("a.json"));
    assert_eq!(back.index_of("b"), Some(1));

    // Split and speaker are optional in hand-written manifests.
    fs::write(&path, r#"[{"id":"z","path":"z.json","label":"k"}]"#).unwrap();
    assert_eq!(
        Manifest::load(&path).unwrap().entries[0].split,
        Split::Unassigned
    );
}

proptest! {
    #[test]
    fn matrices_roundtrip_bitwise(values in prop::collection::vec(-1e6f64..1e6, 9)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(3, 3, &values);
        write_matrix(&path, &m).unwrap();
        prop_assert_eq!(read_matrix(&path).unwrap(), m);
    }
}
