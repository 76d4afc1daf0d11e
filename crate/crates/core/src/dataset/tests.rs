use super::*;
use crate::phantom::Phantom;
use crate::TetMesh;
use std::f64::consts::TAU;

fn phantom_patient(freq: usize, params: GenerationParams) -> Patient {
    let ph = Phantom::liver(freq, 3);
    Patient::from_parts(ph.surface, ph.volume, ph.lobe_labels, params).unwrap()
}

fn unit_tet() -> TetMesh {
    TetMesh::new(
        vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()],
        vec![[0, 1, 2, 3]],
    )
    .unwrap()
}

/// Closed torus with `u * v` vertices.
fn torus(u: usize, v: usize) -> TriMesh {
    let (big, small) = (1.0, 0.35);
    let mut vertices = Vec::with_capacity(u * v);
    for a in 0..u {
        for b in 0..v {
            let (s, t) = (TAU * a as f64 / u as f64, TAU * b as f64 / v as f64);
            let r = big + small * t.cos();
            vertices.push(Vec3::new(r * s.cos(), r * s.sin(), small * t.sin()));
        }
    }
    let id = |a: usize, b: usize| (a % u) * v + b % v;
    let mut faces = Vec::new();
    for a in 0..u {
        for b in 0..v {
            faces.push([id(a, b), id(a + 1, b), id(a + 1, b + 1)]);
            faces.push([id(a, b), id(a + 1, b + 1), id(a, b + 1)]);
        }
    }
    TriMesh::new(vertices, faces).unwrap()
}

fn identity_params() -> GenerationParams {
    let mut p = GenerationParams::default();
    p.compression.max_magnitude = 0.0;
    p.lobe.max_magnitude = 0.0;
    p.rigid = RigidParams {
        max_angle: 0.0,
        max_translation: 0.0,
    };
    p
}

#[test]
fn identity_pipeline_gives_exact_subset() {
    let patient = phantom_patient(12, identity_params());
    for seed in 0..4 {
        let s = generate_sample(&patient, seed).unwrap();
        s.validate().unwrap();
        for &[i, j] in &s.gt_matches {
            assert!((s.partial.points[j] - s.complete.points[i]).norm() < 1e-9);
        }
        assert_eq!(s.meta.rigid, RigidTransform::identity());
    }
}

#[test]
fn same_seed_is_bit_identical() {
    let patient = phantom_patient(12, GenerationParams::default());
    let a = generate_sample(&patient, 42).unwrap();
    let b = generate_sample(&patient, 42).unwrap();
    assert_eq!(a, b);
    let c = generate_sample(&patient, 43).unwrap();
    assert_ne!(a.meta.permutation_x, c.meta.permutation_x);
}

#[test]
fn ground_truth_links_partial_to_deformed_vertices() {
    let patient = phantom_patient(16, GenerationParams::default());
    let mut kinds = std::collections::BTreeSet::new();
    for seed in 0..6 {
        let s = generate_sample(&patient, seed).unwrap();
        s.validate().unwrap();
        kinds.insert(format!("{:?}", s.meta.deformation));
        let rigid = &s.meta.rigid;
        for (k, &v) in s.meta.permutation_x.iter().enumerate() {
            let want = rigid.apply_point(&patient.surface.vertices[v]);
            assert!((s.complete.points[k] - want).norm() < 1e-12);
        }
        for &[i, j] in &s.gt_matches {
            assert_eq!(s.partial.points[j], s.gt_deformed[i]);
        }
        let m = patient.vertex_count();
        assert_eq!(s.partial.len(), (0.05 * m as f64).ceil() as usize);
        assert!(!s.meta.undersized);
    }
    assert_eq!(kinds.len(), 2, "both deformation kinds appear over six seeds");
}

#[test]
fn compression_moves_surface() {
    let mut params = GenerationParams::default();
    params.deformation = DeformationMode::Compression;
    let patient = phantom_patient(12, params);
    let s = generate_sample(&patient, 3).unwrap();
    let moved = s
        .meta
        .permutation_x
        .iter()
        .enumerate()
        .map(|(k, &v)| (s.gt_deformed[k] - patient.surface.vertices[v]).norm())
        .fold(0.0, f64::max);
    assert!(moved > 1e-3 && moved <= 0.1 + 1e-9, "max displacement {moved}");
}

#[test]
fn exact_five_percent_on_ten_thousand_vertices() {
    let mut params = GenerationParams::default();
    params.deformation = DeformationMode::Compression;
    params.crop.max_angle = 89.0;
    let mesh = torus(100, 100);
    let patient = Patient::from_parts(mesh, unit_tet(), vec![], params).unwrap();
    assert_eq!(patient.vertex_count(), 10_000);
    let s = generate_sample(&patient, 5).unwrap();
    let (lx, ly) = gt_overlap_labels(&s);
    assert_eq!(lx.iter().filter(|&&b| b).count(), 500);
    assert!(ly.iter().all(|&b| b));
    assert_eq!((lx, ly), (s.gt_overlap_x.clone(), s.gt_overlap_y.clone()));
}

#[test]
fn noise_perturbs_partial_only() {
    let mut params = identity_params();
    params.noise_sigma = 1e-3;
    let patient = phantom_patient(12, params);
    let s = generate_sample(&patient, 8).unwrap();
    let diffs: Vec<f64> = s
        .gt_matches
        .iter()
        .map(|&[i, j]| (s.partial.points[j] - s.gt_deformed[i]).norm())
        .collect();
    assert!(diffs.iter().all(|&d| d > 0.0 && d < 1e-2));
    assert_eq!(s, generate_sample(&patient, 8).unwrap());
}

#[test]
fn camera_failures_surface_after_retries() {
    let mut params = GenerationParams::default();
    params.crop.max_angle = 1e-9;
    params.camera_retries = 3;
    let patient = phantom_patient(6, params);
    match generate_sample(&patient, 0) {
        Err(Error::Crop(m)) => assert!(m.contains("3 camera samples"), "{m}"),
        other => panic!("expected crop error, got {other:?}"),
    }
}

#[test]
fn bad_lobe_label_rejected() {
    let ph = Phantom::liver(4, 2);
    let err = Patient::from_parts(ph.surface, ph.volume, vec![10_000], GenerationParams::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn validate_catches_broken_bijection() {
    let patient = phantom_patient(8, GenerationParams::default());
    let mut s = generate_sample(&patient, 1).unwrap();
    s.gt_matches[1][0] = s.gt_matches[0][0];
    assert!(s.validate().is_err());
}

#[test]
fn round_trip_is_exact() {
    let patient = phantom_patient(12, GenerationParams::default());
    let s = generate_sample(&patient, 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sample(&s, dir.path()).unwrap();
    assert_eq!(read_sample(dir.path()).unwrap(), s);
}

#[test]
fn missing_matches_is_schema_error() {
    let patient = phantom_patient(8, GenerationParams::default());
    let s = generate_sample(&patient, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sample(&s, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("gt_matches.json")).unwrap();
    match read_sample(dir.path()) {
        Err(Error::Schema(m)) => assert!(m.contains("gt_matches.json")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_version_mismatch() {
    let patient = phantom_patient(8, GenerationParams::default());
    let mut s = generate_sample(&patient, 2).unwrap();
    s.meta.schema_version = 99;
    let dir = tempfile::tempdir().unwrap();
    write_sample(&s, dir.path()).unwrap();
    assert!(matches!(read_sample(dir.path()), Err(Error::Schema(_))));
}

#[test]
fn hand_built_sample_matches_documented_layout() {
    let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let sample = DatasetSample {
        complete: PointCloud::with_normals(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 0.5, -0.25)],
            vec![p(0.0, 0.0, 1.0), p(1.0, 0.0, 0.0), p(0.0, -1.0, 0.0)],
        )
        .unwrap(),
        partial: PointCloud::with_normals(vec![p(0.0, 0.5, -0.25), p(0.0, 0.0, 0.0)], vec![p(0.0, -1.0, 0.0), p(0.0, 0.0, 1.0)])
            .unwrap(),
        gt_matches: vec![[2, 0], [0, 1]],
        gt_overlap_x: vec![true, false, true],
        gt_overlap_y: vec![true, true],
        gt_deformed: vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 0.5, -0.25)],
        meta: SampleMeta {
            schema_version: SCHEMA_VERSION,
            seed: 7,
            deformation: DeformationKind::Compression,
            constraints: DeformationConstraints::default(),
            rigid: RigidTransform::identity(),
            camera: CameraPose::from_spherical(Vec3::zeros(), 0.0, 0.0, 2.0),
            permutation_x: vec![0, 1, 2],
            permutation_y: vec![1, 0],
            undersized: false,
            normalization: Normalization::identity(),
            config: GenerationParams::default(),
        },
    };
    sample.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sample(&sample, dir.path()).unwrap();

    let mut want = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\n\
property double x\nproperty double y\nproperty double z\n\
property double nx\nproperty double ny\nproperty double nz\nend_header\n"
        .to_vec();
    for row in [
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.5, -0.25, 0.0, -1.0, 0.0],
    ] {
        for v in row {
            want.extend_from_slice(&f64::to_le_bytes(v));
        }
    }
    assert_eq!(std::fs::read(dir.path().join("complete.ply")).unwrap(), want);

    let mut want = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\n\
property double x\nproperty double y\nproperty double z\nend_header\n"
        .to_vec();
    for v in [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5, -0.25] {
        want.extend_from_slice(&f64::to_le_bytes(v));
    }
    assert_eq!(std::fs::read(dir.path().join("gt_deformed.ply")).unwrap(), want);

    assert_eq!(
        std::fs::read_to_string(dir.path().join("gt_matches.json")).unwrap(),
        "[[2,0],[0,1]]\n"
    );
    let meta = std::fs::read_to_string(dir.path().join("meta.json")).unwrap();
    assert!(meta.starts_with("{\n  \"schema_version\": 1,\n  \"seed\": 7,\n  \"deformation\": \"compression\",\n"));
    let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(v["rigid"], serde_json::json!([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]));
    assert_eq!(v["permutation_y"], serde_json::json!([1, 0]));
    assert_eq!(v["camera"]["position"], serde_json::json!([0.0, 0.0, 2.0]));
    assert_eq!(read_sample(dir.path()).unwrap(), sample);
}
