//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use nalgebra::{DMatrix, DVector, Matrix4, SMatrix};
use psreg_core::arap::{arap_solve, gen_compression, gen_lobe, ArapConfig, CompressionParams, DeformationConstraints, LobeParams};
use psreg_core::crop::{front_facing, sample_camera, visible_crop, CropConfig};
use psreg_core::dataset::{generate_sample, DeformationMode, GenerationParams, Patient};
use psreg_core::fem::{assemble_stiffness, conjugate_gradient, element_stiffness, CgOptions, MaterialParams, Preconditioner};
use psreg_core::geometry::{random_rigid, Normalization, PointCloud, TriMesh};
use psreg_core::matching::{MatchingConfig, OracleFeatureParams};
use psreg_core::nn::{focal_matching_loss, overlap_head, overlap_loss, weighted_chamfer_loss, FocalParams};
use psreg_core::phantom::Phantom;
use psreg_core::workflow::{
    gt_correspondences, match_sample, register_sample, write_oracle_features, FpfhParams, MatchOptions, Provider,
    RegisterOptions,
};
use psreg_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
}

fn phantom_patient(freq: usize, params: GenerationParams) -> Patient {
    let p = Phantom::liver(freq, 13);
    Patient::from_parts(p.surface, p.volume, p.lobe_labels, params).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn fpfh_baseline() -> Outcome {
    let patient = phantom_patient(32, GenerationParams::default());
    let start = Instant::now();
    let options = MatchOptions {
        provider: Provider::Fpfh,
        matching: MatchingConfig::default(),
        fpfh: FpfhParams::default(),
    };
    let (mut ms, mut ir) = (Vec::new(), Vec::new());
    for seed in 0..50 {
        let sample = generate_sample(&patient, seed).unwrap();
        let m = match_sample(&sample, &options).unwrap().metrics;
        ms.push(m.matching_score);
        ir.push(m.inlier_ratio);
    }
    let secs = start.elapsed().as_secs_f64();
    let (ms_m, ms_s) = mean_std(&ms);
    let (ir_m, ir_s) = mean_std(&ir);
    outcome(
        ms_m < 2.0 && ir_m < 2.0 && secs < 300.0,
        format!(
            "{} vertices, 50 samples: MS {ms_m:.2} ± {ms_s:.2} %, IR {ir_m:.2} ± {ir_s:.2} % (need < 2), {secs:.1} s (need < 300)",
            patient.vertex_count()
        ),
    )
}

fn oracle_matching() -> Outcome {
    let patient = phantom_patient(32, GenerationParams::default());
    let dir = tempfile::tempdir().unwrap();
    let (mut ms, mut ir) = (Vec::new(), Vec::new());
    for seed in 100..120 {
        let sample = generate_sample(&patient, seed).unwrap();
        let path = dir.path().join(format!("{seed}.bin"));
        write_oracle_features(&sample, &OracleFeatureParams::default(), &path).unwrap();
        let options = MatchOptions {
            provider: Provider::FeaturesFile(path),
            matching: MatchingConfig::default(),
            fpfh: FpfhParams::default(),
        };
        let m = match_sample(&sample, &options).unwrap().metrics;
        ms.push(m.matching_score);
        ir.push(m.inlier_ratio);
    }
    let (ms_m, _) = mean_std(&ms);
    let (ir_m, _) = mean_std(&ir);
    let ms_min = ms.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        ms_m > 90.0 && ir_m > 95.0,
        format!("20 samples: MS {ms_m:.2} % (min {ms_min:.2}, need > 90), IR {ir_m:.2} % (need > 95)"),
    )
}

fn registration_efficacy() -> Outcome {
    let mut params = GenerationParams::default();
    params.deformation = DeformationMode::Compression;
    params.compression.max_magnitude = 0.05;
    let patient = phantom_patient(32, params);
    let scale = patient.normalization.scale;
    let (mut reductions, mut fres, mut times) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..10 {
        let sample = generate_sample(&patient, seed).unwrap();
        let start = Instant::now();
        let out = register_sample(&patient.volume, &sample, &gt_correspondences(&sample), &RegisterOptions::default())
            .unwrap();
        times.push(start.elapsed().as_secs_f64());
        reductions.push(out.metrics.tre_reduction());
        // FRE as a fraction of the bounding-box diagonal, which is `scale` mm
        fres.push(out.metrics.fre.mean / scale);
    }
    let min_red = reductions.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_fre = fres.iter().cloned().fold(0.0, f64::max);
    let max_t = times.iter().cloned().fold(0.0, f64::max);
    outcome(
        min_red >= 70.0 && max_fre < 0.01 && max_t < 120.0,
        format!(
            "{} tets, 10 samples: TRE reduction mean {:.1} % min {min_red:.1} % (need >= 70), FRE max {:.3} % of diagonal (need < 1), solve max {max_t:.1} s (need < 120)",
            patient.volume.tets.len(),
            mean_std(&reductions).0,
            max_fre * 100.0
        ),
    )
}

/// `V Bᵀ D B` in Voigt notation with engineering shear strains.
fn voigt_element(p: &[Vec3; 4], e: f64, nu: f64) -> SMatrix<f64, 12, 12> {
    let m = Matrix4::from_fn(|r, c| if c == 0 { 1.0 } else { p[r][c - 1] });
    let volume = m.determinant() / 6.0;
    let inv = m.try_inverse().unwrap();
    let mut b = SMatrix::<f64, 6, 12>::zeros();
    for a in 0..4 {
        let (dx, dy, dz) = (inv[(1, a)], inv[(2, a)], inv[(3, a)]);
        let c = 3 * a;
        b[(0, c)] = dx;
        b[(1, c + 1)] = dy;
        b[(2, c + 2)] = dz;
        b[(3, c + 1)] = dz;
        b[(3, c + 2)] = dy;
        b[(4, c)] = dz;
        b[(4, c + 2)] = dx;
        b[(5, c)] = dy;
        b[(5, c + 1)] = dx;
    }
    let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mut d = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = f * if i == j { 1.0 - nu } else { nu };
        }
        d[(3 + i, 3 + i)] = f * (1.0 - 2.0 * nu) / 2.0;
    }
    b.transpose() * d * b * volume
}

fn stiffness_correctness() -> Outcome {
    let patient = phantom_patient(8, GenerationParams::default());
    let material = MaterialParams {
        young_modulus: 1.5e3,
        poisson_ratio: 0.45,
    };
    let s = assemble_stiffness(&patient.volume, &material).unwrap().matrix;
    let asym = s.max_asymmetry() / s.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = s.nrows;
    let mut y = vec![0.0; n];
    let mut null = 0.0f64;
    for _ in 0..5 {
        let t = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let u: Vec<f64> = (0..n).map(|i| t[i % 3]).collect();
        s.mul_vec(&u, &mut y);
        null = null.max(y.iter().fold(0.0f64, |m, v| m.max(v.abs())) / s.norm_inf());
    }
    let mut min_q = f64::INFINITY;
    for _ in 0..100 {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        s.mul_vec(&u, &mut y);
        min_q = min_q.min(u.iter().zip(&y).map(|(a, b)| a * b).sum());
    }
    let mut oracle_err = 0.0f64;
    let mut tets = 0;
    while tets < 50 {
        let mut p = [Vec3::zeros(); 4];
        for q in &mut p {
            *q = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let det = (p[1] - p[0]).dot(&(p[2] - p[0]).cross(&(p[3] - p[0])));
        if det.abs() < 1e-3 {
            continue;
        }
        if det < 0.0 {
            p.swap(2, 3);
        }
        let (e, nu) = (rng.random_range(1.0..2000.0), rng.random_range(-0.9..0.49));
        let k = element_stiffness(&p, &MaterialParams { young_modulus: e, poisson_ratio: nu }).unwrap();
        let want = voigt_element(&p, e, nu);
        let floor = 1e-12 * want.amax();
        for (a, b) in k.iter().zip(want.iter()) {
            oracle_err = oracle_err.max((a - b).abs() / b.abs().max(floor));
        }
        tets += 1;
    }
    outcome(
        asym < 1e-10 && null < 1e-8 && min_q >= -1e-12 && oracle_err < 1e-9,
        format!(
            "{} tets: asymmetry {asym:.1e}, translation {null:.1e}, min uᵀSu {min_q:.3e}, element vs BᵀDB oracle {oracle_err:.1e} over 50 tets",
            patient.volume.tets.len()
        ),
    )
}

fn cg_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_res = 0.0f64;
    let mut worst_err = 0.0f64;
    let mut all_converged = true;
    for _ in 0..20 {
        let m = DMatrix::from_fn(50, 50, |_, _| rng.random_range(-1.0..1.0));
        let a = m.transpose() * &m + DMatrix::identity(50, 50);
        let b = DVector::from_fn(50, |_, _| rng.random_range(-1.0..1.0));
        let diag: Vec<f64> = a.diagonal().iter().cloned().collect();
        let opts = CgOptions {
            tolerance: 1e-10,
            max_iterations: Some(150),
            preconditioner: Preconditioner::Jacobi,
        };
        let r = conjugate_gradient(
            |x, y| y.copy_from_slice((&a * DVector::from_column_slice(x)).as_slice()),
            b.as_slice(),
            Some(&diag),
            &opts,
        )
        .unwrap();
        all_converged &= r.converged;
        let x = DVector::from_vec(r.x);
        worst_res = worst_res.max((&b - &a * &x).norm() / b.norm());
        let exact = a.clone().lu().solve(&b).unwrap();
        worst_err = worst_err.max((x - &exact).norm() / exact.norm());
    }
    let b = [0.5, -1.0, 2.0];
    let id = conjugate_gradient(|x, y| y.copy_from_slice(x), &b, None, &CgOptions::default()).unwrap();
    outcome(
        all_converged && worst_res <= 1e-10 && worst_err <= 1e-8 && id.iterations == 1 && id.x == b,
        format!(
            "20 systems: residual {worst_res:.1e} (need <= 1e-10), vs dense solve {worst_err:.1e} (need <= 1e-8); identity in {} iteration",
            id.iterations
        ),
    )
}

fn loss_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-6;
    let (mut focal, mut chamfer, mut overlap) = (0.0f64, 0.0f64, 0.0f64);
    let params = FocalParams::default();
    for inst in 0..100 {
        // focal matching loss
        let (r, c) = (rng.random_range(1..6), rng.random_range(1..6));
        let m = DMatrix::from_fn(r, c, |_, _| rng.random_range(0.02..0.98));
        let gt: Vec<(usize, usize)> = (0..rng.random_range(0..=r.min(c))).map(|k| (k, (k + inst) % c)).collect();
        let l = focal_matching_loss(&m, &gt, &params).unwrap();
        for k in 0..m.len() {
            let (mut a, mut b) = (m.clone(), m.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (focal_matching_loss(&a, &gt, &params).unwrap().loss - focal_matching_loss(&b, &gt, &params).unwrap().loss)
                / (2.0 * h);
            focal = focal.max(rel_err(l.grad[k], fd));
        }

        // weighted chamfer loss, both exponents
        let mut pt = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let x: Vec<Vec3> = (0..5).map(|_| pt()).collect();
        let y: Vec<Vec3> = (0..7).map(|_| pt()).collect();
        let s: Vec<f64> = (0..5).map(|_| rng.random_range(0.05..1.0)).collect();
        let p = 1 + (inst % 2) as u32;
        let l = weighted_chamfer_loss(&x, &y, &s, p).unwrap();
        let loss = |x: &[Vec3], s: &[f64]| weighted_chamfer_loss(x, &y, s, p).unwrap().loss;
        for i in 0..x.len() {
            for a in 0..3 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i][a] += h;
                xm[i][a] -= h;
                chamfer = chamfer.max(rel_err(l.grad_points[i][a], (loss(&xp, &s) - loss(&xm, &s)) / (2.0 * h)));
            }
            let (mut sp, mut sm) = (s.clone(), s.clone());
            sp[i] += h;
            sm[i] -= h;
            chamfer = chamfer.max(rel_err(l.grad_scores[i], (loss(&x, &sp) - loss(&x, &sm)) / (2.0 * h)));
        }

        // overlap loss
        let n = rng.random_range(1..12);
        let sc: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let (_, g) = overlap_loss(&sc, &labels).unwrap();
        for i in 0..n {
            let (mut a, mut b) = (sc.clone(), sc.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (overlap_loss(&a, &labels).unwrap().0 - overlap_loss(&b, &labels).unwrap().0) / (2.0 * h);
            overlap = overlap.max(rel_err(g[i], fd));
        }
    }
    outcome(
        focal < 1e-5 && chamfer < 1e-5 && overlap < 1e-5,
        format!("100 instances each, max relative error: focal {focal:.1e}, chamfer {chamfer:.1e}, overlap {overlap:.1e} (need < 1e-5)"),
    )
}

fn overlap_head_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut err, mut lo, mut hi) = (0.0f64, 1.0f64, 0.0f64);
    for _ in 0..100 {
        let (n, d) = (rng.random_range(1..20), rng.random_range(1..64));
        let c = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let w = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let b: f64 = rng.random_range(-1.0..1.0);
        let s = overlap_head(&c, &w, b).unwrap();
        for (i, &si) in s.iter().enumerate() {
            let mut z = b;
            for j in 0..d {
                z += c[(i, j)] * w[j];
            }
            err = err.max((si - 1.0 / (1.0 + (-z).exp())).abs());
            lo = lo.min(si);
            hi = hi.max(si);
        }
    }
    outcome(
        err <= 1e-12 && lo > 0.0 && hi < 1.0,
        format!("100 random heads: max deviation {err:.1e} (need <= 1e-12), scores in [{lo:.4}, {hi:.4}]"),
    )
}

fn normalized_surface(freq: usize) -> (TriMesh, Vec<usize>) {
    let p = Phantom::liver(freq, 2);
    let mut mesh = p.surface;
    Normalization::fit(&mesh.vertices).unwrap().apply_all(&mut mesh.vertices);
    (mesh, p.lobe_labels)
}

fn arap_properties() -> Outcome {
    let (mesh, lobe) = normalized_surface(12);
    let config = ArapConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = random_rigid(&mut rng, 90.0, 0.5);
    let handles: Vec<usize> = (0..mesh.vertices.len()).step_by(29).collect();
    let rigid = DeformationConstraints {
        handle_targets: handles.iter().map(|&v| t.apply_point(&mesh.vertices[v]).into()).collect(),
        handle_indices: handles,
        anchor_indices: vec![],
    };
    let r = arap_solve(&mesh, &rigid, &config).unwrap();
    let rigid_err = mesh
        .vertices
        .iter()
        .zip(&r.positions)
        .map(|(p, q)| (t.apply_point(p) - q).norm())
        .fold(0.0, f64::max);
    let (mut monotone, mut exact) = (true, true);
    for k in 0..20 {
        let c = if k % 2 == 0 {
            gen_compression(&mesh, &mut rng, &CompressionParams::default())
        } else {
            gen_lobe(&mesh, &lobe, &mut rng, &LobeParams::default()).unwrap()
        };
        let r = arap_solve(&mesh, &c, &config).unwrap();
        monotone &= r.energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        exact &= c.handle_indices.iter().zip(&c.handle_targets).all(|(&v, t)| r.positions[v] == Vec3::from(*t));
        exact &= c.anchor_indices.iter().all(|&v| r.positions[v] == mesh.vertices[v]);
    }
    outcome(
        rigid_err < 1e-6 && monotone && exact,
        format!(
            "rigid targets reproduced within {rigid_err:.1e}; 20 constraint sets: energy non-increasing {monotone}, constraints exact {exact}"
        ),
    )
}

fn crop_contract() -> Outcome {
    let patient = phantom_patient(32, GenerationParams::default());
    let cloud = PointCloud::with_normals(patient.surface.vertices.clone(), patient.rest_normals.clone()).unwrap();
    let config = CropConfig::default();
    let target = config.target_count(cloud.len());
    let cos_max = config.max_angle.to_radians().cos();
    let (mut count_ok, mut angle_ok, mut same, mut nearest_ok, mut checked) = (true, true, true, true, 0);
    for seed in 0..50 {
        let mut r1 = ChaCha8Rng::seed_from_u64(seed);
        let mut r2 = ChaCha8Rng::seed_from_u64(seed);
        let cam = sample_camera(&mut r1, &cloud, &config);
        let crop = visible_crop(&cloud, &cam, &config).unwrap();
        let again = visible_crop(&cloud, &sample_camera(&mut r2, &cloud, &config), &config).unwrap();
        same &= crop.retained == again.retained;
        // independent filter: angle between normal and view ray below the limit
        let eye = cam.position();
        let visible: Vec<usize> = (0..cloud.len())
            .filter(|&i| {
                let v = eye - cloud.points[i];
                let n = patient.rest_normals[i];
                (n.dot(&v) / v.norm()).clamp(-1.0, 1.0).acos() < config.max_angle.to_radians()
            })
            .collect();
        for &i in &crop.retained {
            let v = eye - cloud.points[i];
            angle_ok &= patient.rest_normals[i].dot(&v) / v.norm() > cos_max - 1e-12;
        }
        if visible.len() >= target {
            checked += 1;
            count_ok &= crop.retained.len() == target;
            let max_in = crop.retained.iter().map(|&i| (cloud.points[i] - eye).norm()).fold(0.0, f64::max);
            let min_out = visible
                .iter()
                .filter(|i| crop.retained.binary_search(i).is_err())
                .map(|&i| (cloud.points[i] - eye).norm())
                .fold(f64::INFINITY, f64::min);
            nearest_ok &= max_in <= min_out + 1e-12;
        }
    }
    let front = front_facing(&cloud, &sample_camera(&mut ChaCha8Rng::seed_from_u64(0), &cloud, &config), 80.0).unwrap();
    outcome(
        count_ok && angle_ok && same && nearest_ok && checked > 0,
        format!(
            "50 cameras ({checked} with enough candidates, e.g. {} front-facing): count = {target} {count_ok}, angle test {angle_ok}, nearest kept {nearest_ok}, reproducible {same}",
            front.len()
        ),
    )
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timings.log" {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().to_string();
                out.insert(rel, hex(&Sha256::digest(std::fs::read(&p).unwrap())));
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_psreg");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).current_dir(dir.path()).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["phantom", "--out", "patient", "--surface-frequency", "20", "--tet-resolution", "8"]);
    for out in ["run_a", "run_b"] {
        run(&[
            "pipeline", "--patient", "patient/patient.toml", "--seed", "3", "--count", "3", "--workers", "2",
            "--provider", "oracle", "--out", out,
        ]);
    }
    let a = hash_tree(&dir.path().join("run_a"));
    let b = hash_tree(&dir.path().join("run_b"));
    let kinds = ["complete.ply", "matches.json", "registered.ply", "reg_metrics.json", "report.json"];
    let covered = kinds.iter().all(|k| a.keys().any(|f| f.ends_with(k)));
    outcome(
        a == b && covered,
        format!("two pipeline runs, {} files compared: identical {}", a.len(), a == b),
    )
}

fn throughput() -> Outcome {
    let patient = phantom_patient(70, GenerationParams::default());
    let mut times = Vec::new();
    for seed in 0..5 {
        let start = Instant::now();
        let s = generate_sample(&patient, seed).unwrap();
        times.push(start.elapsed().as_secs_f64());
        assert_eq!(s.complete.len(), patient.vertex_count());
    }
    let max = times.iter().cloned().fold(0.0, f64::max);
    outcome(
        max <= 2.0,
        format!(
            "{} vertices: mean {:.2} s, max {max:.2} s per sample (need <= 2)",
            patient.vertex_count(),
            mean_std(&times).0
        ),
    )
}

fn main() {
    // libtest-style flags such as `--list` or filters are not supported; run everything.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("FPFH baseline matching", fpfh_baseline),
        ("oracle-feature matching", oracle_matching),
        ("registration efficacy", registration_efficacy),
        ("stiffness correctness", stiffness_correctness),
        ("conjugate gradient", cg_correctness),
        ("loss gradients", loss_gradients),
        ("overlap head", overlap_head_exactness),
        ("ARAP properties", arap_properties),
        ("crop contract", crop_contract),
        ("end-to-end determinism", determinism),
        ("generation throughput", throughput),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {}",
            k + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
