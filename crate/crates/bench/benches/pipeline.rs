use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use psreg_core::arap::{arap_solve, gen_compression, ArapConfig, CompressionParams};
use psreg_core::dataset::{generate_sample, GenerationParams, Patient};
use psreg_core::fem::{assemble_stiffness, MaterialParams};
use psreg_core::matching::{compute_fpfh, match_features, oracle_features, MatchingConfig, OracleFeatureParams};
use psreg_core::phantom::Phantom;
use psreg_core::workflow::{gt_correspondences, register_sample, RegisterOptions};
use psreg_core::PointCloud;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn patient(freq: usize, res: usize) -> Patient {
    let p = Phantom::liver(freq, res);
    Patient::from_parts(p.surface, p.volume, p.lobe_labels, GenerationParams::default()).unwrap()
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_sample");
    group.sample_size(10);
    for freq in [16, 32] {
        let p = patient(freq, 6);
        group.bench_with_input(BenchmarkId::from_parameter(p.vertex_count()), &p, |b, p| {
            b.iter(|| generate_sample(p, black_box(1)).unwrap())
        });
    }
    group.finish();
}

fn arap(c: &mut Criterion) {
    let p = patient(24, 4);
    let constraints = gen_compression(&p.surface, &mut ChaCha8Rng::seed_from_u64(2), &CompressionParams::default());
    c.bench_function("arap_solve", |b| {
        b.iter(|| arap_solve(&p.surface, &constraints, &ArapConfig::default()).unwrap())
    });
}

fn matching(c: &mut Criterion) {
    let p = patient(24, 4);
    let s = generate_sample(&p, 3).unwrap();
    let mut group = c.benchmark_group("matching");
    group.sample_size(10);
    let partial = PointCloud::new(s.partial.points.clone());
    group.bench_function("fpfh_partial", |b| b.iter(|| compute_fpfh(black_box(&partial), 0.025, 0.05)));
    let params = OracleFeatureParams::default();
    let fx = oracle_features(&s.complete.points, &params);
    let fy = oracle_features(&s.partial.points, &params);
    group.bench_function("dual_softmax_mnn", |b| {
        b.iter(|| match_features(&fx, &fy, &MatchingConfig::default()).unwrap())
    });
    group.finish();
}

fn fem(c: &mut Criterion) {
    let p = patient(32, 13);
    let material = MaterialParams::default();
    let mut group = c.benchmark_group("fem");
    group.sample_size(10);
    group.bench_function("assemble_stiffness", |b| b.iter(|| assemble_stiffness(&p.volume, &material).unwrap()));
    let s = generate_sample(&p, 4).unwrap();
    let matches = gt_correspondences(&s);
    group.bench_function("register_sample", |b| {
        b.iter(|| register_sample(&p.volume, &s, &matches, &RegisterOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, generation, arap, matching, fem);
criterion_main!(benches);
