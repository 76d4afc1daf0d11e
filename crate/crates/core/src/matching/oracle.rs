use super::FeatureMatrix;
use crate::geometry::Vec3;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Random Fourier features approximating a Gaussian kernel of width `bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleFeatureParams {
    pub dim: usize,
    pub bandwidth: f64,
    pub seed: u64,
}

impl Default for OracleFeatureParams {
    fn default() -> Self {
        Self {
            dim: 256,
            bandwidth: 0.005,
            seed: 0,
        }
    }
}

/// Coordinate-derived features: `sqrt(2/D) cos(w_k . p + b_k)` with
/// `w_k ~ N(0, I / bandwidth²)` and `b_k ~ U[0, 2π)`.
///
/// Identical positions get identical rows and the cosine similarity of two rows
/// approximates `exp(-|p - q|² / (2 bandwidth²))`, so features built from
/// ground-truth deformed coordinates make true correspondences the most similar pairs.
pub fn oracle_features(points: &[Vec3], params: &OracleFeatureParams) -> FeatureMatrix {
    assert!(params.dim > 0 && params.bandwidth > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, 1.0 / params.bandwidth).expect("positive bandwidth");
    let freqs: Vec<Vec3> = (0..params.dim)
        .map(|_| Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    let phases: Vec<f64> = (0..params.dim)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    let scale = (2.0 / params.dim as f64).sqrt();
    let data = DMatrix::from_fn(points.len(), params.dim, |i, k| {
        scale * (freqs[k].dot(&points[i]) + phases[k]).cos()
    });
    FeatureMatrix::new(data).expect("cosines are finite")
}
