use super::FeatureMatrix;
use crate::geometry::{estimate_normals, HashGrid, PointCloud, Vec3};
use nalgebra::DMatrix;
use std::f64::consts::PI;

pub const FPFH_BINS: usize = 11;
pub const FPFH_DIM: usize = 3 * FPFH_BINS;

/// FPFH descriptors plus the indices of points that had no neighbor within the feature radius.
#[derive(Debug, Clone)]
pub struct FpfhResult {
    pub features: FeatureMatrix,
    pub isolated: Vec<usize>,
}

/// Darboux-frame angles `(theta, alpha, phi)` for an oriented point pair, or
/// `None` when the pair is coincident or the frame is undefined.
pub fn pair_features(p1: &Vec3, n1: &Vec3, p2: &Vec3, n2: &Vec3) -> Option<[f64; 3]> {
    let mut d = p2 - p1;
    let len = d.norm();
    if len == 0.0 {
        return None;
    }
    let (a1, a2) = (n1.dot(&d) / len, n2.dot(&d) / len);
    // The source is the endpoint whose normal is closer to the connecting line.
    let (u, nt, phi) = if a1.abs().acos() > a2.abs().acos() {
        d = -d;
        (n2, n1, -a2)
    } else {
        (n1, n2, a1)
    };
    let v = d.cross(u);
    let vn = v.norm();
    if vn == 0.0 {
        return None;
    }
    let v = v / vn;
    let w = u.cross(&v);
    let alpha = v.dot(nt);
    let theta = w.dot(nt).atan2(u.dot(nt));
    Some([theta, alpha, phi])
}

fn bin(value: f64, lo: f64, hi: f64) -> usize {
    let b = (FPFH_BINS as f64 * (value - lo) / (hi - lo)).floor();
    b.clamp(0.0, (FPFH_BINS - 1) as f64) as usize
}

fn spfh(points: &[Vec3], normals: &[Vec3], i: usize, nbrs: &[(usize, f64)]) -> [f64; FPFH_DIM] {
    let mut h = [0.0; FPFH_DIM];
    if nbrs.is_empty() {
        return h;
    }
    let inc = 100.0 / nbrs.len() as f64;
    for &(j, _) in nbrs {
        if let Some([theta, alpha, phi]) = pair_features(&points[i], &normals[i], &points[j], &normals[j]) {
            h[bin(theta, -PI, PI)] += inc;
            h[FPFH_BINS + bin(alpha, -1.0, 1.0)] += inc;
            h[2 * FPFH_BINS + bin(phi, -1.0, 1.0)] += inc;
        }
    }
    h
}

/// 33-bin Fast Point Feature Histograms.
///
/// Normals are re-estimated by PCA within `normal_radius` (oriented like the
/// input normals). Each point's SPFH histograms its pairs with every neighbor
/// inside `feature_radius`, each pair adding `100 / k`; the FPFH adds the
/// neighbors' SPFH weighted by `1 / (k * distance)`.
pub fn compute_fpfh(cloud: &PointCloud, normal_radius: f64, feature_radius: f64) -> FpfhResult {
    assert!(normal_radius > 0.0 && feature_radius > 0.0, "radii must be positive");
    let normals = estimate_normals(cloud, normal_radius);
    let points = &cloud.points;
    let grid = HashGrid::with_cell_size(points, feature_radius);
    let neighborhoods: Vec<Vec<(usize, f64)>> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            grid.within_radius(p, feature_radius)
                .into_iter()
                .filter(|n| n.index != i)
                .map(|n| (n.index, n.distance))
                .collect()
        })
        .collect();
    let spfhs: Vec<[f64; FPFH_DIM]> = (0..points.len())
        .map(|i| spfh(points, &normals, i, &neighborhoods[i]))
        .collect();

    let mut data = DMatrix::zeros(points.len(), FPFH_DIM);
    let mut isolated = Vec::new();
    for (i, nbrs) in neighborhoods.iter().enumerate() {
        if nbrs.is_empty() {
            isolated.push(i);
            continue;
        }
        let mut f = spfhs[i];
        let k = nbrs.len() as f64;
        for &(j, dist) in nbrs {
            if dist == 0.0 {
                continue;
            }
            let w = 1.0 / (k * dist);
            for (fb, sb) in f.iter_mut().zip(&spfhs[j]) {
                *fb += w * sb;
            }
        }
        for (c, v) in f.iter().enumerate() {
            data[(i, c)] = *v;
        }
    }
    FpfhResult {
        features: FeatureMatrix::new(data).expect("fpfh values are finite"),
        isolated,
    }
}
