use super::{bbox, PointCloud, Vec3};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Downsampled keypoints plus the owning keypoint of every dense point.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSet {
    pub keypoints: Vec<Vec3>,
    pub assignment: Vec<usize>,
}

impl KeypointSet {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    /// Dense point indices grouped by keypoint.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.keypoints.len()];
        for (i, &k) in self.assignment.iter().enumerate() {
            groups[k].push(i);
        }
        groups
    }
}

/// One keypoint per occupied voxel at the centroid of its points. Voxels are
/// anchored at the cloud's bounding-box minimum and keypoints are numbered in
/// order of first occurrence.
pub fn voxel_downsample(cloud: &PointCloud, voxel_size: f64) -> Result<KeypointSet> {
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(Error::InvalidInput(format!("voxel size {voxel_size} must be positive")));
    }
    if cloud.is_empty() {
        return Ok(KeypointSet {
            keypoints: Vec::new(),
            assignment: Vec::new(),
        });
    }
    let origin = bbox(&cloud.points).0;
    let mut slot: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut sums: Vec<Vec3> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut assignment = Vec::with_capacity(cloud.len());
    for p in &cloud.points {
        let q = (p - origin) / voxel_size;
        let key = (q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64);
        let k = *slot.entry(key).or_insert_with(|| {
            sums.push(Vec3::zeros());
            counts.push(0);
            sums.len() - 1
        });
        sums[k] += p;
        counts[k] += 1;
        assignment.push(k);
    }
    let keypoints = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| s / c as f64)
        .collect();
    Ok(KeypointSet {
        keypoints,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    #[test]
    fn two_points_one_voxel() {
        let c = PointCloud::new(vec![Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.2, 0.3, 0.1)]);
        let k = voxel_downsample(&c, 1.0).unwrap();
        assert_eq!(k.keypoints.len(), 1);
        assert!((k.keypoints[0] - Vec3::new(0.15, 0.2, 0.1)).norm() < 1e-15);
        assert_eq!(k.assignment, vec![0, 0]);
    }

    #[test]
    fn huge_voxel_gives_centroid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec3> = (0..50)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let c = PointCloud::new(pts);
        let k = voxel_downsample(&c, 10.0).unwrap();
        assert_eq!(k.keypoints.len(), 1);
        assert!((k.keypoints[0] - c.centroid()).norm() < 1e-12);
    }

    #[test]
    fn occupied_cells_match_independent_bucketing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000);
        let pts: Vec<Vec3> = (0..1000)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let c = PointCloud::new(pts.clone());
        let k = voxel_downsample(&c, 0.25).unwrap();
        // oracle: bucket by integer cell relative to the per-axis minimum
        let min = pts.iter().fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(p));
        let cells: BTreeSet<(i64, i64, i64)> = pts
            .iter()
            .map(|p| {
                (
                    ((p.x - min.x) / 0.25).floor() as i64,
                    ((p.y - min.y) / 0.25).floor() as i64,
                    ((p.z - min.z) / 0.25).floor() as i64,
                )
            })
            .collect();
        assert_eq!(k.keypoints.len(), cells.len());
        // surjective total assignment
        let owned: BTreeSet<usize> = k.assignment.iter().copied().collect();
        assert_eq!(owned.len(), k.keypoints.len());
        assert_eq!(k.assignment.len(), 1000);
    }

    #[test]
    fn rejects_non_positive_voxel() {
        assert!(voxel_downsample(&PointCloud::default(), 0.0).is_err());
    }
}
