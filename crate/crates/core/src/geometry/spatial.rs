//! Uniform hash grid for exact nearest-neighbor and radius queries.

use super::{bbox, PointCloud, Vec3};
use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

type Cell = (i64, i64, i64);

/// Points bucketed into cubic cells; query results are exact and
/// ties are broken by the lower point index.
#[derive(Debug, Clone)]
pub struct HashGrid<'a> {
    points: &'a [Vec3],
    cell: f64,
    origin: Vec3,
    order: Vec<usize>,
    buckets: HashMap<Cell, (usize, usize)>,
    lo: Cell,
    hi: Cell,
}

impl<'a> HashGrid<'a> {
    /// Grid with a cell size picked for surface-like samplings (about two
    /// average spacings per cell).
    pub fn new(points: &'a [Vec3]) -> Self {
        let n = points.len().max(1) as f64;
        let diag = super::bbox_diagonal(points);
        let cell = if diag > 0.0 { 2.0 * diag / n.sqrt() } else { 1.0 };
        Self::with_cell_size(points, cell)
    }

    pub fn with_cell_size(points: &'a [Vec3], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let origin = if points.is_empty() {
            Vec3::zeros()
        } else {
            bbox(points).0
        };
        let key = |p: &Vec3| -> Cell {
            let q = (p - origin) / cell;
            (q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64)
        };
        let mut keyed: Vec<(Cell, usize)> = points.iter().enumerate().map(|(i, p)| (key(p), i)).collect();
        keyed.sort_unstable();
        let mut buckets = HashMap::new();
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        let mut start = 0;
        while start < keyed.len() {
            let k = keyed[start].0;
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == k {
                end += 1;
            }
            buckets.insert(k, (start, end));
            lo = (lo.0.min(k.0), lo.1.min(k.1), lo.2.min(k.2));
            hi = (hi.0.max(k.0), hi.1.max(k.1), hi.2.max(k.2));
            start = end;
        }
        Self {
            points,
            cell,
            origin,
            order: keyed.into_iter().map(|(_, i)| i).collect(),
            buckets,
            lo,
            hi,
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn key(&self, p: &Vec3) -> Cell {
        let q = (p - self.origin) / self.cell;
        (q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64)
    }

    fn bucket(&self, c: Cell) -> &[usize] {
        match self.buckets.get(&c) {
            Some(&(s, e)) => &self.order[s..e],
            None => &[],
        }
    }

    /// Exact `k` nearest points to `q`, sorted by (distance, index).
    pub fn knn(&self, q: &Vec3, k: usize) -> Vec<Neighbor> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let c = self.key(q);
        // rings beyond this cannot contain points
        let max_ring = [
            (c.0 - self.lo.0).abs(),
            (c.0 - self.hi.0).abs(),
            (c.1 - self.lo.1).abs(),
            (c.1 - self.hi.1).abs(),
            (c.2 - self.lo.2).abs(),
            (c.2 - self.hi.2).abs(),
        ]
        .into_iter()
        .max()
        .unwrap();
        let gap = |v: i64, lo: i64, hi: i64| (lo - v).max(v - hi).max(0);
        let min_ring = gap(c.0, self.lo.0, self.hi.0)
            .max(gap(c.1, self.lo.1, self.hi.1))
            .max(gap(c.2, self.lo.2, self.hi.2));
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let consider = |i: usize, best: &mut Vec<(f64, usize)>| {
            let d2 = (self.points[i] - q).norm_squared();
            let cand = (d2, i);
            if best.len() == k && !lt(cand, best[k - 1]) {
                return;
            }
            let pos = best.partition_point(|&b| lt(b, cand));
            best.insert(pos, cand);
            best.truncate(k);
        };
        for r in min_ring..=max_ring {
            for_each_shell_cell(c, r, |cell| {
                for &i in self.bucket(cell) {
                    consider(i, &mut best);
                }
            });
            if best.len() == k {
                let bound = r as f64 * self.cell;
                if best[k - 1].0 < bound * bound {
                    break;
                }
            }
        }
        best.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    /// All points within `radius` of `q` (inclusive), sorted by (distance, index).
    pub fn within_radius(&self, q: &Vec3, radius: f64) -> Vec<Neighbor> {
        let r2 = radius * radius;
        let lo = self.key(&(q - Vec3::repeat(radius)));
        let hi = self.key(&(q + Vec3::repeat(radius)));
        let mut out = Vec::new();
        for x in lo.0.max(self.lo.0)..=hi.0.min(self.hi.0) {
            for y in lo.1.max(self.lo.1)..=hi.1.min(self.hi.1) {
                for z in lo.2.max(self.lo.2)..=hi.2.min(self.hi.2) {
                    for &i in self.bucket((x, y, z)) {
                        let d2 = (self.points[i] - q).norm_squared();
                        if d2 <= r2 {
                            out.push((d2, i));
                        }
                    }
                }
            }
        }
        out.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        out.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }
}

#[inline]
fn lt(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Visits the cells at Chebyshev distance exactly `r` from `c`.
fn for_each_shell_cell(c: Cell, r: i64, mut f: impl FnMut(Cell)) {
    if r == 0 {
        f(c);
        return;
    }
    for dx in -r..=r {
        for dy in -r..=r {
            if dx.abs() == r || dy.abs() == r {
                for dz in -r..=r {
                    f((c.0 + dx, c.1 + dy, c.2 + dz));
                }
            } else {
                f((c.0 + dx, c.1 + dy, c.2 - r));
                f((c.0 + dx, c.1 + dy, c.2 + r));
            }
        }
    }
}

impl PointCloud {
    /// Exact `count`-nearest neighbors in `target` for every query point.
    pub fn nearest_neighbors(&self, target: &PointCloud, count: usize) -> Result<Vec<Vec<Neighbor>>> {
        nearest_neighbors(&self.points, &target.points, count)
    }
}

pub fn nearest_neighbors(query: &[Vec3], target: &[Vec3], count: usize) -> Result<Vec<Vec<Neighbor>>> {
    if target.is_empty() {
        return Err(Error::InvalidInput("nearest-neighbor target is empty".into()));
    }
    if count == 0 || count > target.len() {
        return Err(Error::InvalidInput(format!(
            "neighbor count {count} not in 1..={}",
            target.len()
        )));
    }
    let grid = HashGrid::new(target);
    Ok(query.iter().map(|q| grid.knn(q, count)).collect())
}

/// Index of the nearest target point for each query (ties to lower index).
pub fn nearest_indices(query: &[Vec3], target: &[Vec3]) -> Result<Vec<usize>> {
    Ok(nearest_neighbors(query, target, 1)?
        .into_iter()
        .map(|n| n[0].index)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(query: &Vec3, target: &[Vec3], k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = target
            .iter()
            .enumerate()
            .map(|(i, p)| ((p - query).norm_squared(), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.truncate(k);
        all.into_iter().map(|(d, i)| (i, d.sqrt())).collect()
    }

    #[test]
    fn query_on_target_point() {
        let t = vec![Vec3::new(1.0, 2.0, 3.0), Vec3::zeros()];
        let r = nearest_neighbors(&[Vec3::zeros()], &t, 1).unwrap();
        assert_eq!(r[0][0].index, 1);
        assert_eq!(r[0][0].distance, 0.0);
    }

    #[test]
    fn collinear_targets() {
        let t: Vec<Vec3> = (0..3).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let r = nearest_neighbors(&[Vec3::new(0.6, 0.0, 0.0)], &t, 2).unwrap();
        let idx: Vec<usize> = r[0].iter().map(|n| n.index).collect();
        assert_eq!(idx, vec![1, 0]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let t = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let r = nearest_neighbors(&[Vec3::zeros()], &t, 3).unwrap();
        let idx: Vec<usize> = r[0].iter().map(|n| n.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    #[test]
    fn empty_target_and_bad_count() {
        assert!(nearest_neighbors(&[Vec3::zeros()], &[], 1).is_err());
        assert!(nearest_neighbors(&[Vec3::zeros()], &[Vec3::zeros()], 2).is_err());
    }

    #[test]
    fn random_500_k5_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t: Vec<Vec3> = (0..500)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let q: Vec<Vec3> = (0..100)
            .map(|_| Vec3::new(rng.random::<f64>() * 1.4 - 0.2, rng.random(), rng.random()))
            .collect();
        let got = nearest_neighbors(&q, &t, 5).unwrap();
        for (qi, nn) in q.iter().zip(&got) {
            let want = brute(qi, &t, 5);
            let got: Vec<(usize, f64)> = nn.iter().map(|n| (n.index, n.distance)).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn radius_query_matches_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t: Vec<Vec3> = (0..400)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let grid = HashGrid::with_cell_size(&t, 0.07);
        for q in t.iter().take(20) {
            let got: Vec<usize> = grid.within_radius(q, 0.2).iter().map(|n| n.index).collect();
            let mut want: Vec<(f64, usize)> = t
                .iter()
                .enumerate()
                .filter(|(_, p)| (*p - q).norm_squared() <= 0.04)
                .map(|(i, p)| ((p - q).norm_squared(), i))
                .collect();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(got, want.into_iter().map(|w| w.1).collect::<Vec<_>>());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn knn_equals_brute_force(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.0f64..1.0), 1..2000),
            qs in prop::collection::vec((-6.0f64..6.0, -6.0f64..6.0, -2.0f64..2.0), 1..10),
            k in 1usize..8,
        ) {
            let t: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
            let k = k.min(t.len());
            for &(x, y, z) in &qs {
                let q = Vec3::new(x, y, z);
                let got: Vec<(usize, f64)> = nearest_neighbors(&[q], &t, k).unwrap()[0]
                    .iter().map(|n| (n.index, n.distance)).collect();
                prop_assert_eq!(got, brute(&q, &t, k));
            }
        }
    }
}
