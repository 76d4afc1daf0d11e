use crate::geometry::{HashGrid, TetMesh, Vec3};

/// Piecewise-linear interpolation of per-vertex fields inside a tet mesh.
///
/// A query is evaluated in whichever of its nearest tets (by centroid) it lies
/// deepest inside, widening the candidate set until one contains it; points
/// outside the mesh use clamped barycentric weights of the best tet.
#[derive(Debug, Clone)]
pub struct TetInterpolator {
    tets: Vec<[usize; 4]>,
    origins: Vec<Vec3>,
    grads: Vec<[Vec3; 3]>,
    centroids: Vec<Vec3>,
}

const CANDIDATES: usize = 16;
const MAX_CANDIDATES: usize = 256;
const INSIDE_TOL: f64 = 1e-12;

impl TetInterpolator {
    pub fn new(mesh: &TetMesh) -> Self {
        let mut origins = Vec::with_capacity(mesh.tets.len());
        let mut grads = Vec::with_capacity(mesh.tets.len());
        let mut centroids = Vec::with_capacity(mesh.tets.len());
        for tet in &mesh.tets {
            let p = tet.map(|v| mesh.vertices[v]);
            let (_, g) = super::shape_gradients(&p).expect("mesh tets have positive volume");
            origins.push(p[0]);
            grads.push([g[1], g[2], g[3]]);
            centroids.push((p[0] + p[1] + p[2] + p[3]) / 4.0);
        }
        Self {
            tets: mesh.tets.clone(),
            origins,
            grads,
            centroids,
        }
    }

    fn barycentric(&self, t: usize, q: &Vec3) -> [f64; 4] {
        let d = q - self.origins[t];
        let [g1, g2, g3] = &self.grads[t];
        let (l1, l2, l3) = (g1.dot(&d), g2.dot(&d), g3.dot(&d));
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }

    /// Vertex indices and non-negative weights summing to one.
    pub fn weights(&self, grid: &HashGrid, q: &Vec3) -> ([usize; 4], [f64; 4]) {
        let mut best: Option<(f64, usize, [f64; 4])> = None;
        let mut k = CANDIDATES;
        loop {
            for n in grid.knn(q, k) {
                let l = self.barycentric(n.index, q);
                let depth = l.iter().cloned().fold(f64::INFINITY, f64::min);
                if best.is_none_or(|(b, t, _)| depth > b || (depth == b && n.index < t)) {
                    best = Some((depth, n.index, l));
                }
            }
            // skinny tets can hide the containing one behind closer centroids
            if best.is_some_and(|(b, _, _)| b >= -INSIDE_TOL) || k >= MAX_CANDIDATES.min(self.tets.len()) {
                break;
            }
            k *= 4;
        }
        let (_, t, l) = best.expect("mesh has at least one tet");
        let mut w = l.map(|v| v.max(0.0));
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter_mut().for_each(|v| *v /= s);
        } else {
            w = [0.25; 4];
        }
        (self.tets[t], w)
    }

    /// Interpolates a per-vertex vector field at every query point.
    pub fn interpolate(&self, field: &[Vec3], queries: &[Vec3]) -> Vec<Vec3> {
        let grid = HashGrid::new(&self.centroids);
        queries
            .iter()
            .map(|q| {
                let (v, w) = self.weights(&grid, q);
                (0..4).map(|a| field[v[a]] * w[a]).sum()
            })
            .collect()
    }
}
