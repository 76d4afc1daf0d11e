//! Geometric containers and the primitives shared by every other module.

mod io;
mod keypoints;
mod normals;
mod spatial;
pub(crate) mod transform;

pub use io::{load_mesh, load_tet_mesh, read_ply_cloud, write_ply_cloud, write_tet_mesh, PlyEncoding};
pub use keypoints::{voxel_downsample, KeypointSet};
pub use normals::{compute_vertex_normals, estimate_normals, face_normal, VertexNormals};
pub use spatial::{nearest_indices, nearest_neighbors, HashGrid, Neighbor};
pub use transform::{apply_rigid, best_fit_rigid, random_rigid, RigidTransform};

use crate::error::{Error, Result};
use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// A set of 3D points with optional unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            normals: None,
        }
    }

    pub fn with_normals(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<Self> {
        let cloud = Self {
            points,
            normals: Some(normals),
        };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.points.iter().position(|p| !is_finite(p)) {
            return Err(Error::InvalidInput(format!("point {i} is not finite")));
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.points.len() {
                return Err(Error::InvalidInput(format!(
                    "{} normals for {} points",
                    normals.len(),
                    self.points.len()
                )));
            }
            if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-6) {
                return Err(Error::InvalidInput(format!("normal {i} is not unit length")));
            }
        }
        Ok(())
    }

    pub fn centroid(&self) -> Vec3 {
        centroid(&self.points)
    }

    /// Subset in the order given by `indices`.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
        }
    }
}

/// Triangle surface mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Checks indices and degenerate faces, then drops unreferenced vertices.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!(
                    "face {fi} references vertex {bad} but mesh has {} vertices",
                    vertices.len()
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidInput(format!("face {fi} repeats a vertex index")));
            }
        }
        if let Some(i) = vertices.iter().position(|p| !is_finite(p)) {
            return Err(Error::InvalidInput(format!("vertex {i} is not finite")));
        }
        let mut mesh = Self { vertices, faces };
        mesh.prune_unreferenced();
        Ok(mesh)
    }

    fn prune_unreferenced(&mut self) {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        if used.iter().all(|&u| u) {
            return;
        }
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut kept = Vec::with_capacity(self.vertices.len());
        for (i, p) in self.vertices.iter().enumerate() {
            if used[i] {
                remap[i] = kept.len();
                kept.push(*p);
            }
        }
        self.vertices = kept;
        for f in &mut self.faces {
            for v in f.iter_mut() {
                *v = remap[*v];
            }
        }
    }

    pub fn to_cloud(&self) -> PointCloud {
        PointCloud::new(self.vertices.clone())
    }

    /// One-ring adjacency lists, sorted and deduplicated.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }
}

/// Tetrahedral volume mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
}

impl TetMesh {
    /// Validates indices and flips inverted tets so every signed volume is positive.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        for (ti, t) in tets.iter_mut().enumerate() {
            if let Some(&bad) = t.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!(
                    "tet {ti} references vertex {bad} but mesh has {} vertices",
                    vertices.len()
                )));
            }
            let vol = signed_volume(&vertices, t);
            if vol < 0.0 {
                t.swap(2, 3);
            } else if vol == 0.0 || !vol.is_finite() {
                return Err(Error::Element {
                    index: ti,
                    message: "zero volume".into(),
                });
            }
        }
        Ok(Self { vertices, tets })
    }

    pub fn signed_volume(&self, tet: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[tet])
    }
}

pub(crate) fn signed_volume(vertices: &[Vec3], t: &[usize; 4]) -> f64 {
    let a = vertices[t[0]];
    let e1 = vertices[t[1]] - a;
    let e2 = vertices[t[2]] - a;
    let e3 = vertices[t[3]] - a;
    e1.dot(&e2.cross(&e3)) / 6.0
}

pub(crate) fn is_finite(p: &Vec3) -> bool {
    p.iter().all(|c| c.is_finite())
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return Vec3::zeros();
    }
    points.iter().sum::<Vec3>() / points.len() as f64
}

pub fn bbox(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

pub fn bbox_diagonal(points: &[Vec3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (lo, hi) = bbox(points);
    (hi - lo).norm()
}

/// Translation and uniform scale mapping a patient mesh to a unit bounding-box diagonal.
///
/// `scale` is the original-units length of one normalized unit, so normalized
/// distances multiply by it to come back in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Normalization {
    pub center: [f64; 3],
    pub scale: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Self {
            center: [0.0; 3],
            scale: 1.0,
        }
    }

    pub fn fit(points: &[Vec3]) -> Result<Self> {
        let diag = bbox_diagonal(points);
        if !(diag > 0.0) {
            return Err(Error::InvalidInput("mesh has zero extent".into()));
        }
        let c = centroid(points);
        Ok(Self {
            center: [c.x, c.y, c.z],
            scale: diag,
        })
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p - Vec3::from(self.center)) / self.scale
    }

    pub fn to_original_length(&self, d: f64) -> f64 {
        d * self.scale
    }

    pub fn apply_all(&self, points: &mut [Vec3]) {
        for p in points {
            *p = self.apply(p);
        }
    }
}
