//! Synthetic liver-like organ meshes for tests, benchmarks and demos.
//!
//! The surface is a geodesic sphere pushed onto a lobed, wedge-shaped
//! ellipsoid; the volume mesh is a Kuhn-subdivided cube grid mapped into the
//! same shape, so both meshes describe one organ at different resolutions.

use crate::geometry::{TetMesh, TriMesh, Vec3};
use std::collections::HashMap;

const ICOSA_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn icosahedron() -> Vec<Vec3> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect()
}

/// Unit geodesic sphere with `10 f² + 2` vertices, outward winding.
pub fn geodesic_sphere(frequency: usize) -> TriMesh {
    assert!(frequency >= 1);
    let f = frequency;
    let base = icosahedron();
    // lattice points are keyed by their sparse integer barycentric weights over
    // icosahedron corners so shared edges dedupe exactly
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for tri in ICOSA_FACES {
        let mut local = HashMap::new();
        for i in 0..=f {
            for j in 0..=f - i {
                let mut key: Vec<(usize, usize)> = [(tri[0], f - i - j), (tri[1], i), (tri[2], j)]
                    .into_iter()
                    .filter(|&(_, w)| w > 0)
                    .collect();
                key.sort_unstable();
                let id = *index.entry(key.clone()).or_insert_with(|| {
                    let p: Vec3 = key.iter().map(|&(v, w)| base[v] * w as f64).sum();
                    vertices.push(p.normalize());
                    vertices.len() - 1
                });
                local.insert((i, j), id);
            }
        }
        for i in 0..f {
            for j in 0..f - i {
                faces.push([local[&(i, j)], local[&(i + 1, j)], local[&(i, j + 1)]]);
                if i + j + 1 < f {
                    faces.push([local[&(i + 1, j)], local[&(i + 1, j + 1)], local[&(i, j + 1)]]);
                }
            }
        }
    }
    TriMesh::new(vertices, faces).expect("geodesic sphere is valid")
}

/// Geodesic sphere with frequency `2^level`.
pub fn icosphere(level: u32) -> TriMesh {
    geodesic_sphere(1 << level)
}

/// Shape parameters of the liver-like phantom.
#[derive(Debug, Clone, Copy)]
pub struct OrganShape {
    pub semi_axes: Vec3,
    pub lobe_axis: Vec3,
    pub lobe_height: f64,
    pub lobe_width: f64,
    /// Relative thinning of the organ along +x.
    pub wedge: f64,
    /// Length of one model unit in millimetres.
    pub millimetres: f64,
}

impl Default for OrganShape {
    fn default() -> Self {
        Self {
            semi_axes: Vec3::new(1.0, 0.65, 0.45),
            lobe_axis: Vec3::new(-0.7, 0.5, 0.3).normalize(),
            lobe_height: 0.25,
            lobe_width: 0.45,
            wedge: 0.45,
            millimetres: 100.0,
        }
    }
}

impl OrganShape {
    fn radius(&self, d: &Vec3) -> f64 {
        let a = self.semi_axes;
        let e = 1.0 / ((d.x / a.x).powi(2) + (d.y / a.y).powi(2) + (d.z / a.z).powi(2)).sqrt();
        let ang = d.dot(&self.lobe_axis).clamp(-1.0, 1.0).acos();
        e * (1.0 + self.lobe_height * (-(ang * ang) / (2.0 * self.lobe_width.powi(2))).exp())
    }

    fn wedge(&self, p: Vec3) -> Vec3 {
        let s = 1.0 - self.wedge * (p.x / self.semi_axes.x).clamp(-1.0, 1.0);
        Vec3::new(p.x, p.y, p.z * s)
    }

    /// Maps a point of the closed unit ball into the organ.
    pub fn map_ball(&self, q: &Vec3) -> Vec3 {
        let rho = q.norm();
        if rho == 0.0 {
            return Vec3::zeros();
        }
        let d = q / rho;
        self.wedge(d * (rho * self.radius(&d))) * self.millimetres
    }

    /// Whether a unit direction lies in the lobe region.
    pub fn in_lobe(&self, d: &Vec3) -> bool {
        d.normalize().dot(&self.lobe_axis) > (1.6 * self.lobe_width).cos()
    }
}

/// A synthetic patient: dense surface, coarse volume mesh and lobe labels.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub surface: TriMesh,
    pub volume: TetMesh,
    pub lobe_labels: Vec<usize>,
}

impl Phantom {
    /// `surface_frequency` 32 gives 10 242 surface vertices, 70 gives 49 002;
    /// `tet_resolution` 13 gives 13 182 tetrahedra.
    pub fn liver(surface_frequency: usize, tet_resolution: usize) -> Self {
        let shape = OrganShape::default();
        let sphere = geodesic_sphere(surface_frequency);
        let lobe_labels = sphere
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, d)| shape.in_lobe(d))
            .map(|(i, _)| i)
            .collect();
        let surface = TriMesh::new(
            sphere.vertices.iter().map(|d| shape.map_ball(d)).collect(),
            sphere.faces,
        )
        .expect("mapped sphere is valid");
        let volume = ball_tets(tet_resolution, |q| shape.map_ball(q));
        Self {
            surface,
            volume,
            lobe_labels,
        }
    }
}

/// Kuhn (6 tets per cube) subdivision of `[-1,1]³` mapped onto the unit ball and then through `map`.
pub fn ball_tets(resolution: usize, map: impl Fn(&Vec3) -> Vec3) -> TetMesh {
    assert!(resolution >= 1);
    let n = resolution;
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                let g = Vec3::new(i as f64, j as f64, k as f64) * (2.0 / n as f64) - Vec3::repeat(1.0);
                let inf = g.amax();
                let ball = if inf == 0.0 { g } else { g.normalize() * inf };
                vertices.push(map(&ball));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut t = [id(i, j, k); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        t[s + 1] = id(c[0], c[1], c[2]);
                    }
                    tets.push(t);
                }
            }
        }
    }
    TetMesh::new(vertices, tets).expect("ball tetrahedralization has positive volumes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_vertex_normals;

    #[test]
    fn geodesic_counts() {
        for f in [1, 2, 5, 8] {
            let m = geodesic_sphere(f);
            assert_eq!(m.vertices.len(), 10 * f * f + 2);
            assert_eq!(m.faces.len(), 20 * f * f);
        }
    }

    #[test]
    fn sphere_winding_is_outward() {
        let m = geodesic_sphere(4);
        for fi in 0..m.faces.len() {
            let n = crate::geometry::face_normal(&m, fi);
            let c = m.faces[fi].iter().map(|&v| m.vertices[v]).sum::<Vec3>();
            assert!(n.dot(&c) > 0.0);
        }
    }

    #[test]
    fn liver_phantom_is_well_formed() {
        let p = Phantom::liver(12, 6);
        assert_eq!(p.surface.vertices.len(), 1442);
        assert_eq!(p.volume.tets.len(), 6 * 216);
        assert!(!p.lobe_labels.is_empty());
        assert!(p.lobe_labels.len() < p.surface.vertices.len() / 3);
        let vn = compute_vertex_normals(&p.surface);
        assert_eq!(vn.degenerate, 0);
        // star-shaped about the origin: normals face away from it
        let outward = p
            .surface
            .vertices
            .iter()
            .zip(&vn.normals)
            .filter(|(v, n)| v.dot(n) > 0.0)
            .count();
        assert_eq!(outward, p.surface.vertices.len());
        let vol: f64 = (0..p.volume.tets.len()).map(|t| p.volume.signed_volume(t)).sum();
        assert!(vol > 0.0);
    }
}
