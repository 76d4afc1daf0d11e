use super::{HashGrid, PointCloud, TriMesh, Vec3};
use nalgebra::{Matrix3, SymmetricEigen};

/// Per-vertex unit normals plus the number of vertices whose incident
/// faces all had zero area.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexNormals {
    pub normals: Vec<Vec3>,
    pub degenerate: usize,
}

/// Cross product of the face edges: direction is the face normal, length twice the area.
pub fn face_normal(mesh: &TriMesh, face: usize) -> Vec3 {
    let [a, b, c] = mesh.faces[face];
    let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    (pb - pa).cross(&(pc - pa))
}

/// Area-weighted vertex normals.
pub fn compute_vertex_normals(mesh: &TriMesh) -> VertexNormals {
    let mut acc = vec![Vec3::zeros(); mesh.vertices.len()];
    let mut first_face = vec![usize::MAX; mesh.vertices.len()];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let n = face_normal(mesh, fi);
        for &v in f {
            acc[v] += n;
            if first_face[v] == usize::MAX {
                first_face[v] = fi;
            }
        }
    }
    let mut degenerate = 0;
    let normals = acc
        .into_iter()
        .enumerate()
        .map(|(v, n)| {
            let len = n.norm();
            if len > f64::MIN_POSITIVE {
                n / len
            } else {
                degenerate += 1;
                let fallback = if first_face[v] != usize::MAX {
                    face_normal(mesh, first_face[v])
                } else {
                    Vec3::zeros()
                };
                fallback.try_normalize(0.0).unwrap_or_else(Vec3::z)
            }
        })
        .collect();
    VertexNormals {
        normals,
        degenerate,
    }
}

/// PCA normals from the neighborhood within `radius`.
///
/// Orientation follows the cloud's existing normals when present, otherwise
/// points away from the centroid. Points with fewer than three neighbors
/// keep their existing normal (or get the centroid direction).
pub fn estimate_normals(cloud: &PointCloud, radius: f64) -> Vec<Vec3> {
    let grid = HashGrid::with_cell_size(&cloud.points, radius.max(1e-12));
    let center = cloud.centroid();
    cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let reference = match &cloud.normals {
                Some(n) => n[i],
                None => (p - center).try_normalize(0.0).unwrap_or_else(Vec3::z),
            };
            let nbrs = grid.within_radius(p, radius);
            if nbrs.len() < 3 {
                return reference;
            }
            let mean = nbrs.iter().map(|n| cloud.points[n.index]).sum::<Vec3>() / nbrs.len() as f64;
            let mut cov = Matrix3::zeros();
            for n in &nbrs {
                let d = cloud.points[n.index] - mean;
                cov += d * d.transpose();
            }
            let eig = SymmetricEigen::new(cov);
            let (mut imin, mut vmin) = (0, f64::INFINITY);
            for k in 0..3 {
                if eig.eigenvalues[k] < vmin {
                    vmin = eig.eigenvalues[k];
                    imin = k;
                }
            }
            let n: Vec3 = eig.eigenvectors.column(imin).into_owned();
            let n = n.try_normalize(0.0).unwrap_or(reference);
            if n.dot(&reference) < 0.0 {
                -n
            } else {
                n
            }
        })
        .collect()
}
