use crate::geometry::TriMesh;
use crate::sparse::CsrMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    #[default]
    Cotangent,
    Uniform,
}

/// Symmetric edge weights keyed by `(i, j)` with `i < j`.
///
/// Cotangent weights are `½ Σ cot` of the angles opposite the edge, clamped at zero.
pub fn cotangent_weights(mesh: &TriMesh, scheme: WeightScheme) -> BTreeMap<(usize, usize), f64> {
    let mut w: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let i = f[k];
            let j = f[(k + 1) % 3];
            let o = f[(k + 2) % 3];
            let key = (i.min(j), i.max(j));
            let add = match scheme {
                WeightScheme::Uniform => 0.0,
                WeightScheme::Cotangent => {
                    let a = mesh.vertices[i] - mesh.vertices[o];
                    let b = mesh.vertices[j] - mesh.vertices[o];
                    let cross = a.cross(&b).norm();
                    if cross > 0.0 {
                        0.5 * a.dot(&b) / cross
                    } else {
                        0.0
                    }
                }
            };
            *w.entry(key).or_insert(0.0) += add;
        }
    }
    for v in w.values_mut() {
        *v = match scheme {
            WeightScheme::Uniform => 1.0,
            WeightScheme::Cotangent => v.max(0.0),
        };
    }
    w
}

/// Graph Laplacian `L` with `L_ij = -w_ij`, `L_ii = Σ_j w_ij`.
pub fn build_laplacian(mesh: &TriMesh, scheme: WeightScheme) -> CsrMatrix {
    let weights = cotangent_weights(mesh, scheme);
    let n = mesh.vertices.len();
    let mut diag = vec![0.0; n];
    let mut t = Vec::with_capacity(weights.len() * 2 + n);
    for (&(i, j), &w) in &weights {
        t.push((i, j, -w));
        t.push((j, i, -w));
        diag[i] += w;
        diag[j] += w;
    }
    t.extend(diag.into_iter().enumerate().map(|(i, d)| (i, i, d)));
    CsrMatrix::from_triplets(n, n, t).expect("indices validated by mesh")
}
