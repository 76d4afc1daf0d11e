use crate::error::{Error, Result};
use crate::geometry::{TetMesh, Vec3};
use crate::sparse::CsrMatrix;
use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

/// Isotropic linear-elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    /// Pascal.
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            young_modulus: 1500.0,
            poisson_ratio: 0.45,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(Error::Config(format!("Young's modulus {} must be positive", self.young_modulus)));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::Config(format!("Poisson ratio {} not in (-1, 0.5)", self.poisson_ratio)));
        }
        Ok(())
    }

    /// Lamé parameters `(lambda, mu)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young_modulus, self.poisson_ratio);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }
}

pub type ElementMatrix = SMatrix<f64, 12, 12>;

/// Volume and shape-function gradients of a linear tetrahedron.
pub fn shape_gradients(p: &[Vec3; 4]) -> Option<(f64, [Vec3; 4])> {
    let j = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
    let volume = j.determinant() / 6.0;
    if !(volume > 0.0) {
        return None;
    }
    let inv = j.try_inverse()?;
    let g1: Vec3 = inv.row(0).transpose();
    let g2: Vec3 = inv.row(1).transpose();
    let g3: Vec3 = inv.row(2).transpose();
    Some((volume, [-(g1 + g2 + g3), g1, g2, g3]))
}

/// Constant-strain tetrahedron stiffness: node block
/// `K_ab = V (mu (g_a . g_b) I + mu g_b g_aᵀ + lambda g_a g_bᵀ)`.
pub fn element_stiffness(p: &[Vec3; 4], material: &MaterialParams) -> Result<ElementMatrix> {
    material.validate()?;
    let (volume, g) = shape_gradients(p).ok_or_else(|| Error::Element {
        index: 0,
        message: "non-positive volume".into(),
    })?;
    let (lambda, mu) = material.lame();
    let mut k = ElementMatrix::zeros();
    for a in 0..4 {
        for b in a..4 {
            let dot = g[a].dot(&g[b]);
            for i in 0..3 {
                for j in 0..3 {
                    let iso = if i == j { mu * dot } else { 0.0 };
                    let v = volume * (iso + mu * g[b][i] * g[a][j] + lambda * g[a][i] * g[b][j]);
                    k[(3 * a + i, 3 * b + j)] = v;
                    // mirrored so the matrix is symmetric to the bit
                    k[(3 * b + j, 3 * a + i)] = v;
                }
            }
        }
    }
    Ok(k)
}

/// Global `3n x 3n` stiffness with vertex-major dof order `(x0, y0, z0, x1, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix {
    pub matrix: CsrMatrix,
    pub tet_count: usize,
    pub material: MaterialParams,
}

/// Scatter-adds every element matrix. Contributions to each entry are summed
/// in value order so the result does not depend on tet order.
pub fn assemble_stiffness(mesh: &TetMesh, material: &MaterialParams) -> Result<StiffnessMatrix> {
    assemble_at(mesh, &mesh.vertices, material)
}

/// Assembly with the mesh connectivity at alternative vertex positions.
pub fn assemble_at(mesh: &TetMesh, positions: &[Vec3], material: &MaterialParams) -> Result<StiffnessMatrix> {
    material.validate()?;
    let n = positions.len();
    let mut bad = Vec::new();
    let mut triplets = Vec::with_capacity(mesh.tets.len() * 144);
    for (t, tet) in mesh.tets.iter().enumerate() {
        let p = tet.map(|v| positions[v]);
        let ke = match element_stiffness(&p, material) {
            Ok(k) => k,
            Err(_) => {
                bad.push(t);
                continue;
            }
        };
        for a in 0..4 {
            for b in 0..4 {
                for i in 0..3 {
                    for j in 0..3 {
                        triplets.push((3 * tet[a] + i, 3 * tet[b] + j, ke[(3 * a + i, 3 * b + j)]));
                    }
                }
            }
        }
    }
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(10).map(|t| t.to_string()).collect();
        return Err(Error::Element {
            index: bad[0],
            message: format!(
                "{} tetrahedra with non-positive volume (first: {})",
                bad.len(),
                shown.join(", ")
            ),
        });
    }
    triplets.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
    Ok(StiffnessMatrix {
        matrix: CsrMatrix::from_triplets(3 * n, 3 * n, triplets)?,
        tet_count: mesh.tets.len(),
        material: *material,
    })
}
