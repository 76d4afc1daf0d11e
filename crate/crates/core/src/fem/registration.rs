use super::cg::{conjugate_gradient, CgOptions};
use super::stiffness::{assemble_at, MaterialParams, StiffnessMatrix};
use crate::error::{Error, Result};
use crate::geometry::{nearest_indices, TetMesh, Vec3};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegistrationConfig {
    pub material: MaterialParams,
    /// Data-term stiffness; `None` uses `k_scale` times the mean diagonal of S.
    pub k: Option<f64>,
    pub k_scale: f64,
    pub substeps: usize,
    pub cg: CgOptions,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            material: MaterialParams::default(),
            k: None,
            k_scale: 10.0,
            substeps: 1,
            cg: CgOptions::default(),
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("k = {k} must be positive")));
            }
        }
        if !(self.k_scale > 0.0) {
            return Err(Error::Config("k_scale must be positive".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        if !(self.cg.tolerance > 0.0) {
            return Err(Error::Config("CG tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// A tet-mesh vertex pulled toward a target position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexTarget {
    pub vertex: usize,
    pub target: [f64; 3],
}

/// Couples point matches to the volume mesh: each source point is snapped to its
/// nearest mesh vertex, and a vertex hit several times moves by the mean of the
/// match displacements `target - source`.
pub fn snap_matches(vertices: &[Vec3], sources: &[Vec3], targets: &[Vec3]) -> Result<Vec<VertexTarget>> {
    if sources.len() != targets.len() {
        return Err(Error::InvalidInput("sources and targets differ in length".into()));
    }
    if sources.is_empty() {
        return Err(Error::InvalidInput("fewer than 1 match".into()));
    }
    let nearest = nearest_indices(sources, vertices)?;
    let mut sum = std::collections::BTreeMap::<usize, (Vec3, usize)>::new();
    for ((&v, s), t) in nearest.iter().zip(sources).zip(targets) {
        let e = sum.entry(v).or_insert((Vec3::zeros(), 0));
        e.0 += t - s;
        e.1 += 1;
    }
    Ok(sum
        .into_iter()
        .map(|(v, (d, c))| VertexTarget {
            vertex: v,
            target: (vertices[v] + d / c as f64).into(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStep {
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
    /// Objective at zero displacement and at the solution.
    pub energy_before: f64,
    pub energy_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub material: MaterialParams,
    pub k: f64,
    pub substeps: usize,
    pub matched_vertices: usize,
    pub tet_count: usize,
    pub steps: Vec<SolveStep>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    /// Per-vertex displacement from the rest mesh.
    pub displacement: Vec<Vec3>,
    pub positions: Vec<Vec3>,
    /// Positions after each substep.
    pub trajectory: Vec<Vec<Vec3>>,
    pub report: SolveReport,
}

fn objective(s: &StiffnessMatrix, k: f64, delta: &[f64], residual_at_zero: &[(usize, Vec3)]) -> f64 {
    let mut sd = vec![0.0; delta.len()];
    s.matrix.mul_vec(delta, &mut sd);
    let elastic = 0.5 * delta.iter().zip(&sd).map(|(a, b)| a * b).sum::<f64>();
    let data: f64 = residual_at_zero
        .iter()
        .map(|(v, r)| (r - Vec3::new(delta[3 * v], delta[3 * v + 1], delta[3 * v + 2])).norm_squared())
        .sum();
    elastic + k * data
}

fn spread_warning(mesh_positions: &[Vec3], targets: &[VertexTarget]) -> Option<String> {
    if targets.len() < 3 {
        return Some(format!(
            "only {} matched vertices; rigid modes are weakly constrained",
            targets.len()
        ));
    }
    let pts: Vec<Vec3> = targets.iter().map(|t| mesh_positions[t.vertex]).collect();
    let c = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let cov = pts.iter().fold(Matrix3::zeros(), |m, p| m + (p - c) * (p - c).transpose());
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().cloned().collect();
    eig.sort_by(f64::total_cmp);
    (eig[1] <= 1e-12 * eig[2].max(f64::MIN_POSITIVE))
        .then(|| "matched vertices are collinear; rotation about their line is unconstrained".to_string())
}

/// Minimizes `½ δᵀ S δ + k |T - (X_m + δ_m)|²` by solving
/// `(S + 2k PᵀP) δ = 2k Pᵀ (T - X_m)` with conjugate gradient.
///
/// With `substeps = n > 1` the targets advance in `n` equal increments and each
/// increment is solved with the stiffness reassembled at the current configuration.
pub fn solve_registration(mesh: &TetMesh, targets: &[VertexTarget], config: &RegistrationConfig) -> Result<Registration> {
    config.validate()?;
    if targets.is_empty() {
        return Err(Error::InvalidInput("fewer than 1 match".into()));
    }
    let n = mesh.vertices.len();
    if let Some(t) = targets.iter().find(|t| t.vertex >= n) {
        return Err(Error::InvalidInput(format!("matched vertex {} outside mesh of {n}", t.vertex)));
    }
    let mut report = SolveReport {
        material: config.material,
        k: 0.0,
        substeps: config.substeps,
        matched_vertices: targets.len(),
        tet_count: mesh.tets.len(),
        steps: Vec::new(),
        warnings: spread_warning(&mesh.vertices, targets).into_iter().collect(),
    };
    let mut current = mesh.vertices.clone();
    let mut trajectory = Vec::with_capacity(config.substeps);
    let mut k = config.k;
    for step in 1..=config.substeps {
        let s = assemble_at(mesh, &current, &config.material)?;
        let diag = s.matrix.diagonal();
        let kk = *k.get_or_insert_with(|| config.k_scale * diag.iter().sum::<f64>() / diag.len().max(1) as f64);
        let frac = step as f64 / config.substeps as f64;
        // residual of each matched vertex at zero incremental displacement
        let residual: Vec<(usize, Vec3)> = targets
            .iter()
            .map(|t| {
                let rest = mesh.vertices[t.vertex];
                let goal = rest + (Vec3::from(t.target) - rest) * frac;
                (t.vertex, goal - current[t.vertex])
            })
            .collect();
        let mut selected = vec![false; 3 * n];
        let mut rhs = vec![0.0; 3 * n];
        for (v, r) in &residual {
            for a in 0..3 {
                selected[3 * v + a] = true;
                rhs[3 * v + a] = 2.0 * kk * r[a];
            }
        }
        let mut full_diag = diag;
        for (d, &sel) in full_diag.iter_mut().zip(&selected) {
            if sel {
                *d += 2.0 * kk;
            }
        }
        let apply = |x: &[f64], y: &mut [f64]| {
            s.matrix.mul_vec(x, y);
            for i in 0..x.len() {
                if selected[i] {
                    y[i] += 2.0 * kk * x[i];
                }
            }
        };
        let cg = conjugate_gradient(apply, &rhs, Some(&full_diag), &config.cg)?;
        let energy_before = objective(&s, kk, &vec![0.0; 3 * n], &residual);
        let energy_after = objective(&s, kk, &cg.x, &residual);
        let final_residual = *cg.residuals.last().unwrap();
        report.steps.push(SolveStep {
            iterations: cg.iterations,
            converged: cg.converged,
            residuals: cg.residuals,
            energy_before,
            energy_after,
        });
        if !cg.converged {
            return Err(Error::NotConverged {
                iterations: cg.iterations,
                residual: final_residual,
            });
        }
        for (v, p) in current.iter_mut().enumerate() {
            *p += Vec3::new(cg.x[3 * v], cg.x[3 * v + 1], cg.x[3 * v + 2]);
        }
        trajectory.push(current.clone());
    }
    report.k = k.unwrap_or_default();
    let displacement = current.iter().zip(&mesh.vertices).map(|(c, r)| c - r).collect();
    Ok(Registration {
        displacement,
        positions: current,
        trajectory,
        report,
    })
}
