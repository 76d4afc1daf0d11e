use super::laplacian::{cotangent_weights, WeightScheme};
use crate::error::{Error, Result};
use crate::geometry::transform::rotation_from_covariance;
use crate::geometry::{best_fit_rigid, TriMesh, Vec3};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// Prescribed vertices: handles move to targets, anchors stay at rest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DeformationConstraints {
    pub handle_indices: Vec<usize>,
    pub handle_targets: Vec<[f64; 3]>,
    pub anchor_indices: Vec<usize>,
}

impl DeformationConstraints {
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        let n = mesh.vertices.len();
        if self.handle_indices.len() != self.handle_targets.len() {
            return Err(Error::InvalidInput(format!(
                "{} handles but {} targets",
                self.handle_indices.len(),
                self.handle_targets.len()
            )));
        }
        let mut seen = vec![false; n];
        for &v in self.handle_indices.iter().chain(&self.anchor_indices) {
            if v >= n {
                return Err(Error::InvalidInput(format!("constraint vertex {v} out of range ({n})")));
            }
            if seen[v] {
                return Err(Error::InvalidInput(format!("vertex {v} constrained twice")));
            }
            seen[v] = true;
        }
        if self.handle_targets.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("handle target is not finite".into()));
        }
        let pts: Vec<Vec3> = self
            .handle_indices
            .iter()
            .chain(&self.anchor_indices)
            .map(|&v| mesh.vertices[v])
            .collect();
        if !spans_plane(&pts) {
            return Err(Error::InvalidInput(
                "need at least 3 non-collinear constrained vertices".into(),
            ));
        }
        Ok(())
    }

    /// `(vertex, prescribed position)` for every constrained vertex.
    pub fn prescribed(&self, rest: &[Vec3]) -> Vec<(usize, Vec3)> {
        self.handle_indices
            .iter()
            .zip(&self.handle_targets)
            .map(|(&v, t)| (v, Vec3::from(*t)))
            .chain(self.anchor_indices.iter().map(|&v| (v, rest[v])))
            .collect()
    }
}

fn spans_plane(pts: &[Vec3]) -> bool {
    if pts.len() < 3 {
        return false;
    }
    let c = crate::geometry::centroid(pts);
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - c;
        cov += d * d.transpose();
    }
    let mut ev: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev[0] > 0.0 && ev[1] > 1e-12 * ev[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArapConfig {
    pub max_iterations: usize,
    pub energy_tolerance: f64,
    pub weight_scheme: WeightScheme,
}

impl Default for ArapConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            energy_tolerance: 1e-6,
            weight_scheme: WeightScheme::Cotangent,
        }
    }
}

impl ArapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("ARAP max_iterations must be at least 1".into()));
        }
        if !(self.energy_tolerance > 0.0) {
            return Err(Error::Config("ARAP energy_tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ArapResult {
    pub positions: Vec<Vec3>,
    /// Energy after the initial solve and after each local-global iteration.
    pub energies: Vec<f64>,
    pub iterations: usize,
}

/// Reduced global system for one mesh and constraint pattern; the sparse
/// Cholesky factor is reused across iterations.
pub struct ArapSolver {
    rest: Vec<Vec3>,
    // neighbor lists with weights, CSR style
    adj_ptr: Vec<usize>,
    adj: Vec<(usize, f64)>,
    free_of: Vec<Option<usize>>,
    free: Vec<usize>,
    factor: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl std::fmt::Debug for ArapSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArapSolver")
            .field("vertices", &self.rest.len())
            .field("free", &self.free.len())
            .finish()
    }
}

impl ArapSolver {
    pub fn new(mesh: &TriMesh, constrained: &[usize], scheme: WeightScheme) -> Result<Self> {
        let n = mesh.vertices.len();
        let weights = cotangent_weights(mesh, scheme);
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &w) in &weights {
            lists[i].push((j, w));
            lists[j].push((i, w));
        }
        let mut adj_ptr = Vec::with_capacity(n + 1);
        adj_ptr.push(0);
        let mut adj = Vec::with_capacity(weights.len() * 2);
        for l in lists {
            adj.extend(l);
            adj_ptr.push(adj.len());
        }

        let mut is_constrained = vec![false; n];
        for &v in constrained {
            is_constrained[v] = true;
        }
        check_components(n, &adj_ptr, &adj, &is_constrained)?;

        let mut free_of = vec![None; n];
        let mut free = Vec::new();
        for v in 0..n {
            if !is_constrained[v] {
                free_of[v] = Some(free.len());
                free.push(v);
            }
        }
        let mut trips = Vec::new();
        for (fi, &v) in free.iter().enumerate() {
            let mut diag = 0.0;
            for &(u, w) in &adj[adj_ptr[v]..adj_ptr[v + 1]] {
                diag += w;
                if let Some(fu) = free_of[u] {
                    if w != 0.0 {
                        trips.push(Triplet::new(fi, fu, -w));
                    }
                }
            }
            trips.push(Triplet::new(fi, fi, diag));
        }
        let nf = free.len();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(nf, nf, &trips)
            .map_err(|e| Error::Singular(format!("could not build reduced Laplacian: {e:?}")))?;
        let factor = mat.sp_cholesky(faer::Side::Lower).map_err(|e| {
            Error::Singular(format!(
                "reduced Laplacian is not positive definite ({e:?}); free vertices are under-constrained"
            ))
        })?;
        Ok(Self {
            rest: mesh.vertices.clone(),
            adj_ptr,
            adj,
            free_of,
            free,
            factor,
        })
    }

    fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[self.adj_ptr[v]..self.adj_ptr[v + 1]]
    }

    fn local_step(&self, current: &[Vec3], rotations: &mut [Matrix3<f64>]) {
        for (i, r) in rotations.iter_mut().enumerate() {
            let mut cov = Matrix3::zeros();
            for &(j, w) in self.neighbors(i) {
                if w == 0.0 {
                    continue;
                }
                let e = self.rest[i] - self.rest[j];
                let e2 = current[i] - current[j];
                cov += (e * w) * e2.transpose();
            }
            *r = rotation_from_covariance(&cov);
        }
    }

    fn global_step(&self, rotations: &[Matrix3<f64>], positions: &mut [Vec3]) {
        let nf = self.free.len();
        let mut rhs = Mat::<f64>::zeros(nf, 3);
        for (fi, &i) in self.free.iter().enumerate() {
            let mut b = Vec3::zeros();
            for &(j, w) in self.neighbors(i) {
                if w == 0.0 {
                    continue;
                }
                b += (rotations[i] + rotations[j]) * (self.rest[i] - self.rest[j]) * (0.5 * w);
                if self.free_of[j].is_none() {
                    b += positions[j] * w;
                }
            }
            for c in 0..3 {
                rhs[(fi, c)] = b[c];
            }
        }
        let x = self.factor.solve(&rhs);
        for (fi, &i) in self.free.iter().enumerate() {
            positions[i] = Vec3::new(x[(fi, 0)], x[(fi, 1)], x[(fi, 2)]);
        }
    }

    fn energy(&self, current: &[Vec3], rotations: &[Matrix3<f64>]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.rest.len() {
            for &(j, w) in self.neighbors(i) {
                let d = (current[i] - current[j]) - rotations[i] * (self.rest[i] - self.rest[j]);
                e += w * d.norm_squared();
            }
        }
        e
    }

    /// Runs local-global iterations with the constrained vertices at `prescribed`.
    pub fn solve(&self, prescribed: &[(usize, Vec3)], config: &ArapConfig) -> Result<ArapResult> {
        config.validate()?;
        let n = self.rest.len();
        let mut positions = self.rest.clone();
        for &(v, p) in prescribed {
            if self.free_of[v].is_some() {
                return Err(Error::InvalidInput(format!("vertex {v} is free in this solver")));
            }
            positions[v] = p;
        }
        // start from the best rigid fit of the constraints so rigid targets are reproduced exactly
        let src: Vec<Vec3> = prescribed.iter().map(|&(v, _)| self.rest[v]).collect();
        let dst: Vec<Vec3> = prescribed.iter().map(|&(_, p)| p).collect();
        let r0 = best_fit_rigid(&src, &dst)?.rotation;
        let mut rotations = vec![r0; n];
        self.global_step(&rotations, &mut positions);
        self.local_step(&positions, &mut rotations);
        let mut energies = vec![self.energy(&positions, &rotations)];
        let mut iterations = 0;
        while iterations < config.max_iterations {
            self.global_step(&rotations, &mut positions);
            self.local_step(&positions, &mut rotations);
            iterations += 1;
            let e = self.energy(&positions, &rotations);
            let prev = *energies.last().unwrap();
            energies.push(e);
            if prev - e <= config.energy_tolerance * prev {
                break;
            }
        }
        Ok(ArapResult {
            positions,
            energies,
            iterations,
        })
    }
}

fn check_components(n: usize, adj_ptr: &[usize], adj: &[(usize, f64)], constrained: &[bool]) -> Result<()> {
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = start;
        stack.push(start);
        let mut has_constraint = false;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            has_constraint |= constrained[v];
            for &(u, _) in &adj[adj_ptr[v]..adj_ptr[v + 1]] {
                if comp[u] == usize::MAX {
                    comp[u] = start;
                    stack.push(u);
                }
            }
        }
        if !has_constraint {
            return Err(Error::Singular(format!(
                "under-constrained: connected component containing vertex {start} ({size} vertices) has no handle or anchor"
            )));
        }
    }
    Ok(())
}

/// Deforms `mesh` so constrained vertices reach their targets while the
/// surface stays locally as rigid as possible.
pub fn arap_solve(mesh: &TriMesh, constraints: &DeformationConstraints, config: &ArapConfig) -> Result<ArapResult> {
    constraints.validate(mesh)?;
    let constrained: Vec<usize> = constraints
        .handle_indices
        .iter()
        .chain(&constraints.anchor_indices)
        .copied()
        .collect();
    let solver = ArapSolver::new(mesh, &constrained, config.weight_scheme)?;
    solver.solve(&constraints.prescribed(&mesh.vertices), config)
}

/// ARAP energy of `deformed` with per-vertex rotations refit optimally.
pub fn arap_energy(mesh: &TriMesh, deformed: &[Vec3], scheme: WeightScheme) -> f64 {
    let weights = cotangent_weights(mesh, scheme);
    let n = mesh.vertices.len();
    let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &w) in &weights {
        lists[i].push((j, w));
        lists[j].push((i, w));
    }
    let mut e = 0.0;
    for i in 0..n {
        let mut cov = Matrix3::zeros();
        for &(j, w) in &lists[i] {
            cov += ((mesh.vertices[i] - mesh.vertices[j]) * w) * (deformed[i] - deformed[j]).transpose();
        }
        let r = rotation_from_covariance(&cov);
        for &(j, w) in &lists[i] {
            e += w * ((deformed[i] - deformed[j]) - r * (mesh.vertices[i] - mesh.vertices[j])).norm_squared();
        }
    }
    e
}
