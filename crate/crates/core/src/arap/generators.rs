use super::DeformationConstraints;
use crate::error::{Error, Result};
use crate::geometry::{compute_vertex_normals, TriMesh, Vec3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Insufflation-style compression: a handle patch pushed inward along normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompressionParams {
    pub max_magnitude: f64,
    pub handle_fraction: f64,
    pub anchor_fraction: f64,
}

impl Default for CompressionParams {
    fn default() -> Self {
        Self {
            max_magnitude: 0.1,
            handle_fraction: 0.1,
            anchor_fraction: 0.1,
        }
    }
}

/// Random displacements of control patches inside the lobe region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LobeParams {
    pub max_magnitude: f64,
    pub control_points: usize,
    /// Fraction of all vertices moved rigidly with each control point.
    pub patch_fraction: f64,
    pub anchor_fraction: f64,
}

impl Default for LobeParams {
    fn default() -> Self {
        Self {
            max_magnitude: 0.25,
            control_points: 3,
            patch_fraction: 0.01,
            anchor_fraction: 0.1,
        }
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Front(f64, usize);

impl Eq for Front {}

impl Ord for Front {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (distance, index)
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Front {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Vertices in order of edge-path distance from `seed`, stopping after `count`
/// (or exhausting the component). Returns `(vertex, distance)` pairs.
pub fn geodesic_ball(mesh: &TriMesh, adjacency: &[Vec<usize>], seed: usize, count: usize) -> Vec<(usize, f64)> {
    let n = mesh.vertices.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut out = Vec::with_capacity(count.min(n));
    dist[seed] = 0.0;
    heap.push(Front(0.0, seed));
    while let Some(Front(d, v)) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        out.push((v, d));
        if out.len() >= count {
            break;
        }
        for &u in &adjacency[v] {
            let nd = d + (mesh.vertices[u] - mesh.vertices[v]).norm();
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Front(nd, u));
            }
        }
    }
    out
}

fn fraction_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).ceil() as usize).clamp(1, n)
}

/// Anchor patch around the vertex geodesically farthest from `from`, skipping `taken`.
fn far_anchor(mesh: &TriMesh, adj: &[Vec<usize>], from: usize, fraction: f64, taken: &[bool]) -> Vec<usize> {
    let n = mesh.vertices.len();
    let all = geodesic_ball(mesh, adj, from, n);
    let far = all
        .iter()
        .filter(|(v, _)| !taken[*v])
        .fold(None::<(usize, f64)>, |best, &(v, d)| match best {
            Some((bv, bd)) if bd > d || (bd == d && bv < v) => Some((bv, bd)),
            _ => Some((v, d)),
        })
        .map(|(v, _)| v)
        .unwrap_or(from);
    let want = fraction_count(n, fraction);
    let mut anchors: Vec<usize> = geodesic_ball(mesh, adj, far, n)
        .into_iter()
        .map(|(v, _)| v)
        .filter(|&v| !taken[v])
        .take(want)
        .collect();
    anchors.sort_unstable();
    anchors
}

/// Compression constraints: handle targets are `rest - m * normal` with
/// `m ~ U[0, max_magnitude]` per handle vertex.
pub fn gen_compression<R: Rng + ?Sized>(
    mesh: &TriMesh,
    rng: &mut R,
    params: &CompressionParams,
) -> DeformationConstraints {
    let n = mesh.vertices.len();
    let adj = mesh.vertex_neighbors();
    let normals = compute_vertex_normals(mesh).normals;
    let seed = rng.random_range(0..n);
    let mut handles: Vec<usize> = geodesic_ball(mesh, &adj, seed, fraction_count(n, params.handle_fraction))
        .into_iter()
        .map(|(v, _)| v)
        .collect();
    handles.sort_unstable();
    let handle_targets = handles
        .iter()
        .map(|&v| {
            let m = rng.random::<f64>() * params.max_magnitude;
            let t = mesh.vertices[v] - normals[v] * m;
            [t.x, t.y, t.z]
        })
        .collect();
    let mut taken = vec![false; n];
    for &h in &handles {
        taken[h] = true;
    }
    let anchor_indices = far_anchor(mesh, &adj, seed, params.anchor_fraction, &taken);
    DeformationConstraints {
        handle_indices: handles,
        handle_targets,
        anchor_indices,
    }
}

/// Lobe constraints: control patches seeded inside `lobe`, each displaced by a
/// uniformly random direction with magnitude `U[0, max_magnitude]`.
pub fn gen_lobe<R: Rng + ?Sized>(
    mesh: &TriMesh,
    lobe: &[usize],
    rng: &mut R,
    params: &LobeParams,
) -> Result<DeformationConstraints> {
    if lobe.is_empty() {
        return Err(Error::Config("lobe region is empty".into()));
    }
    let n = mesh.vertices.len();
    if let Some(&bad) = lobe.iter().find(|&&v| v >= n) {
        return Err(Error::Config(format!("lobe label {bad} out of range ({n} vertices)")));
    }
    let mut in_lobe = vec![false; n];
    for &v in lobe {
        in_lobe[v] = true;
    }
    let adj = mesh.vertex_neighbors();
    let patch = fraction_count(n, params.patch_fraction);
    let mut taken = vec![false; n];
    let mut handle_indices = Vec::new();
    let mut handle_targets = Vec::new();
    let mut first_seed = None;
    for _ in 0..params.control_points.max(1) {
        let seed = lobe[rng.random_range(0..lobe.len())];
        first_seed.get_or_insert(seed);
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).max(0.0).sqrt();
        let dir = Vec3::new(s * phi.cos(), s * phi.sin(), z);
        let shift = dir * (rng.random::<f64>() * params.max_magnitude);
        let mut added = 0;
        for (v, _) in geodesic_ball(mesh, &adj, seed, n) {
            if added == patch {
                break;
            }
            // overlapping patches keep the earlier displacement
            if !in_lobe[v] || taken[v] {
                continue;
            }
            taken[v] = true;
            added += 1;
            let t = mesh.vertices[v] + shift;
            handle_indices.push(v);
            handle_targets.push([t.x, t.y, t.z]);
        }
    }
    let mut blocked = taken.clone();
    for v in 0..n {
        blocked[v] |= in_lobe[v];
    }
    let anchor_indices = far_anchor(mesh, &adj, first_seed.unwrap(), params.anchor_fraction, &blocked);
    Ok(DeformationConstraints {
        handle_indices,
        handle_targets,
        anchor_indices,
    })
}
