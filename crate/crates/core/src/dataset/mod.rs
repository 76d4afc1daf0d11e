//! Patient-specific synthetic sample factory: deformation, crop, rigid
//! perturbation and shuffling with exact ground-truth bookkeeping.

mod config;
mod io;

pub use config::{DeformationKind, DeformationMode, GenerationParams, LobeLabels, PatientConfig, RigidParams};
pub use io::{read_sample, write_sample, SCHEMA_VERSION};
pub(crate) use io::{read_json, write_json};

use crate::arap::{arap_solve, gen_compression, gen_lobe, DeformationConstraints};
use crate::crop::{sample_camera, visible_crop, CameraPose, Crop};
use crate::error::{Error, Result};
use crate::geometry::{
    compute_vertex_normals, load_mesh, load_tet_mesh, random_rigid, Normalization, PointCloud, RigidTransform,
    TetMesh, TriMesh, Vec3,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// A patient loaded and normalized to a unit bounding-box diagonal.
#[derive(Debug, Clone)]
pub struct Patient {
    pub surface: TriMesh,
    pub rest_normals: Vec<Vec3>,
    pub volume: TetMesh,
    pub lobe: Vec<usize>,
    pub normalization: Normalization,
    pub params: GenerationParams,
}

impl Patient {
    pub fn load(config: &PatientConfig) -> Result<Self> {
        let surface = load_mesh(&config.surface_mesh)?;
        let volume = load_tet_mesh(&config.tet_mesh)?;
        let lobe = config.load_lobe_labels()?;
        Self::from_parts(surface, volume, lobe, config.generation.clone())
    }

    /// Normalizes both meshes with the surface's centroid and diagonal.
    pub fn from_parts(
        mut surface: TriMesh,
        mut volume: TetMesh,
        mut lobe: Vec<usize>,
        params: GenerationParams,
    ) -> Result<Self> {
        params.validate()?;
        let normalization = Normalization::fit(&surface.vertices)?;
        normalization.apply_all(&mut surface.vertices);
        normalization.apply_all(&mut volume.vertices);
        lobe.sort_unstable();
        lobe.dedup();
        if let Some(&bad) = lobe.iter().find(|&&v| v >= surface.vertices.len()) {
            return Err(Error::Config(format!(
                "lobe label {bad} out of range ({} surface vertices)",
                surface.vertices.len()
            )));
        }
        let rest_normals = compute_vertex_normals(&surface).normals;
        Ok(Self {
            surface,
            rest_normals,
            volume,
            lobe,
            normalization,
            params,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.surface.vertices.len()
    }
}

/// Per-sample bookkeeping stored in `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub schema_version: u32,
    pub seed: u64,
    pub deformation: DeformationKind,
    /// Vertex indices refer to the patient surface, not the shuffled cloud.
    pub constraints: DeformationConstraints,
    /// Maps the deformed (partial) frame onto the complete cloud's frame.
    pub rigid: RigidTransform,
    pub camera: CameraPose,
    /// `complete[k]` is patient vertex `permutation_x[k]`.
    pub permutation_x: Vec<usize>,
    /// `partial[j]` is retained point `permutation_y[j]` (retained points in ascending vertex order).
    pub permutation_y: Vec<usize>,
    /// Fewer front-facing points than the crop target.
    pub undersized: bool,
    pub normalization: Normalization,
    pub config: GenerationParams,
}

/// One complete/partial training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    /// Rest surface after the rigid perturbation, shuffled.
    pub complete: PointCloud,
    /// Deformed, cropped (and optionally noisy) surface, shuffled.
    pub partial: PointCloud,
    /// `(i, j)` pairs, one per partial point in ascending `j`.
    pub gt_matches: Vec<[usize; 2]>,
    pub gt_overlap_x: Vec<bool>,
    pub gt_overlap_y: Vec<bool>,
    /// Deformed position of each complete point, in the partial cloud's frame.
    pub gt_deformed: Vec<Vec3>,
    pub meta: SampleMeta,
}

impl DatasetSample {
    /// Checks the bijection and label invariants.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.complete.len(), self.partial.len());
        let bad = |msg: String| Err(Error::Schema(msg));
        if self.gt_matches.len() != n {
            return bad(format!("{} matches for {n} partial points", self.gt_matches.len()));
        }
        if self.gt_deformed.len() != m || self.gt_overlap_x.len() != m || self.gt_overlap_y.len() != n {
            return bad("per-point arrays disagree with cloud sizes".into());
        }
        let mut seen_x = vec![false; m];
        for (k, &[i, j]) in self.gt_matches.iter().enumerate() {
            if j != k {
                return bad(format!("match {k} has partial index {j}"));
            }
            if i >= m || std::mem::replace(&mut seen_x[i], true) {
                return bad(format!("complete index {i} invalid or matched twice"));
            }
        }
        let (lx, ly) = gt_overlap_labels(self);
        if lx != self.gt_overlap_x || ly != self.gt_overlap_y {
            return bad("overlap labels disagree with matches".into());
        }
        for (name, perm, len) in [("x", &self.meta.permutation_x, m), ("y", &self.meta.permutation_y, n)] {
            let mut hit = vec![false; len];
            if perm.len() != len || perm.iter().any(|&p| p >= len || std::mem::replace(&mut hit[p], true)) {
                return bad(format!("permutation_{name} is not a permutation of 0..{len}"));
            }
        }
        Ok(())
    }

    /// Complete-cloud indices outside the visible overlap.
    pub fn hidden_indices(&self) -> Vec<usize> {
        (0..self.complete.len()).filter(|&i| !self.gt_overlap_x[i]).collect()
    }
}

/// Overlap labels implied by the ground-truth matches: every partial point is
/// labelled, and a complete point is labelled iff it is matched.
pub fn gt_overlap_labels(sample: &DatasetSample) -> (Vec<bool>, Vec<bool>) {
    let mut x = vec![false; sample.complete.len()];
    for &[i, _] in &sample.gt_matches {
        x[i] = true;
    }
    (x, vec![true; sample.partial.len()])
}

fn crop_with_retries(
    rng: &mut ChaCha8Rng,
    deformed: &PointCloud,
    params: &GenerationParams,
) -> Result<(CameraPose, Crop)> {
    let mut last = None;
    for _ in 0..params.camera_retries {
        let camera = sample_camera(rng, deformed, &params.crop);
        match visible_crop(deformed, &camera, &params.crop) {
            Ok(crop) => return Ok((camera, crop)),
            Err(Error::Crop(m)) => last = Some(m),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Crop(format!(
        "{} after {} camera samples",
        last.unwrap_or_default(),
        params.camera_retries
    )))
}

/// Generates the sample for `seed`; a pure function of the patient and seed.
pub fn generate_sample(patient: &Patient, seed: u64) -> Result<DatasetSample> {
    let params = &patient.params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = match params.deformation {
        DeformationMode::Compression => DeformationKind::Compression,
        DeformationMode::Lobe => DeformationKind::Lobe,
        DeformationMode::Mixed if rng.random::<bool>() => DeformationKind::Compression,
        DeformationMode::Mixed => DeformationKind::Lobe,
    };
    let constraints = match kind {
        DeformationKind::Compression => gen_compression(&patient.surface, &mut rng, &params.compression),
        DeformationKind::Lobe => gen_lobe(&patient.surface, &patient.lobe, &mut rng, &params.lobe)?,
    };
    let deformed_mesh = TriMesh {
        vertices: arap_solve(&patient.surface, &constraints, &params.arap)?.positions,
        faces: patient.surface.faces.clone(),
    };
    let deformed_normals = compute_vertex_normals(&deformed_mesh).normals;
    let deformed = PointCloud {
        points: deformed_mesh.vertices,
        normals: Some(deformed_normals),
    };
    let (camera, crop) = crop_with_retries(&mut rng, &deformed, params)?;

    let mut partial_raw = deformed.select(&crop.retained);
    if params.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
        for p in &mut partial_raw.points {
            *p += Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }

    let rigid = random_rigid(&mut rng, params.rigid.max_angle, params.rigid.max_translation);
    let m = patient.vertex_count();
    let n = crop.retained.len();
    let mut permutation_x: Vec<usize> = (0..m).collect();
    permutation_x.shuffle(&mut rng);
    let mut permutation_y: Vec<usize> = (0..n).collect();
    permutation_y.shuffle(&mut rng);

    let complete = PointCloud {
        points: permutation_x.iter().map(|&v| rigid.apply_point(&patient.surface.vertices[v])).collect(),
        normals: Some(permutation_x.iter().map(|&v| rigid.apply_vector(&patient.rest_normals[v])).collect()),
    };
    let partial = partial_raw.select(&permutation_y);
    let gt_deformed = permutation_x.iter().map(|&v| deformed.points[v]).collect();

    let mut x_of_vertex = vec![0; m];
    for (k, &v) in permutation_x.iter().enumerate() {
        x_of_vertex[v] = k;
    }
    let gt_matches: Vec<[usize; 2]> = permutation_y
        .iter()
        .enumerate()
        .map(|(j, &r)| [x_of_vertex[crop.retained[r]], j])
        .collect();

    let mut sample = DatasetSample {
        complete,
        partial,
        gt_matches,
        gt_overlap_x: Vec::new(),
        gt_overlap_y: Vec::new(),
        gt_deformed,
        meta: SampleMeta {
            schema_version: SCHEMA_VERSION,
            seed,
            deformation: kind,
            constraints,
            rigid,
            camera,
            permutation_x,
            permutation_y,
            undersized: crop.undersized,
            normalization: patient.normalization,
            config: params.clone(),
        },
    };
    (sample.gt_overlap_x, sample.gt_overlap_y) = gt_overlap_labels(&sample);
    Ok(sample)
}

#[cfg(test)]
mod tests;
