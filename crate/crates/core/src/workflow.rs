//! Sample-level steps shared by the command-line tool and the acceptance suite:
//! feature extraction and matching, registration of a sample against the
//! patient's volume mesh, and the files each step leaves in a sample directory.

use crate::dataset::{read_json, write_json, DatasetSample, Patient};
use crate::error::{Error, Result};
use crate::fem::{snap_matches, solve_registration, Registration, RegistrationConfig, SolveReport, TetInterpolator};
use crate::geometry::{
    best_fit_rigid, nearest_indices, voxel_downsample, write_ply_cloud, PlyEncoding, PointCloud,
    RigidTransform, TetMesh, Vec3,
};
use crate::matching::{
    compute_fpfh, match_by_nearest_feature, match_features, oracle_features, CorrespondenceSet, FeatureMatrix,
    MatchingConfig, OracleFeatureParams,
};
use crate::metrics::{fre, hausdorff, matching_metrics, tre, MatchMetrics, RegMetrics};
use crate::nn::{network_forward, CloudInput, NetworkWeights};
use crate::tensor::{read_tensors, write_tensors, Tensor};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub const MATCHES_FILE: &str = "matches.json";
pub const MATCH_METRICS_FILE: &str = "match_metrics.json";
pub const REGISTRATION_DIR: &str = "registration";
pub const REG_METRICS_FILE: &str = "reg_metrics.json";

/// Tensor names in a feature file.
pub const FEATURES_X: &str = "x";
pub const FEATURES_Y: &str = "y";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FpfhParams {
    pub normal_radius: f64,
    pub feature_radius: f64,
}

impl Default for FpfhParams {
    fn default() -> Self {
        Self {
            normal_radius: 0.025,
            feature_radius: 0.05,
        }
    }
}

impl FpfhParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.normal_radius > 0.0 && self.feature_radius > 0.0) {
            return Err(Error::Config("FPFH radii must be positive".into()));
        }
        Ok(())
    }
}

/// Where per-point features come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provider {
    /// FPFH descriptors matched by nearest feature.
    Fpfh,
    /// Precomputed features (`x`, `y` tensors) matched by dual softmax and MNN.
    FeaturesFile(PathBuf),
    /// Network forward pass on FPFH keypoint inputs, dense outputs matched by dual softmax and MNN.
    Network { weights: PathBuf, heads: usize, voxel_size: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOptions {
    pub provider: Provider,
    pub matching: MatchingConfig,
    pub fpfh: FpfhParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub matches: CorrespondenceSet,
    pub metrics: MatchMetrics,
}

fn fpfh_features(cloud: &PointCloud, params: &FpfhParams) -> FeatureMatrix {
    compute_fpfh(cloud, params.normal_radius, params.feature_radius).features
}

fn network_features(
    cloud: &PointCloud,
    dense_features: &FeatureMatrix,
    voxel_size: f64,
) -> Result<(Vec<Vec3>, DMatrix<f64>)> {
    let keys = voxel_downsample(cloud, voxel_size)?;
    let owner = nearest_indices(&keys.keypoints, &cloud.points)?;
    let f = DMatrix::from_fn(owner.len(), dense_features.dim(), |r, c| dense_features.as_matrix()[(owner[r], c)]);
    Ok((keys.keypoints, f))
}

/// Predicts correspondences between the sample's complete and partial clouds
/// and scores them against the ground truth.
pub fn match_sample(sample: &DatasetSample, options: &MatchOptions) -> Result<MatchOutcome> {
    options.matching.validate()?;
    options.fpfh.validate()?;
    let matches = match &options.provider {
        Provider::Fpfh => {
            let fx = fpfh_features(&sample.complete, &options.fpfh);
            let fy = fpfh_features(&sample.partial, &options.fpfh);
            match_by_nearest_feature(&fx, &fy)?
        }
        Provider::FeaturesFile(path) => {
            let (fx, fy) = read_feature_file(path)?;
            if fx.rows() != sample.complete.len() || fy.rows() != sample.partial.len() {
                return Err(Error::InvalidInput(format!(
                    "{}: features have {} and {} rows but the sample has {} and {} points",
                    path.display(),
                    fx.rows(),
                    fy.rows(),
                    sample.complete.len(),
                    sample.partial.len()
                )));
            }
            match_features(&fx, &fy, &options.matching)?
        }
        Provider::Network {
            weights,
            heads,
            voxel_size,
        } => {
            let w = NetworkWeights::from_tensors(&read_tensors(weights)?, *heads)?;
            let fx = fpfh_features(&sample.complete, &options.fpfh);
            let fy = fpfh_features(&sample.partial, &options.fpfh);
            let (kx, ix) = network_features(&sample.complete, &fx, *voxel_size)?;
            let (ky, iy) = network_features(&sample.partial, &fy, *voxel_size)?;
            let (ox, oy) = network_forward(
                &w,
                CloudInput {
                    dense: &sample.complete.points,
                    keypoints: &kx,
                    features: &ix,
                },
                CloudInput {
                    dense: &sample.partial.points,
                    keypoints: &ky,
                    features: &iy,
                },
            )?;
            match_features(
                &FeatureMatrix::new(ox.dense.features)?,
                &FeatureMatrix::new(oy.dense.features)?,
                &options.matching,
            )?
        }
    };
    let metrics = matching_metrics(&matches, &CorrespondenceSet::from_pairs(&sample.gt_matches));
    Ok(MatchOutcome { matches, metrics })
}

pub fn read_feature_file(path: &Path) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let tensors = read_tensors(path)?;
    let get = |name: &str| -> Result<FeatureMatrix> {
        let t = tensors
            .get(name)
            .ok_or_else(|| Error::Schema(format!("{}: missing tensor `{name}`", path.display())))?;
        FeatureMatrix::new(t.to_matrix()?)
    };
    let (x, y) = (get(FEATURES_X)?, get(FEATURES_Y)?);
    if x.dim() != y.dim() {
        return Err(Error::InvalidInput(format!(
            "{}: feature dimensions differ ({} vs {})",
            path.display(),
            x.dim(),
            y.dim()
        )));
    }
    Ok((x, y))
}

/// Oracle features: ground-truth deformed coordinates of X and observed Y,
/// lifted by the same random Fourier map.
pub fn oracle_feature_tensors(sample: &DatasetSample, params: &OracleFeatureParams) -> Result<BTreeMap<String, Tensor>> {
    let fx = oracle_features(&sample.gt_deformed, params);
    let fy = oracle_features(&sample.partial.points, params);
    Ok(BTreeMap::from([
        (FEATURES_X.to_string(), Tensor::from_matrix(fx.as_matrix())),
        (FEATURES_Y.to_string(), Tensor::from_matrix(fy.as_matrix())),
    ]))
}

pub fn write_oracle_features(sample: &DatasetSample, params: &OracleFeatureParams, path: &Path) -> Result<()> {
    write_tensors(path, &oracle_feature_tensors(sample, params)?)
}

pub fn write_match_outcome(dir: &Path, outcome: &MatchOutcome) -> Result<()> {
    outcome.matches.write_json(dir.join(MATCHES_FILE))?;
    write_json(&dir.join(MATCH_METRICS_FILE), &outcome.metrics, true)
}

pub fn read_match_metrics(dir: &Path) -> Result<MatchMetrics> {
    read_json(&dir.join(MATCH_METRICS_FILE))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegisterOptions {
    pub registration: RegistrationConfig,
    /// Best-fit rigid alignment from the matches before the elastic solve.
    pub prealign: bool,
}

impl Default for RegisterOptions {
    fn default() -> Self {
        Self {
            registration: RegistrationConfig::default(),
            prealign: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegisterOutcome {
    /// Registered complete cloud, in the partial cloud's frame.
    pub registered: Vec<Vec3>,
    pub prealign: RigidTransform,
    /// Volume mesh after prealignment, before the elastic solve.
    pub mesh: TetMesh,
    pub solve: Registration,
    pub metrics: RegMetrics,
}

fn moved(t: &RigidTransform, points: &[Vec3]) -> Vec<Vec3> {
    points.iter().map(|p| t.apply_point(p)).collect()
}

/// Registers the sample's complete cloud onto its partial cloud with the given
/// matches `(i in X, j in Y)`.
///
/// The patient's volume mesh is carried into X's frame with the sample's rigid
/// pose (X and the volume both describe the preoperative organ), optionally
/// prealigned, and deformed by the elastic solve; X follows by interpolation.
pub fn register_sample(
    patient_volume: &TetMesh,
    sample: &DatasetSample,
    matches: &CorrespondenceSet,
    options: &RegisterOptions,
) -> Result<RegisterOutcome> {
    if matches.is_empty() {
        return Err(Error::InvalidInput("fewer than 1 match".into()));
    }
    let x = &sample.complete.points;
    let y = &sample.partial.points;
    matches.validate(x.len(), y.len())?;
    let src: Vec<Vec3> = matches.pairs().map(|(i, _)| x[i]).collect();
    let dst: Vec<Vec3> = matches.pairs().map(|(_, j)| y[j]).collect();
    let prealign = if options.prealign && matches.len() >= 3 {
        best_fit_rigid(&src, &dst)?
    } else {
        RigidTransform::identity()
    };
    let pose = prealign.compose(&sample.meta.rigid);
    let mesh = TetMesh {
        vertices: moved(&pose, &patient_volume.vertices),
        tets: patient_volume.tets.clone(),
    };
    let aligned = moved(&prealign, x);
    let aligned_src = moved(&prealign, &src);
    let targets = snap_matches(&mesh.vertices, &aligned_src, &dst)?;
    let solve = solve_registration(&mesh, &targets, &options.registration)?;
    let shift = TetInterpolator::new(&mesh).interpolate(&solve.displacement, &aligned);
    let registered: Vec<Vec3> = aligned.iter().zip(&shift).map(|(p, d)| p + d).collect();

    let scale = sample.meta.normalization.scale;
    let hidden: Vec<bool> = sample.gt_overlap_x.iter().map(|&o| !o).collect();
    let metrics = RegMetrics {
        tre: tre(&registered, &sample.gt_deformed, &hidden, scale)?,
        tre_initial: tre(x, &sample.gt_deformed, &hidden, scale)?,
        fre: fre(&registered, matches, y, scale)?,
        hausdorff: hausdorff(&registered, &sample.gt_deformed)? * scale,
    };
    Ok(RegisterOutcome {
        registered,
        prealign,
        mesh,
        solve,
        metrics,
    })
}

#[derive(Serialize)]
struct DisplacementFile {
    /// Per volume-mesh vertex.
    vertices: Vec<[f64; 3]>,
    /// Per complete-cloud point, including the prealignment.
    points: Vec<[f64; 3]>,
}

#[derive(Serialize)]
struct SolveReportFile<'a> {
    prealign: &'a RigidTransform,
    #[serde(flatten)]
    report: &'a SolveReport,
}

/// Writes `registered.ply`, `displacement.json`, `solve_report.json` and the
/// registration metrics into `dir`.
pub fn write_register_outcome(dir: &Path, sample: &DatasetSample, outcome: &RegisterOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cloud = PointCloud::new(outcome.registered.clone());
    write_ply_cloud(dir.join("registered.ply"), &cloud, None, PlyEncoding::BinaryF64)?;
    let arr = |v: &Vec3| [v.x, v.y, v.z];
    let displacement = DisplacementFile {
        vertices: outcome.solve.displacement.iter().map(arr).collect(),
        points: outcome
            .registered
            .iter()
            .zip(&sample.complete.points)
            .map(|(r, p)| arr(&(r - p)))
            .collect(),
    };
    write_json(&dir.join("displacement.json"), &displacement, false)?;
    let report = SolveReportFile {
        prealign: &outcome.prealign,
        report: &outcome.solve.report,
    };
    write_json(&dir.join("solve_report.json"), &report, true)?;
    write_json(&dir.join(REG_METRICS_FILE), &outcome.metrics, true)
}

pub fn read_reg_metrics(dir: &Path) -> Result<RegMetrics> {
    read_json(&dir.join(REG_METRICS_FILE))
}

/// Ground-truth matches of a sample as a correspondence set.
pub fn gt_correspondences(sample: &DatasetSample) -> CorrespondenceSet {
    CorrespondenceSet::from_pairs(&sample.gt_matches)
}

/// Checks that a sample was generated from this patient.
pub fn check_patient(patient: &Patient, sample: &DatasetSample) -> Result<()> {
    if sample.meta.normalization != patient.normalization || sample.complete.len() != patient.vertex_count() {
        return Err(Error::Schema(
            "sample was generated from a different patient (normalization or vertex count differ)".into(),
        ));
    }
    Ok(())
}
