use super::layers::{check_cols, relu, sigmoid, Linear};
use crate::error::{Error, Result};
use crate::geometry::{nearest_indices, Vec3};
use nalgebra::{DMatrix, DVector};

/// `σ(C w3 + b3)` per row.
pub fn overlap_head(c: &DMatrix<f64>, w3: &DVector<f64>, b3: f64) -> Result<Vec<f64>> {
    check_cols(c, w3.len(), "overlap head input")?;
    Ok((c * w3).iter().map(|z| sigmoid(z + b3)).collect())
}

/// Keypoint features and scores broadcast to dense points.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseConditioned {
    /// Index of the owning keypoint for every dense point.
    pub assignment: Vec<usize>,
    pub features: DMatrix<f64>,
    /// `[features | xyz]`.
    pub augmented: DMatrix<f64>,
    pub scores: Vec<f64>,
}

/// Each dense point takes the feature and overlap score of its Euclidean-nearest
/// keypoint (ties to the lower keypoint index).
pub fn point_to_node_decode(
    dense: &[Vec3],
    keypoints: &[Vec3],
    key_features: &DMatrix<f64>,
    key_scores: &[f64],
) -> Result<DenseConditioned> {
    if keypoints.is_empty() {
        return Err(Error::InvalidInput("no keypoints to decode from".into()));
    }
    if key_features.nrows() != keypoints.len() || key_scores.len() != keypoints.len() {
        return Err(Error::InvalidInput("keypoint features or scores do not match keypoint count".into()));
    }
    let assignment = nearest_indices(dense, keypoints)?;
    let d = key_features.ncols();
    let features = DMatrix::from_fn(dense.len(), d, |i, j| key_features[(assignment[i], j)]);
    let augmented = DMatrix::from_fn(dense.len(), d + 3, |i, j| {
        if j < d {
            features[(i, j)]
        } else {
            dense[i][j - d]
        }
    });
    let scores = assignment.iter().map(|&k| key_scores[k]).collect();
    Ok(DenseConditioned {
        assignment,
        features,
        augmented,
        scores,
    })
}

/// `ReLU(C* W1 + b1) W2 + b2`.
pub fn coordinate_mlp(augmented: &DMatrix<f64>, l1: &Linear, l2: &Linear) -> Result<DMatrix<f64>> {
    if l2.output_dim() != 3 {
        return Err(Error::InvalidInput(format!("coordinate head outputs {} values, expected 3", l2.output_dim())));
    }
    l2.forward(&relu(l1.forward(augmented)?))
}
