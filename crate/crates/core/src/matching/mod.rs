//! Feature providers, similarity, dual-softmax confidence and thresholded
//! mutual-nearest-neighbor correspondence selection.

mod fpfh;
mod oracle;

pub use fpfh::{compute_fpfh, pair_features, FpfhResult, FPFH_BINS, FPFH_DIM};
pub use oracle::{oracle_features, OracleFeatureParams};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVectorView, RowDVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One feature vector per point; all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(DMatrix<f64>);

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature entry ({}, {}) is not finite",
                k % data.nrows(),
                k / data.nrows()
            )));
        }
        Ok(Self(data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("ragged feature rows".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.0.row(i).into_owned()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Rows scaled to unit length; zero rows stay zero.
    pub fn normalized_rows(&self) -> DMatrix<f64> {
        let mut m = self.0.clone();
        for mut r in m.row_iter_mut() {
            let n = r.norm();
            if n > 0.0 {
                r /= n;
            }
        }
        m
    }
}

/// Dual-softmax confidences, `|X| x |Y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchMatrix(DMatrix<f64>);

impl MatchMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::InvalidInput("match confidences must lie in [0, 1]".into()));
        }
        Ok(Self(data))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub i: usize,
    pub j: usize,
    pub confidence: f64,
}

/// Source/target index pairs with confidences; serialized as `[{i, j, confidence}, ...]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrespondenceSet {
    pub matches: Vec<Correspondence>,
}

impl CorrespondenceSet {
    /// Ground-truth pairs with unit confidence.
    pub fn from_pairs(pairs: &[[usize; 2]]) -> Self {
        Self {
            matches: pairs
                .iter()
                .map(|&[i, j]| Correspondence { i, j, confidence: 1.0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.matches.iter().map(|c| (c.i, c.j))
    }

    /// True when no source and no target index repeats.
    pub fn is_one_to_one(&self) -> bool {
        let mut a: Vec<usize> = self.matches.iter().map(|c| c.i).collect();
        let mut b: Vec<usize> = self.matches.iter().map(|c| c.j).collect();
        a.sort_unstable();
        b.sort_unstable();
        a.windows(2).all(|w| w[0] != w[1]) && b.windows(2).all(|w| w[0] != w[1])
    }

    pub fn validate(&self, sources: usize, targets: usize) -> Result<()> {
        for c in &self.matches {
            if c.i >= sources || c.j >= targets {
                return Err(Error::InvalidInput(format!(
                    "match ({}, {}) outside {sources} x {targets}",
                    c.i, c.j
                )));
            }
            if !(c.confidence.is_finite() && c.confidence >= 0.0 && c.confidence <= 1.0) {
                return Err(Error::InvalidInput(format!("confidence {} outside [0, 1]", c.confidence)));
            }
        }
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::dataset::write_json(path.as_ref(), self, false)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        crate::dataset::read_json(path.as_ref())
    }
}

/// Temperature and confidence cutoff for dual-softmax matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchingConfig {
    pub temperature: f64,
    pub threshold: f64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            threshold: 0.05,
        }
    }
}

impl MatchingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature {} must be > 0", self.temperature)));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} not in [0, 1)", self.threshold)));
        }
        Ok(())
    }
}

fn check_dims(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "feature dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Cosine similarity of every row pair; zero rows score 0.
pub fn similarity(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<DMatrix<f64>> {
    check_dims(a, b)?;
    Ok(a.normalized_rows() * b.normalized_rows().transpose())
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Row softmax of `s / tau`.
pub fn row_softmax(s: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut out = s.transpose() / tau;
    // columns of the transpose are rows of `s` and contiguous
    for mut c in out.column_iter_mut() {
        softmax_in_place(c.as_mut_slice());
    }
    out.transpose()
}

/// Column softmax of `s / tau`.
pub fn col_softmax(s: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut out = s / tau;
    for mut c in out.column_iter_mut() {
        softmax_in_place(c.as_mut_slice());
    }
    out
}

/// `rowsoftmax(S / tau) ⊙ colsoftmax(S / tau)`.
pub fn dual_softmax(s: &DMatrix<f64>, tau: f64) -> MatchMatrix {
    assert!(tau > 0.0, "temperature must be positive");
    MatchMatrix(row_softmax(s, tau).component_mul(&col_softmax(s, tau)))
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// Pairs that are each other's best match and clear `theta`; ties go to the lower index.
pub fn mutual_nn_threshold(m: &MatchMatrix, theta: f64) -> CorrespondenceSet {
    let m = &m.0;
    let col_best: Vec<Option<usize>> = m.column_iter().map(|c| argmax(c.iter().cloned())).collect();
    let mut matches = Vec::new();
    for (i, row) in m.row_iter().enumerate() {
        let Some(j) = argmax(row.iter().cloned()) else {
            continue;
        };
        let c = m[(i, j)];
        if col_best[j] == Some(i) && c >= theta {
            matches.push(Correspondence { i, j, confidence: c });
        }
    }
    CorrespondenceSet { matches }
}

/// Similarity, dual softmax and thresholded MNN in one call.
pub fn match_features(a: &FeatureMatrix, b: &FeatureMatrix, config: &MatchingConfig) -> Result<CorrespondenceSet> {
    config.validate()?;
    let s = similarity(a, b)?;
    Ok(mutual_nn_threshold(&dual_softmax(&s, config.temperature), config.threshold))
}

/// For each target row, the Euclidean-nearest source row; confidence `1 / (1 + d)`.
pub fn match_by_nearest_feature(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<CorrespondenceSet> {
    check_dims(a, b)?;
    if a.rows() == 0 {
        return Ok(CorrespondenceSet::default());
    }
    // Row-major copies keep the inner loop contiguous.
    let at = a.as_matrix().transpose();
    let bt = b.as_matrix().transpose();
    let matches = (0..b.rows())
        .map(|j| {
            let q: DVectorView<f64> = bt.column(j);
            let q = q.as_slice();
            let (mut best, mut best_d2) = (0, f64::INFINITY);
            for (i, col) in at.column_iter().enumerate() {
                let d2: f64 = col.as_slice().iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
                if d2 < best_d2 {
                    best = i;
                    best_d2 = d2;
                }
            }
            Correspondence {
                i: best,
                j,
                confidence: 1.0 / (1.0 + best_d2.sqrt()),
            }
        })
        .collect();
    Ok(CorrespondenceSet { matches })
}
