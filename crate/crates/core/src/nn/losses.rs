use crate::error::{Error, Result};
use crate::geometry::{nearest_indices, Vec3};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self { alpha: 0.25, gamma: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocalLoss {
    pub loss: f64,
    /// d loss / d M, same shape as the confidence matrix.
    pub grad: DMatrix<f64>,
    /// No ground-truth pair was given, so only negatives contributed.
    pub no_positives: bool,
}

fn pow_or_one(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

/// Focal binary cross-entropy over every entry of a confidence matrix,
/// averaged over all entries. Entries must lie strictly inside (0, 1).
pub fn focal_matching_loss(m: &DMatrix<f64>, gt: &[(usize, usize)], params: &FocalParams) -> Result<FocalLoss> {
    let (a, g) = (params.alpha, params.gamma);
    let mut positive = DMatrix::from_element(m.nrows(), m.ncols(), false);
    for &(i, j) in gt {
        if i >= m.nrows() || j >= m.ncols() {
            return Err(Error::InvalidInput(format!("gt pair ({i}, {j}) outside {:?}", m.shape())));
        }
        positive[(i, j)] = true;
    }
    let n = m.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = DMatrix::zeros(m.nrows(), m.ncols());
    for (k, &p) in m.iter().enumerate() {
        if positive[k] {
            let q = 1.0 - p;
            loss -= a * pow_or_one(q, g) * p.ln();
            let dfocal = if g == 0.0 { 0.0 } else { a * g * pow_or_one(q, g - 1.0) * p.ln() };
            grad[k] = (dfocal - a * pow_or_one(q, g) / p) / n;
        } else {
            let q = 1.0 - p;
            loss -= (1.0 - a) * pow_or_one(p, g) * q.ln();
            let dfocal = if g == 0.0 { 0.0 } else { g * pow_or_one(p, g - 1.0) * q.ln() };
            grad[k] = -(1.0 - a) * (dfocal - pow_or_one(p, g) / q) / n;
        }
    }
    Ok(FocalLoss {
        loss: loss / n,
        grad,
        no_positives: gt.is_empty(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChamferLoss {
    pub loss: f64,
    pub grad_points: Vec<Vec3>,
    pub grad_scores: Vec<f64>,
}

/// `(1/|X̂|) Σ ŝ_x min_y |x̂ - y|^p` for `p` in {1, 2}; the argmin is held fixed for the gradient.
pub fn weighted_chamfer_loss(predicted: &[Vec3], target: &[Vec3], scores: &[f64], p: u32) -> Result<ChamferLoss> {
    if target.is_empty() {
        return Err(Error::InvalidInput("chamfer target is empty".into()));
    }
    if !matches!(p, 1 | 2) {
        return Err(Error::InvalidInput(format!("chamfer exponent {p} not in {{1, 2}}")));
    }
    if scores.len() != predicted.len() {
        return Err(Error::InvalidInput("one overlap score per predicted point required".into()));
    }
    let n = predicted.len().max(1) as f64;
    let nearest = nearest_indices(predicted, target)?;
    let mut loss = 0.0;
    let mut grad_points = Vec::with_capacity(predicted.len());
    let mut grad_scores = Vec::with_capacity(predicted.len());
    for ((x, &k), &s) in predicted.iter().zip(&nearest).zip(scores) {
        let diff = x - target[k];
        let dist = diff.norm();
        let (term, dterm) = if p == 2 {
            (dist * dist, diff * 2.0)
        } else if dist > 0.0 {
            (dist, diff / dist)
        } else {
            (0.0, Vec3::zeros())
        };
        loss += s * term;
        grad_points.push(dterm * (s / n));
        grad_scores.push(term / n);
    }
    Ok(ChamferLoss {
        loss: loss / n,
        grad_points,
        grad_scores,
    })
}

/// Mean binary cross-entropy of overlap scores against labels, with its gradient.
pub fn overlap_loss(scores: &[f64], labels: &[bool]) -> Result<(f64, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n = scores.len().max(1) as f64;
    let mut loss = 0.0;
    let grad = scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| {
            if l {
                loss -= s.ln();
                -1.0 / (s * n)
            } else {
                loss -= (1.0 - s).ln();
                1.0 / ((1.0 - s) * n)
            }
        })
        .collect();
    Ok((loss / n, grad))
}

/// Non-negative weights of the three training losses; a zero weight drops a term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub matching: f64,
    pub chamfer: f64,
    pub overlap: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            matching: 1.0,
            chamfer: 1.0,
            overlap: 1.0,
        }
    }
}

pub fn total_loss(ml: f64, cl: f64, ol: f64, w: &LossWeights) -> Result<f64> {
    if [w.matching, w.chamfer, w.overlap].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput("loss weights must be non-negative".into()));
    }
    let term = |weight: f64, value: f64| if weight == 0.0 { 0.0 } else { weight * value };
    Ok(term(w.matching, ml) + term(w.chamfer, cl) + term(w.overlap, ol))
}
