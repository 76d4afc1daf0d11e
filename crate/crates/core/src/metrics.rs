//! Matching and registration metrics with batch aggregation.
//!
//! Registration errors are measured in normalized units and multiplied by a
//! `scale` (the patient's normalization scale) so reports come out in mm.

use crate::error::{Error, Result};
use crate::geometry::{nearest_neighbors, Vec3};
use crate::matching::CorrespondenceSet;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

/// Matching Score, Inlier Ratio and match counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchMetrics {
    /// Correct predictions over ground-truth matches, in percent.
    pub matching_score: f64,
    /// Correct predictions over all predictions, in percent.
    pub inlier_ratio: f64,
    pub exact_match_count: usize,
    pub predicted_count: usize,
    pub gt_count: usize,
    /// Set when either set is empty and a ratio fell back to 0.
    pub undefined: bool,
}

impl MatchMetrics {
    fn from_counts(correct: usize, predicted: usize, gt: usize) -> Self {
        let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        Self {
            matching_score: pct(correct, gt),
            inlier_ratio: pct(correct, predicted),
            exact_match_count: correct,
            predicted_count: predicted,
            gt_count: gt,
            undefined: predicted == 0 || gt == 0,
        }
    }

    pub fn record_values(&self, out: &mut BTreeMap<String, f64>) {
        out.insert("ms".into(), self.matching_score);
        out.insert("ir".into(), self.inlier_ratio);
        out.insert("mp".into(), self.predicted_count as f64);
    }
}

/// Exact ordered-pair agreement between predicted and ground-truth matches.
pub fn matching_metrics(pred: &CorrespondenceSet, gt: &CorrespondenceSet) -> MatchMetrics {
    let truth: HashSet<(usize, usize)> = gt.pairs().collect();
    let predicted: HashSet<(usize, usize)> = pred.pairs().collect();
    let correct = predicted.intersection(&truth).count();
    MatchMetrics::from_counts(correct, pred.len(), truth.len())
}

/// Tolerant variant: a prediction `(i, j)` counts as correct when the ground
/// truth pairs `j` with some `i*` and `|positions[i] - positions[i*]| <= eps`.
/// `positions` are the deformed source points.
pub fn matching_metrics_within(
    pred: &CorrespondenceSet,
    gt: &CorrespondenceSet,
    positions: &[Vec3],
    eps: f64,
) -> Result<MatchMetrics> {
    let n = positions.len();
    if let Some((i, _)) = pred.pairs().chain(gt.pairs()).find(|&(i, _)| i >= n) {
        return Err(Error::InvalidInput(format!("source index {i} out of range ({n} positions)")));
    }
    let truth: HashMap<usize, usize> = gt.pairs().map(|(i, j)| (j, i)).collect();
    let predicted: HashSet<(usize, usize)> = pred.pairs().collect();
    let correct = predicted
        .iter()
        .filter(|&&(i, j)| truth.get(&j).is_some_and(|&t| (positions[i] - positions[t]).norm() <= eps))
        .count();
    Ok(MatchMetrics::from_counts(correct.min(truth.len()), pred.len(), truth.len()))
}

/// Mean, population standard deviation and maximum of a set of distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub count: usize,
}

impl ErrorStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            max: values.iter().cloned().fold(0.0, f64::max),
            count: values.len(),
        })
    }
}

/// Target registration error over the vertices flagged in `hidden`.
pub fn tre(registered: &[Vec3], gt_deformed: &[Vec3], hidden: &[bool], scale: f64) -> Result<ErrorStats> {
    if registered.len() != gt_deformed.len() || registered.len() != hidden.len() {
        return Err(Error::InvalidInput(format!(
            "tre needs equal lengths, got {} registered, {} ground truth, {} mask",
            registered.len(),
            gt_deformed.len(),
            hidden.len()
        )));
    }
    let d: Vec<f64> = (0..registered.len())
        .filter(|&k| hidden[k])
        .map(|k| (registered[k] - gt_deformed[k]).norm() * scale)
        .collect();
    ErrorStats::from_values(&d).ok_or_else(|| Error::InvalidInput("tre mask selects no vertices".into()))
}

/// Fiducial registration error: residual between each matched source vertex
/// `registered[i]` and its target `targets[j]`.
pub fn fre(registered: &[Vec3], matches: &CorrespondenceSet, targets: &[Vec3], scale: f64) -> Result<ErrorStats> {
    if matches.is_empty() {
        return Err(Error::InvalidInput("fre needs at least one match".into()));
    }
    matches.validate(registered.len(), targets.len())?;
    let d: Vec<f64> = matches
        .pairs()
        .map(|(i, j)| (registered[i] - targets[j]).norm() * scale)
        .collect();
    Ok(ErrorStats::from_values(&d).expect("non-empty"))
}

/// Which directed distances enter a Hausdorff computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    #[default]
    Symmetric,
    /// `max_a min_b |a - b|`
    AToB,
    /// `max_b min_a |a - b|`
    BToA,
}

/// `max_{a in a} min_{b in b} |a - b|`.
pub fn directed_hausdorff(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("hausdorff distance of an empty cloud".into()));
    }
    Ok(nearest_neighbors(a, b, 1)?
        .iter()
        .map(|n| n[0].distance)
        .fold(0.0, f64::max))
}

/// Symmetric Hausdorff distance.
pub fn hausdorff(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    hausdorff_with(a, b, Sidedness::Symmetric)
}

pub fn hausdorff_with(a: &[Vec3], b: &[Vec3], side: Sidedness) -> Result<f64> {
    match side {
        Sidedness::Symmetric => Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?)),
        Sidedness::AToB => directed_hausdorff(a, b),
        Sidedness::BToA => directed_hausdorff(b, a),
    }
}

/// Per-sample registration errors in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegMetrics {
    pub tre: ErrorStats,
    /// TRE of the unregistered source, for reduction ratios.
    pub tre_initial: ErrorStats,
    pub fre: ErrorStats,
    pub hausdorff: f64,
}

impl RegMetrics {
    /// Relative mean-TRE reduction, in percent.
    pub fn tre_reduction(&self) -> f64 {
        if self.tre_initial.mean > 0.0 {
            100.0 * (1.0 - self.tre.mean / self.tre_initial.mean)
        } else {
            0.0
        }
    }

    pub fn record_values(&self, out: &mut BTreeMap<String, f64>) {
        out.insert("tre".into(), self.tre.mean);
        out.insert("tre_initial".into(), self.tre_initial.mean);
        out.insert("tre_reduction".into(), self.tre_reduction());
        out.insert("fre".into(), self.fre.mean);
        out.insert("hd".into(), self.hausdorff);
    }
}

/// Named scalar metrics of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: String,
    pub values: BTreeMap<String, f64>,
}

/// Mean and population standard deviation of one metric across samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Per-sample records and their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub per_sample: Vec<SampleRecord>,
    pub aggregate: BTreeMap<String, Summary>,
}

/// Aggregates every metric name present in any record. A metric missing from
/// some samples is summarized over the samples that have it.
pub fn aggregate(records: Vec<SampleRecord>) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::InvalidInput("nothing to aggregate".into()));
    }
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &records {
        for (k, &v) in &r.values {
            columns.entry(k.clone()).or_default().push(v);
        }
    }
    let aggregate = columns
        .into_iter()
        .map(|(k, v)| {
            let s = ErrorStats::from_values(&v).expect("column has a value");
            (
                k,
                Summary {
                    mean: s.mean,
                    std: s.std,
                    count: s.count,
                },
            )
        })
        .collect();
    Ok(Report {
        per_sample: records,
        aggregate,
    })
}

impl Report {
    /// Fixed-width table, one metric per row:
    ///
    /// ```text
    /// metric                mean ± std          n
    /// ms                   45.000 ± 7.000      50
    /// ```
    pub fn table(&self) -> String {
        let mut out = format!("{:<14}{:>12} ± {:<12}{:>6}\n", "metric", "mean", "std", "n");
        for (name, s) in &self.aggregate {
            let _ = writeln!(out, "{:<14}{:>12.3} ± {:<12.3}{:>6}", name, s.mean, s.std, s.count);
        }
        out
    }
}
