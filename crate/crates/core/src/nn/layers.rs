use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Affine map applied to row vectors: `x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `in x out`.
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Linear {
    pub fn new(w: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if w.ncols() != b.len() {
            return Err(Error::InvalidInput(format!(
                "bias length {} does not match weight output width {}",
                b.len(),
                w.ncols()
            )));
        }
        Ok(Self { w, b })
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: DMatrix::zeros(input, output),
            b: DVector::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_cols(x, self.input_dim(), "linear input")?;
        let mut y = x * &self.w;
        add_row_bias(&mut y, &self.b);
        Ok(y)
    }
}

pub(crate) fn check_cols(x: &DMatrix<f64>, cols: usize, what: &str) -> Result<()> {
    if x.ncols() != cols {
        return Err(Error::InvalidInput(format!("{what} has {} columns, expected {cols}", x.ncols())));
    }
    Ok(())
}

pub(crate) fn add_row_bias(y: &mut DMatrix<f64>, b: &DVector<f64>) {
    for (j, mut col) in y.column_iter_mut().enumerate() {
        col.add_scalar_mut(b[j]);
    }
}

pub fn relu(mut x: DMatrix<f64>) -> DMatrix<f64> {
    x.apply(|v| *v = v.max(0.0));
    x
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Per-row normalization to zero mean and unit variance (no learned scale or shift).
pub fn layer_norm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    let d = x.ncols() as f64;
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.apply(|v| *v = (*v - mean) * inv);
    }
    out
}

/// Softmax along each row.
pub fn softmax_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let s = row.sum();
        row /= s;
    }
    out
}
