use crate::error::{Error, Result};
use crate::geometry::Vec3;
use nalgebra::DMatrix;

/// Sinusoidal encoding of 3-D positions into `d` columns.
///
/// Columns are grouped by axis (x block, then y, then z); each block holds
/// `d / 6` interleaved `(sin, cos)` pairs at frequencies `1 / 10000^(6k/d)`.
pub fn positional_encoding(points: &[Vec3], d: usize) -> Result<DMatrix<f64>> {
    if d == 0 || !d.is_multiple_of(6) {
        return Err(Error::InvalidInput(format!("encoding width {d} must be a positive multiple of 6")));
    }
    let pairs = d / 6;
    let freqs: Vec<f64> = (0..pairs)
        .map(|k| 1.0 / 10000f64.powf(6.0 * k as f64 / d as f64))
        .collect();
    let mut out = DMatrix::zeros(points.len(), d);
    for (i, p) in points.iter().enumerate() {
        for axis in 0..3 {
            for (k, w) in freqs.iter().enumerate() {
                let col = axis * 2 * pairs + 2 * k;
                let (s, c) = (w * p[axis]).sin_cos();
                out[(i, col)] = s;
                out[(i, col + 1)] = c;
            }
        }
    }
    Ok(out)
}
