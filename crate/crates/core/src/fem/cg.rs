use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgOptions {
    /// Stop when `|r| / |b|` falls to this value.
    pub tolerance: f64,
    /// `None` means ten times the system size.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual before the first and after every iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// (Preconditioned) conjugate gradient from a zero initial guess.
///
/// `apply(x, y)` writes `A x` into `y`; `diagonal` is only read for the Jacobi
/// preconditioner. A non-positive curvature `pᵀAp` is reported as
/// [`Error::Indefinite`].
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    diagonal: Option<&[f64]>,
    options: &CgOptions,
) -> Result<CgResult> {
    let n = b.len();
    let max_it = options.max_iterations.unwrap_or(10 * n.max(1));
    let inv_diag: Option<Vec<f64>> = match (options.preconditioner, diagonal) {
        (Preconditioner::Jacobi, Some(d)) => {
            if d.len() != n {
                return Err(Error::InvalidInput("preconditioner diagonal has the wrong length".into()));
            }
            Some(d.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect())
        }
        _ => None,
    };
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(inv) => z.iter_mut().zip(r).zip(inv).for_each(|((z, r), i)| *z = r * i),
        None => z.copy_from_slice(r),
    };

    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(CgResult {
            x,
            iterations: 0,
            residuals: vec![0.0],
            converged: true,
        });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residuals = vec![1.0];
    for it in 1..=max_it {
        apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::Indefinite {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / b_norm;
        residuals.push(rel);
        if rel <= options.tolerance {
            return Ok(CgResult {
                x,
                iterations: it,
                residuals,
                converged: true,
            });
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgResult {
        x,
        iterations: max_it,
        residuals,
        converged: false,
    })
}
