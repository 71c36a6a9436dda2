use serde::{Deserialize, Serialize};

use super::{MetricsError, Result};
use crate::linalg::{psd_sqrt, symmetric_eigen, SquareMatrix};
use crate::scalar::Real;

/// Added to both covariance diagonals when either set has fewer than `dim + 1` rows.
pub const FD_REGULARIZATION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    pub value: f64,
    pub regularized: bool,
    pub n_a: usize,
    pub n_b: usize,
    pub dim: usize,
}

fn moments<S: Real>(rows: &[&[S]], dim: usize) -> (Vec<f64>, SquareMatrix<f64>) {
    let n = rows.len();
    let mut mean = vec![0.0f64; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v.as_f64();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut acc = vec![0.0f64; dim * dim];
    let mut centred = vec![0.0f64; dim];
    for r in rows {
        for ((c, v), m) in centred.iter_mut().zip(r.iter()).zip(&mean) {
            *c = v.as_f64() - m;
        }
        for i in 0..dim {
            let ci = centred[i];
            let row = &mut acc[i * dim..(i + 1) * dim];
            for j in i..dim {
                row[j] += ci * centred[j];
            }
        }
    }
    let denom = n.saturating_sub(1).max(1) as f64;
    let mut cov = SquareMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let v = acc[i * dim + j] / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    (mean, cov)
}

/// `tr((√A · B · √A)^{1/2})` with negative eigenvalues clamped at zero.
fn sqrt_product_trace(a: &SquareMatrix<f64>, b: &SquareMatrix<f64>) -> f64 {
    let ra = psd_sqrt(a);
    let m = ra.matmul(b).matmul(&ra).symmetrized();
    symmetric_eigen(&m).values.iter().map(|v| v.max(0.0).sqrt()).sum()
}

/// Fréchet distance between Gaussians fitted to the two sets:
/// `‖μa − μb‖² + tr(Σa + Σb − 2 (Σa Σb)^{1/2})`, covariances unbiased.
pub fn frechet_distance<S: Real>(a: &[&[S]], b: &[&[S]]) -> Result<FrechetResult> {
    if a.is_empty() {
        return Err(MetricsError::EmptySet("first set"));
    }
    if b.is_empty() {
        return Err(MetricsError::EmptySet("second set"));
    }
    let dim = a[0].len();
    for r in a.iter().chain(b) {
        if r.len() != dim {
            return Err(MetricsError::DimMismatch(dim, r.len()));
        }
    }
    let (mu_a, mut cov_a) = moments(a, dim);
    let (mu_b, mut cov_b) = moments(b, dim);
    let regularized = a.len() < dim + 1 || b.len() < dim + 1;
    if regularized {
        for i in 0..dim {
            cov_a.set(i, i, cov_a.get(i, i) + FD_REGULARIZATION);
            cov_b.set(i, i, cov_b.get(i, i) + FD_REGULARIZATION);
        }
    }
    let mean_term: f64 = mu_a.iter().zip(&mu_b).map(|(x, y)| (x - y) * (x - y)).sum();
    // averaged over both operand orders
    let cross = 0.5 * (sqrt_product_trace(&cov_a, &cov_b) + sqrt_product_trace(&cov_b, &cov_a));
    let value = (mean_term + cov_a.trace() + cov_b.trace() - 2.0 * cross).max(0.0);
    Ok(FrechetResult {
        value,
        regularized,
        n_a: a.len(),
        n_b: b.len(),
        dim,
    })
}
