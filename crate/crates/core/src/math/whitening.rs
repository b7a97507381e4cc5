//! PCA whitening fit on a set of patches.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhiteningTransform {
    /// Per-pixel mean subtracted before projection.
    pub mean: Vec<f64>,
    /// `components × pixels`, rows ordered by decreasing eigenvalue.
    pub forward: Matrix,
    /// `pixels × components`.
    pub inverse: Matrix,
    /// Retained eigenvalues, decreasing.
    pub eigenvalues: Vec<f64>,
    /// Fraction of total variance carried by the retained components.
    pub retained_variance: f64,
}

impl WhiteningTransform {
    pub fn pixels(&self) -> usize {
        self.mean.len()
    }

    pub fn components(&self) -> usize {
        self.forward.rows()
    }

    pub fn whiten(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.forward.mul_vec(&centered)
    }

    /// Whitens every row of `[examples × pixels]`.
    pub fn whiten_rows(&self, x: &Matrix) -> Matrix {
        let mut centered = x.clone();
        let neg: Vec<f64> = self.mean.iter().map(|m| -m).collect();
        centered.add_row_vector(&neg);
        centered.matmul_t(&self.forward)
    }

    pub fn unwhiten(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.inverse.mul_vec(z);
        x.iter_mut().zip(&self.mean).for_each(|(a, m)| *a += m);
        x
    }

    /// Maps a component-space direction back to pixel space without adding
    /// the mean, e.g. for displaying filters.
    pub fn to_pixel_direction(&self, z: &[f64]) -> Vec<f64> {
        self.inverse.mul_vec(z)
    }
}

/// Fits PCA whitening to `[examples × pixels]` data, keeping the fewest
/// leading components whose eigenvalue mass reaches `retain`.
pub fn fit_whitening(patches: &Matrix, retain: f64) -> Result<WhiteningTransform> {
    let (n, d) = patches.shape();
    if !(retain > 0.0 && retain <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "retained variance must be in (0, 1], got {retain}"
        )));
    }
    if d == 0 || n < d {
        return Err(Error::InvalidArgument(format!(
            "whitening needs at least as many examples as pixels ({n} < {d})"
        )));
    }
    let mut mean = patches.column_sums();
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = patches.clone();
    let neg: Vec<f64> = mean.iter().map(|m| -m).collect();
    centered.add_row_vector(&neg);
    let mut cov = centered.t_matmul(&centered);
    cov.scale(1.0 / n as f64);

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.as_slice()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    if lambda_max <= 0.0 {
        return Err(Error::InvalidArgument(
            "whitening input has zero variance".into(),
        ));
    }
    let usable: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] >= EIGEN_FLOOR * lambda_max)
        .collect();
    let total: f64 = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).sum();

    let mut kept = 0;
    let mut mass = 0.0;
    for &i in &usable {
        mass += eig.eigenvalues[i];
        kept += 1;
        if mass >= retain * total * (1.0 - 1e-12) {
            break;
        }
    }

    let mut forward = Matrix::zeros(kept, d);
    let mut inverse = Matrix::zeros(d, kept);
    let mut eigenvalues = Vec::with_capacity(kept);
    for (c, &i) in usable[..kept].iter().enumerate() {
        let lambda = eig.eigenvalues[i];
        let (s, inv_s) = (lambda.sqrt(), 1.0 / lambda.sqrt());
        for p in 0..d {
            let e = eig.eigenvectors[(p, i)];
            forward[(c, p)] = e * inv_s;
            inverse[(p, c)] = e * s;
        }
        eigenvalues.push(lambda);
    }
    Ok(WhiteningTransform {
        mean,
        forward,
        inverse,
        retained_variance: mass / total,
        eigenvalues,
    })
}
