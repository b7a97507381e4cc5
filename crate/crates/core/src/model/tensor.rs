//! Dense three-way parameter tensor, for checking the factored computations
//! on tiny models.

use super::FactorModel;
use crate::{Error, Result};

/// Largest `input_dim · output_dim · K` accepted by [`compose_tensor`].
pub const MAX_DENSE_ENTRIES: usize = 1_000_000;

/// `w[i][j][k] = Σ_{(d,e,s)} wx[i,d] · wy[j,e] · wh[s,k]`, i.e. the core tensor
/// contracted with all three factor matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    pub dims: (usize, usize, usize),
    pub data: Vec<f64>,
}

impl DenseTensor {
    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        let (_, nj, nk) = self.dims;
        self.data[(i * nj + j) * nk + k]
    }

    /// `Σ_ijk w_ijk x_i y_j h_k`
    pub fn energy(&self, x: &[f64], y: &[f64], h: &[f64]) -> f64 {
        let (ni, nj, nk) = self.dims;
        let mut e = 0.0;
        for i in 0..ni {
            for j in 0..nj {
                let xy = x[i] * y[j];
                for k in 0..nk {
                    e += self.at(i, j, k) * xy * h[k];
                }
            }
        }
        e
    }

    /// Net input of each hidden unit: `Σ_ij w_ijk x_i y_j`.
    pub fn hidden_input(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (ni, nj, nk) = self.dims;
        let mut out = vec![0.0; nk];
        for i in 0..ni {
            for j in 0..nj {
                let xy = x[i] * y[j];
                for (k, o) in out.iter_mut().enumerate() {
                    *o += self.at(i, j, k) * xy;
                }
            }
        }
        out
    }

    /// Output-image reconstruction without bias: `Σ_ik w_ijk x_i h_k`.
    pub fn output_drive(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let (ni, nj, nk) = self.dims;
        let mut out = vec![0.0; nj];
        for i in 0..ni {
            for (j, o) in out.iter_mut().enumerate() {
                for k in 0..nk {
                    *o += self.at(i, j, k) * x[i] * h[k];
                }
            }
        }
        out
    }
}

pub fn compose_tensor(model: &FactorModel) -> Result<DenseTensor> {
    let (ni, nj, nk) = (model.input_dim(), model.output_dim(), model.hidden());
    if ni.saturating_mul(nj).saturating_mul(nk) > MAX_DENSE_ENTRIES {
        return Err(Error::InvalidArgument(format!(
            "dense tensor {ni}x{nj}x{nk} exceeds {MAX_DENSE_ENTRIES} entries"
        )));
    }
    let mut data = vec![0.0; ni * nj * nk];
    for t in model.core.triples() {
        for i in 0..ni {
            let a = model.wx[(i, t.input)];
            for j in 0..nj {
                let ab = a * model.wy[(j, t.output)];
                let base = (i * nj + j) * nk;
                for k in 0..nk {
                    data[base + k] += ab * model.wh[(t.slot, k)];
                }
            }
        }
    }
    Ok(DenseTensor {
        dims: (ni, nj, nk),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;
    use crate::model::CoreStructure;

    #[test]
    fn zero_factors_give_zero_tensor() {
        let m = FactorModel::zeros(CoreStructure::grouped(4, 2).unwrap(), 3, 3, 2);
        assert!(compose_tensor(&m).unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_is_parafac_sum() {
        let mut rng = Rng::new(1);
        let m = FactorModel::init(CoreStructure::diagonal(3).unwrap(), 4, 5, 2, 1.0, &mut rng).unwrap();
        let w = compose_tensor(&m).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                for k in 0..2 {
                    let want: f64 = (0..3).map(|f| m.wx[(i, f)] * m.wy[(j, f)] * m.wh[(f, k)]).sum();
                    assert!((w.at(i, j, k) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn size_guard() {
        let m = FactorModel::zeros(CoreStructure::diagonal(1).unwrap(), 200, 200, 30);
        assert!(compose_tensor(&m).is_err());
    }
}
