use serde::{Deserialize, Serialize};

use super::structure::{CoreKind, CoreStructure};
use super::Autoencoder;
use crate::math::{gemm, sigmoid, Matrix, Operand, Rng};
use crate::{Error, Result};

/// Hidden-unit probabilities `p(h_k | x, y)` for one example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingActivations {
    pub p_h: Vec<f64>,
}

/// Factored gated autoencoder.
///
/// `wx` is `input_dim × F_x`, `wy` is `output_dim × F_y`, `wh` is
/// `num_products × K`. Hidden units see
/// `a_k = b_h[k] + Σ_{(d,e,s)} wh[s,k] · (wxᵀx)_d · (wyᵀy)_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorModel {
    pub core: CoreStructure,
    pub wx: Matrix,
    pub wy: Matrix,
    pub wh: Matrix,
    pub bh: Vec<f64>,
    pub bx: Vec<f64>,
    pub by: Vec<f64>,
}

/// Intermediate values of a batched forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    /// Input-factor responses `X·Wx`.
    pub u: Matrix,
    /// Output-factor responses `Y·Wy`.
    pub v: Matrix,
    /// Products per slot.
    pub products: Matrix,
    /// Hidden probabilities.
    pub h: Matrix,
}

impl FactorModel {
    pub fn zeros(core: CoreStructure, input_dim: usize, output_dim: usize, hidden: usize) -> Self {
        let (fx, fy, s) = (core.input_factors(), core.output_factors(), core.num_products());
        Self {
            wx: Matrix::zeros(input_dim, fx),
            wy: Matrix::zeros(output_dim, fy),
            wh: Matrix::zeros(s, hidden),
            bh: vec![0.0; hidden],
            bx: vec![0.0; input_dim],
            by: vec![0.0; output_dim],
            core,
        }
    }

    /// Gaussian weights with standard deviation `init_std`, zero biases.
    ///
    /// For topographic cores, hidden unit `k` starts connected only to the
    /// product slots of group `k mod G`.
    pub fn init(
        core: CoreStructure,
        input_dim: usize,
        output_dim: usize,
        hidden: usize,
        init_std: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden == 0 {
            return Err(Error::InvalidArgument(
                "model dimensions must be positive".into(),
            ));
        }
        let mut m = Self::zeros(core, input_dim, output_dim, hidden);
        for w in [&mut m.wx, &mut m.wy, &mut m.wh] {
            w.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = rng.gaussian(0.0, init_std));
        }
        if matches!(m.core.kind(), CoreKind::Topographic { .. }) {
            let groups = m.core.groups();
            for k in 0..hidden {
                let keep = groups[k % groups.len()].slots();
                for s in 0..m.wh.rows() {
                    if !keep.contains(&s) {
                        m.wh[(s, k)] = 0.0;
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.wx.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.wy.rows()
    }

    pub fn hidden(&self) -> usize {
        self.wh.cols()
    }

    pub fn num_products(&self) -> usize {
        self.wh.rows()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.1.len()).sum()
    }

    fn check_batch(&self, x: &Matrix, y: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() || y.cols() != self.output_dim() || x.rows() != y.rows() {
            return Err(Error::Dimension(format!(
                "model expects x:{} y:{}, got x:{}x{} y:{}x{}",
                self.input_dim(),
                self.output_dim(),
                x.rows(),
                x.cols(),
                y.rows(),
                y.cols()
            )));
        }
        Ok(())
    }

    fn products(&self, u: &Matrix, v: &Matrix) -> Matrix {
        let mut p = Matrix::zeros(u.rows(), self.num_products());
        for b in 0..u.rows() {
            let (ub, vb) = (u.row(b), v.row(b));
            let pb = p.row_mut(b);
            for t in self.core.triples() {
                pb[t.slot] = ub[t.input] * vb[t.output];
            }
        }
        p
    }

    /// Batched inference, one example per row.
    pub fn forward(&self, x: &Matrix, y: &Matrix) -> Result<Forward> {
        self.check_batch(x, y)?;
        let u = x.matmul(&self.wx);
        let v = y.matmul(&self.wy);
        let products = self.products(&u, &v);
        let mut h = products.matmul(&self.wh);
        h.add_row_vector(&self.bh);
        h.as_mut_slice().iter_mut().for_each(|a| *a = sigmoid(*a));
        Ok(Forward { u, v, products, h })
    }

    pub fn infer_batch(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x, y)?.h)
    }

    pub fn infer(&self, x: &[f64], y: &[f64]) -> Result<MappingActivations> {
        let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let ym = Matrix::from_vec(1, y.len(), y.to_vec())?;
        Ok(MappingActivations {
            p_h: self.infer_batch(&xm, &ym)?.into_vec(),
        })
    }

    /// Activation of hidden unit `k` alone, touching only that unit's weights.
    pub fn unit_activation(&self, k: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() || y.len() != self.output_dim() || k >= self.hidden() {
            return Err(Error::Dimension("unit_activation arguments".into()));
        }
        let u = self.wx.t_mul_vec(x);
        let v = self.wy.t_mul_vec(y);
        let mut a = self.bh[k];
        for t in self.core.triples() {
            a += self.wh[(t.slot, k)] * u[t.input] * v[t.output];
        }
        Ok(sigmoid(a))
    }

    /// `Z = H·Whᵀ`: the per-slot gating coefficients.
    fn slot_coefficients(&self, h: &Matrix) -> Matrix {
        h.matmul_t(&self.wh)
    }

    fn check_hidden(&self, h: &Matrix, rows: usize) -> Result<()> {
        if h.cols() != self.hidden() || h.rows() != rows {
            return Err(Error::Dimension(format!(
                "hidden activations {}x{} for batch of {rows} and K={}",
                h.rows(),
                h.cols(),
                self.hidden()
            )));
        }
        Ok(())
    }

    /// Output-factor coefficients `c_e = Σ_{(d,e,s)} z_s · u_d`.
    fn scatter_to_outputs(&self, z: &Matrix, u: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(u.rows(), self.core.output_factors());
        for b in 0..u.rows() {
            let (zb, ub) = (z.row(b), u.row(b));
            let cb = c.row_mut(b);
            for t in self.core.triples() {
                cb[t.output] += zb[t.slot] * ub[t.input];
            }
        }
        c
    }

    /// Input-factor coefficients `c_d = Σ_{(d,e,s)} z_s · v_e`.
    fn scatter_to_inputs(&self, z: &Matrix, v: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(v.rows(), self.core.input_factors());
        for b in 0..v.rows() {
            let (zb, vb) = (z.row(b), v.row(b));
            let cb = c.row_mut(b);
            for t in self.core.triples() {
                cb[t.input] += zb[t.slot] * vb[t.output];
            }
        }
        c
    }

    /// `ŷ = Wy · c + b_y` with `c` gathered through the product map.
    pub fn reconstruct_y_batch(&self, x: &Matrix, h: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Dimension("reconstruct_y input width".into()));
        }
        self.check_hidden(h, x.rows())?;
        let u = x.matmul(&self.wx);
        let c = self.scatter_to_outputs(&self.slot_coefficients(h), &u);
        let mut out = c.matmul_t(&self.wy);
        out.add_row_vector(&self.by);
        Ok(out)
    }

    pub fn reconstruct_x_batch(&self, y: &Matrix, h: &Matrix) -> Result<Matrix> {
        if !self.core.kind().is_symmetric() {
            return Err(Error::Unsupported(
                "asymmetric group model only reconstructs the output image".into(),
            ));
        }
        if y.cols() != self.output_dim() {
            return Err(Error::Dimension("reconstruct_x input width".into()));
        }
        self.check_hidden(h, y.rows())?;
        let v = y.matmul(&self.wy);
        let c = self.scatter_to_inputs(&self.slot_coefficients(h), &v);
        let mut out = c.matmul_t(&self.wx);
        out.add_row_vector(&self.bx);
        Ok(out)
    }

    pub fn reconstruct_y(&self, x: &[f64], p_h: &MappingActivations) -> Result<Vec<f64>> {
        let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let hm = Matrix::from_vec(1, p_h.p_h.len(), p_h.p_h.clone())?;
        Ok(self.reconstruct_y_batch(&xm, &hm)?.into_vec())
    }

    pub fn reconstruct_x(&self, y: &[f64], p_h: &MappingActivations) -> Result<Vec<f64>> {
        let ym = Matrix::from_vec(1, y.len(), y.to_vec())?;
        let hm = Matrix::from_vec(1, p_h.p_h.len(), p_h.p_h.clone())?;
        Ok(self.reconstruct_x_batch(&ym, &hm)?.into_vec())
    }

    /// Factored energy `Σ_{(d,e,s)} (wxᵀx)_d (wyᵀy)_e (wh·h)_s`, biases excluded.
    pub fn energy(&self, x: &[f64], y: &[f64], h: &[f64]) -> f64 {
        let u = self.wx.t_mul_vec(x);
        let v = self.wy.t_mul_vec(y);
        let z = self.wh.mul_vec(h);
        self.core
            .triples()
            .iter()
            .map(|t| u[t.input] * v[t.output] * z[t.slot])
            .sum()
    }

    fn batch_loss_and_grad(
        &self,
        x: &Matrix,
        y: &Matrix,
        x_clean: &Matrix,
        y_clean: &Matrix,
        want_grad: bool,
    ) -> Result<(f64, Option<FactorModel>)> {
        self.check_batch(x, y)?;
        if x_clean.shape() != x.shape() || y_clean.shape() != y.shape() {
            return Err(Error::Dimension("clean targets must match inputs".into()));
        }
        let batch = x.rows();
        if batch == 0 {
            return Err(Error::InvalidArgument("empty minibatch".into()));
        }
        let symmetric = self.core.kind().is_symmetric();
        let fwd = self.forward(x, y)?;
        let z = self.slot_coefficients(&fwd.h);

        let cy = self.scatter_to_outputs(&z, &fwd.u);
        let mut ry = cy.matmul_t(&self.wy);
        ry.add_row_vector(&self.by);
        ry.axpy(-1.0, y_clean);
        let mut loss = ry.frobenius_sq();

        let mut cx_rx = None;
        if symmetric {
            let cx = self.scatter_to_inputs(&z, &fwd.v);
            let mut rx = cx.matmul_t(&self.wx);
            rx.add_row_vector(&self.bx);
            rx.axpy(-1.0, x_clean);
            loss += rx.frobenius_sq();
            cx_rx = Some((cx, rx));
        }
        loss /= batch as f64;
        if !want_grad {
            return Ok((loss, None));
        }

        let scale = 2.0 / batch as f64;
        let mut g = FactorModel::zeros(
            self.core.clone(),
            self.input_dim(),
            self.output_dim(),
            self.hidden(),
        );
        ry.scale(scale);
        // decoder of ŷ
        gemm(1.0, Operand::transposed(&ry), Operand::plain(&cy), 0.0, &mut g.wy);
        g.by = ry.column_sums();
        let d_cy = ry.matmul(&self.wy);

        let mut d_z = Matrix::zeros(batch, self.num_products());
        let mut d_u = Matrix::zeros(batch, self.core.input_factors());
        let mut d_v = Matrix::zeros(batch, self.core.output_factors());
        for b in 0..batch {
            let (zb, ub, dcb) = (z.row(b), fwd.u.row(b), d_cy.row(b));
            let dzb = d_z.row_mut(b);
            for t in self.core.triples() {
                dzb[t.slot] += dcb[t.output] * ub[t.input];
            }
            let dub = d_u.row_mut(b);
            for t in self.core.triples() {
                dub[t.input] += dcb[t.output] * zb[t.slot];
            }
        }

        if let Some((cx, mut rx)) = cx_rx {
            rx.scale(scale);
            gemm(1.0, Operand::transposed(&rx), Operand::plain(&cx), 0.0, &mut g.wx);
            g.bx = rx.column_sums();
            let d_cx = rx.matmul(&self.wx);
            for b in 0..batch {
                let (zb, vb, dcb) = (z.row(b), fwd.v.row(b), d_cx.row(b));
                let dzb = d_z.row_mut(b);
                for t in self.core.triples() {
                    dzb[t.slot] += dcb[t.input] * vb[t.output];
                }
                let dvb = d_v.row_mut(b);
                for t in self.core.triples() {
                    dvb[t.output] += dcb[t.input] * zb[t.slot];
                }
            }
        }

        // Z = H·Whᵀ
        let mut d_h = d_z.matmul(&self.wh);
        gemm(1.0, Operand::transposed(&d_z), Operand::plain(&fwd.h), 0.0, &mut g.wh);
        // H = σ(P·Wh + b_h)
        for (dh, &h) in d_h.as_mut_slice().iter_mut().zip(fwd.h.as_slice()) {
            *dh *= h * (1.0 - h);
        }
        let d_a = d_h;
        g.bh = d_a.column_sums();
        gemm(
            1.0,
            Operand::transposed(&fwd.products),
            Operand::plain(&d_a),
            1.0,
            &mut g.wh,
        );
        let d_p = d_a.matmul_t(&self.wh);
        for b in 0..batch {
            let (ub, vb, dpb) = (fwd.u.row(b), fwd.v.row(b), d_p.row(b));
            let dub = d_u.row_mut(b);
            for t in self.core.triples() {
                dub[t.input] += dpb[t.slot] * vb[t.output];
            }
            let dvb = d_v.row_mut(b);
            for t in self.core.triples() {
                dvb[t.output] += dpb[t.slot] * ub[t.input];
            }
        }
        gemm(1.0, Operand::transposed(x), Operand::plain(&d_u), 1.0, &mut g.wx);
        gemm(1.0, Operand::transposed(y), Operand::plain(&d_v), 1.0, &mut g.wy);
        Ok((loss, Some(g)))
    }
}

impl Autoencoder for FactorModel {
    fn loss(&self, x: &Matrix, y: &Matrix, x_clean: &Matrix, y_clean: &Matrix) -> Result<f64> {
        Ok(self.batch_loss_and_grad(x, y, x_clean, y_clean, false)?.0)
    }

    fn loss_and_grad(
        &self,
        x: &Matrix,
        y: &Matrix,
        x_clean: &Matrix,
        y_clean: &Matrix,
    ) -> Result<(f64, Self)> {
        let (loss, g) = self.batch_loss_and_grad(x, y, x_clean, y_clean, true)?;
        Ok((loss, g.expect("gradient requested")))
    }

    fn encode(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        self.infer_batch(x, y)
    }

    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("wx", self.wx.as_slice()),
            ("wy", self.wy.as_slice()),
            ("wh", self.wh.as_slice()),
            ("bh", &self.bh),
            ("bx", &self.bx),
            ("by", &self.by),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("wx", self.wx.as_mut_slice()),
            ("wy", self.wy.as_mut_slice()),
            ("wh", self.wh.as_mut_slice()),
            ("bh", &mut self.bh),
            ("bx", &mut self.bx),
            ("by", &mut self.by),
        ]
    }
}
