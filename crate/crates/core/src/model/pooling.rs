//! Square-pooling (energy model) baseline over the concatenated pair.
//!
//! `Wc = [U; V]` stacks one filter half per image and
//! `p_h = σ(b_h + Whᵀ (Uᵀx + Vᵀy)²)`. Training uses the gated objective:
//! each image is reconstructed from the other through the pooled gains
//! `q = Wh·p_h`, as `ŷ = V(q ∗ Uᵀx) + b_y` and `x̂ = U(q ∗ Vᵀy) + b_x`.
//! Reconstructing `[x; y]` from itself instead admits an identity solution
//! whose mapping units ignore the transformation.

use super::Autoencoder;
use crate::math::{gemm, sigmoid, Matrix, Operand, Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SquarePoolingModel {
    /// Length of `x`; `y` has the same length.
    pub image_dim: usize,
    /// `2·image_dim × F`
    pub wc: Matrix,
    /// `F × K`
    pub wh: Matrix,
    pub bh: Vec<f64>,
    /// Reconstruction bias over `[x; y]` (x half first).
    pub b: Vec<f64>,
}

impl SquarePoolingModel {
    pub fn zeros(image_dim: usize, filters: usize, hidden: usize) -> Self {
        Self {
            image_dim,
            wc: Matrix::zeros(2 * image_dim, filters),
            wh: Matrix::zeros(filters, hidden),
            bh: vec![0.0; hidden],
            b: vec![0.0; 2 * image_dim],
        }
    }

    pub fn init(image_dim: usize, filters: usize, hidden: usize, init_std: f64, rng: &mut Rng) -> Result<Self> {
        if image_dim == 0 || filters == 0 || hidden == 0 {
            return Err(Error::InvalidArgument(
                "model dimensions must be positive".into(),
            ));
        }
        let mut m = Self::zeros(image_dim, filters, hidden);
        for w in [&mut m.wc, &mut m.wh] {
            w.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = rng.gaussian(0.0, init_std));
        }
        Ok(m)
    }

    pub fn filters(&self) -> usize {
        self.wc.cols()
    }

    pub fn hidden(&self) -> usize {
        self.wh.cols()
    }

    fn concat(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        if x.cols() != self.image_dim || y.cols() != self.image_dim || x.rows() != y.rows() {
            return Err(Error::Dimension(format!(
                "square-pooling model expects two {}-pixel images per row",
                self.image_dim
            )));
        }
        x.hstack(y)
    }

    fn hidden_from(&self, u: &Matrix) -> (Matrix, Matrix) {
        let sq = u.map(|v| v * v);
        let mut h = sq.matmul(&self.wh);
        h.add_row_vector(&self.bh);
        h.as_mut_slice().iter_mut().for_each(|a| *a = sigmoid(*a));
        (sq, h)
    }

    pub fn infer_batch(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        let z = self.concat(x, y)?;
        let u = z.matmul(&self.wc);
        Ok(self.hidden_from(&u).1)
    }

    pub fn infer_square_pooling(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let ym = Matrix::from_vec(1, y.len(), y.to_vec())?;
        Ok(self.infer_batch(&xm, &ym)?.into_vec())
    }

    fn halves(&self) -> (Matrix, Matrix) {
        let d = self.image_dim;
        let u: Vec<usize> = (0..d).collect();
        let v: Vec<usize> = (d..2 * d).collect();
        (self.wc.select_rows(&u), self.wc.select_rows(&v))
    }

    fn run(
        &self,
        x: &Matrix,
        y: &Matrix,
        x_clean: &Matrix,
        y_clean: &Matrix,
        want_grad: bool,
    ) -> Result<(f64, Option<Self>)> {
        let z = self.concat(x, y)?;
        if x_clean.shape() != x.shape() || y_clean.shape() != y.shape() {
            return Err(Error::Dimension("clean targets must match inputs".into()));
        }
        let batch = z.rows();
        if batch == 0 {
            return Err(Error::InvalidArgument("empty minibatch".into()));
        }
        let d = self.image_dim;
        let (wu, wv) = self.halves();
        let ux = x.matmul(&wu);
        let vy = y.matmul(&wv);
        let mut u = ux.clone();
        u.axpy(1.0, &vy);
        let (sq, h) = self.hidden_from(&u);
        let q = h.matmul_t(&self.wh);
        let gate = |m: &Matrix| {
            let mut c = m.clone();
            c.as_mut_slice().iter_mut().zip(q.as_slice()).for_each(|(a, b)| *a *= b);
            c
        };
        let (cy, cx) = (gate(&ux), gate(&vy));
        let mut ry = cy.matmul_t(&wv);
        ry.add_row_vector(&self.b[d..]);
        ry.axpy(-1.0, y_clean);
        let mut rx = cx.matmul_t(&wu);
        rx.add_row_vector(&self.b[..d]);
        rx.axpy(-1.0, x_clean);
        let loss = (ry.frobenius_sq() + rx.frobenius_sq()) / batch as f64;
        if !want_grad {
            return Ok((loss, None));
        }

        let f = self.filters();
        let (mut gu, mut gv) = (Matrix::zeros(d, f), Matrix::zeros(d, f));
        ry.scale(2.0 / batch as f64);
        rx.scale(2.0 / batch as f64);
        gemm(1.0, Operand::transposed(&ry), Operand::plain(&cy), 0.0, &mut gv);
        gemm(1.0, Operand::transposed(&rx), Operand::plain(&cx), 0.0, &mut gu);
        let mut gb = rx.column_sums();
        gb.extend(ry.column_sums());

        let d_cy = ry.matmul(&wv);
        let d_cx = rx.matmul(&wu);
        // q gates both reconstructions; ux and vy each feed one of them
        let mut d_q = Matrix::zeros(batch, f);
        let mut d_ux = Matrix::zeros(batch, f);
        let mut d_vy = Matrix::zeros(batch, f);
        for i in 0..batch * f {
            let (dy, dx) = (d_cy.as_slice()[i], d_cx.as_slice()[i]);
            d_q.as_mut_slice()[i] = dy * ux.as_slice()[i] + dx * vy.as_slice()[i];
            d_ux.as_mut_slice()[i] = dy * q.as_slice()[i];
            d_vy.as_mut_slice()[i] = dx * q.as_slice()[i];
        }
        let mut gwh = Matrix::zeros(f, self.hidden());
        gemm(1.0, Operand::transposed(&d_q), Operand::plain(&h), 0.0, &mut gwh);
        let mut d_a = d_q.matmul(&self.wh);
        for (da, &hv) in d_a.as_mut_slice().iter_mut().zip(h.as_slice()) {
            *da *= hv * (1.0 - hv);
        }
        let gbh = d_a.column_sums();
        gemm(1.0, Operand::transposed(&sq), Operand::plain(&d_a), 1.0, &mut gwh);
        // encoder: u = ux + vy enters squared
        let d_sq = d_a.matmul_t(&self.wh);
        for ((dx, dy), (&ds, &uv)) in d_ux
            .as_mut_slice()
            .iter_mut()
            .zip(d_vy.as_mut_slice().iter_mut())
            .zip(d_sq.as_slice().iter().zip(u.as_slice()))
        {
            *dx += 2.0 * ds * uv;
            *dy += 2.0 * ds * uv;
        }
        gemm(1.0, Operand::transposed(x), Operand::plain(&d_ux), 1.0, &mut gu);
        gemm(1.0, Operand::transposed(y), Operand::plain(&d_vy), 1.0, &mut gv);

        let mut g = Self::zeros(d, f, self.hidden());
        for r in 0..d {
            g.wc.row_mut(r).copy_from_slice(gu.row(r));
            g.wc.row_mut(d + r).copy_from_slice(gv.row(r));
        }
        g.wh = gwh;
        g.bh = gbh;
        g.b = gb;
        Ok((loss, Some(g)))
    }
}

impl Autoencoder for SquarePoolingModel {
    fn loss(&self, x: &Matrix, y: &Matrix, x_clean: &Matrix, y_clean: &Matrix) -> Result<f64> {
        Ok(self.run(x, y, x_clean, y_clean, false)?.0)
    }

    fn loss_and_grad(
        &self,
        x: &Matrix,
        y: &Matrix,
        x_clean: &Matrix,
        y_clean: &Matrix,
    ) -> Result<(f64, Self)> {
        let (l, g) = self.run(x, y, x_clean, y_clean, true)?;
        Ok((l, g.expect("gradient requested")))
    }

    fn encode(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        self.infer_batch(x, y)
    }

    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("wc", self.wc.as_slice()),
            ("wh", self.wh.as_slice()),
            ("bh", &self.bh),
            ("b", &self.b),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("wc", self.wc.as_mut_slice()),
            ("wh", self.wh.as_mut_slice()),
            ("bh", &mut self.bh),
            ("b", &mut self.b),
        ]
    }
}
