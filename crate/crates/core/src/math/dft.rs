//! Two-dimensional discrete Fourier transform.
//!
//! Direct separable evaluation: one pass of 1-D DFTs over rows, one over
//! columns. Filters here are at most a few dozen pixels wide, where the
//! O(n³) cost is negligible.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::Matrix;
use crate::{Error, Result};

/// Complex coefficient grid, row-major, `coeffs[ky * cols + kx]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    rows: usize,
    cols: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, ky: usize, kx: usize) -> Complex64 {
        self.coeffs[ky * self.cols + kx]
    }

    pub fn at_mut(&mut self, ky: usize, kx: usize) -> &mut Complex64 {
        &mut self.coeffs[ky * self.cols + kx]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Signed frequency of DFT bin `k` for length `n`, in `(-n/2, n/2]`.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> i64 {
    if 2 * k > n {
        k as i64 - n as i64
    } else {
        k as i64
    }
}

fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|t| Complex64::from_polar(1.0, sign * 2.0 * PI * t as f64 / n as f64))
        .collect()
}

fn dft1(input: &[Complex64], out: &mut [Complex64], tw: &[Complex64], stride_in: usize) {
    let n = out.len();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..n {
            acc += input[t * stride_in] * tw[(k * t) % n];
        }
        *o = acc;
    }
}

fn separable(rows: usize, cols: usize, data: &[Complex64], sign: f64) -> Vec<Complex64> {
    let tw_c = twiddles(cols, sign);
    let tw_r = twiddles(rows, sign);
    let mut tmp = vec![Complex64::new(0.0, 0.0); rows * cols];
    for r in 0..rows {
        dft1(
            &data[r * cols..(r + 1) * cols],
            &mut tmp[r * cols..(r + 1) * cols],
            &tw_c,
            1,
        );
    }
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        dft1(&tmp[c..], &mut column, &tw_r, cols);
        for r in 0..rows {
            out[r * cols + c] = column[r];
        }
    }
    out
}

/// Unnormalized forward DFT of a real image of any shape.
pub fn dft2_rect(image: &Matrix) -> Spectrum {
    let data: Vec<Complex64> = image
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    Spectrum {
        rows: image.rows(),
        cols: image.cols(),
        coeffs: separable(image.rows(), image.cols(), &data, -1.0),
    }
}

/// Forward DFT of a square patch, `X[ky,kx] = Σ x[v,u] e^{-2πi(kx·u + ky·v)/n}`.
pub fn dft2(patch: &Matrix) -> Result<Spectrum> {
    if patch.rows() != patch.cols() {
        return Err(Error::Dimension(format!(
            "dft2 needs a square patch, got {}x{}",
            patch.rows(),
            patch.cols()
        )));
    }
    if patch.rows() < 2 {
        return Err(Error::InvalidArgument("dft2 needs n >= 2".into()));
    }
    Ok(dft2_rect(patch))
}

/// Inverse DFT (normalized by 1/(rows·cols)); returns the real part.
pub fn idft2_real(spectrum: &Spectrum) -> Matrix {
    let (rows, cols) = (spectrum.rows, spectrum.cols);
    let out = separable(rows, cols, &spectrum.coeffs, 1.0);
    let norm = 1.0 / (rows * cols) as f64;
    Matrix::from_vec(rows, cols, out.iter().map(|c| c.re * norm).collect())
        .expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;

    fn direct_dft(x: &Matrix) -> Vec<Complex64> {
        let n = x.rows();
        let mut out = Vec::new();
        for ky in 0..n {
            for kx in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for v in 0..n {
                    for u in 0..n {
                        let ang = -2.0 * PI * ((kx * u + ky * v) as f64) / n as f64;
                        acc += Complex64::from_polar(x[(v, u)], ang);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn constant_patch_is_dc_only() {
        let n = 5;
        let c = 1.7;
        let s = dft2(&Matrix::from_fn(n, n, |_, _| c)).unwrap();
        assert!((s.at(0, 0) - Complex64::new(c * (n * n) as f64, 0.0)).norm() < 1e-12);
        for (i, z) in s.coeffs().iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-10, "bin {i}: {z}");
        }
    }

    #[test]
    fn cosine_concentrates_at_plus_minus_k() {
        let n = 8;
        let k = 2;
        let x = Matrix::from_fn(n, n, |_, u| (2.0 * PI * (k * u) as f64 / n as f64).cos());
        let s = dft2(&x).unwrap();
        let total = s.energy();
        let peak = s.at(0, k).norm_sqr() + s.at(0, n - k).norm_sqr();
        assert!((peak / total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_summation() {
        let mut rng = Rng::new(1);
        let x = Matrix::from_fn(4, 4, |_, _| rng.gaussian(0.0, 1.0));
        let s = dft2(&x).unwrap();
        for (a, b) in s.coeffs().iter().zip(direct_dft(&x)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn parseval_for_all_small_sizes() {
        let mut rng = Rng::new(2);
        for n in 2..=16 {
            let x = Matrix::from_fn(n, n, |_, _| rng.gaussian(0.0, 1.0));
            let s = dft2(&x).unwrap();
            let lhs = s.energy() / (n * n) as f64;
            let rhs = x.frobenius_sq();
            assert!(((lhs - rhs) / rhs).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = Rng::new(3);
        let x = Matrix::from_fn(6, 9, |_, _| rng.gaussian(0.0, 1.0));
        let back = idft2_real(&dft2_rect(&x));
        assert!(back.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn rejects_non_square() {
        assert!(dft2(&Matrix::zeros(3, 4)).is_err());
        assert!(dft2(&Matrix::zeros(1, 1)).is_err());
    }
}
