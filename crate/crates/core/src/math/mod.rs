//! Numerical substrate shared by every other module.

mod dft;
mod matrix;
mod rng;
mod whitening;

pub use dft::{dft2, dft2_rect, idft2_real, signed_frequency, Spectrum};
pub use matrix::{gemm, Matrix, Operand};
pub use rng::Rng;
pub use whitening::{fit_whitening, WhiteningTransform, EIGEN_FLOOR};

/// Logistic sigmoid, evaluated without overflow for large |z|.
///
/// Saturated outputs are clamped to the open interval (0, 1).
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn sigmoid_vec(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| sigmoid(v)).collect()
}

/// Wraps an angle to `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}
