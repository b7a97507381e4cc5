//! Random-dot images and their translated / rotated copies.

use std::f64::consts::PI;

use crate::math::{Matrix, Rng};

/// Binary image with each pixel on with probability `density`.
pub fn random_dots(size: usize, density: f64, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(size, size, |_, _| {
        if rng.bernoulli(density) {
            1.0
        } else {
            0.0
        }
    })
}

/// Random-dot image standardized to zero mean and unit variance.
///
/// An image with no variation (e.g. no dots at all) is returned as zeros.
pub fn gen_random_dot_image(size: usize, density: f64, rng: &mut Rng) -> Matrix {
    let mut img = random_dots(size, density, rng);
    standardize(img.as_mut_slice());
    img
}

/// In-place zero-mean, unit-variance normalization (population variance).
pub fn standardize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 1e-24 {
        let inv = 1.0 / var.sqrt();
        values.iter_mut().for_each(|v| *v = (*v - mean) * inv);
    } else {
        values.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Bilinear sample at fractional `(row, col)`; coordinates are clamped to the
/// image. Integral coordinates return the stored pixel exactly.
pub fn bilinear(img: &Matrix, row: f64, col: f64) -> f64 {
    let max_r = (img.rows() - 1) as f64;
    let max_c = (img.cols() - 1) as f64;
    let row = row.clamp(0.0, max_r);
    let col = col.clamp(0.0, max_c);
    let r0 = row.floor();
    let c0 = col.floor();
    let fr = row - r0;
    let fc = col - c0;
    let (r0, c0) = (r0 as usize, c0 as usize);
    let r1 = (r0 + 1).min(img.rows() - 1);
    let c1 = (c0 + 1).min(img.cols() - 1);
    let top = if fc == 0.0 {
        img[(r0, c0)]
    } else {
        img[(r0, c0)] * (1.0 - fc) + img[(r0, c1)] * fc
    };
    if fr == 0.0 {
        return top;
    }
    let bottom = if fc == 0.0 {
        img[(r1, c0)]
    } else {
        img[(r1, c0)] * (1.0 - fc) + img[(r1, c1)] * fc
    };
    top * (1.0 - fr) + bottom * fr
}

/// Snaps values within `1e-9` of an integer onto it, so that exact rotations
/// by multiples of 90° hit pixel centers.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

pub fn crop(img: &Matrix, top: usize, left: usize, size: usize) -> Matrix {
    Matrix::from_fn(size, size, |r, c| img[(top + r, left + c)])
}

/// Side of the source image for translations up to `max_shift` pixels.
pub fn translation_source_size(patch: usize, max_shift: f64) -> usize {
    patch + 2 * max_shift.ceil() as usize
}

/// Side of the source image for rotations of a `patch`-sized crop.
pub fn rotation_source_size(patch: usize) -> usize {
    (patch as f64 * 2f64.sqrt()).ceil() as usize + 2
}

/// Crops `x` from the center of `source` and `y` as the same content moved by
/// `(dx, dy)` pixels: `y[r, c] = x[r - dy, c - dx]` (bilinear for fractional
/// shifts).
pub fn translated_pair(source: &Matrix, patch: usize, dx: f64, dy: f64) -> (Matrix, Matrix) {
    let margin = (source.rows() - patch) / 2;
    let x = crop(source, margin, margin, patch);
    let y = Matrix::from_fn(patch, patch, |r, c| {
        bilinear(
            source,
            (margin + r) as f64 - dy,
            (margin + c) as f64 - dx,
        )
    });
    (x, y)
}

/// Crops `x` from the center of `source` and `y` as the source rotated by
/// `theta` radians about the patch center (counterclockwise as displayed,
/// with rows running downward).
pub fn rotated_pair(source: &Matrix, patch: usize, theta: f64) -> (Matrix, Matrix) {
    let offset = (source.rows() - patch) / 2;
    let x = crop(source, offset, offset, patch);
    let center_patch = (patch as f64 - 1.0) / 2.0;
    let center = offset as f64 + center_patch;
    let (s, c) = theta.sin_cos();
    let y = Matrix::from_fn(patch, patch, |r, col| {
        let u = col as f64 - center_patch;
        let v = r as f64 - center_patch;
        let su = u * c - v * s;
        let sv = u * s + v * c;
        bilinear(source, snap(center + sv), snap(center + su))
    });
    (x, y)
}

/// Motion-direction quadrant of a shift: 0 = (+,+), 1 = (−,+), 2 = (−,−),
/// 3 = (+,−) in `(dx, dy)` sign order.
pub fn quadrant_label(dx: f64, dy: f64) -> u16 {
    match (dx >= 0.0, dy >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

/// Equal-width angle bin of `theta` over `[-max_angle, max_angle]`.
pub fn rotation_label(theta: f64, max_angle: f64, classes: usize) -> u16 {
    let width = 2.0 * max_angle / classes as f64;
    let bin = ((theta + max_angle) / width).floor();
    bin.clamp(0.0, (classes - 1) as f64) as u16
}

/// Scales a von Mises draw on `[-π, π]` to `[-max_angle, max_angle]`.
pub fn scale_angle(raw: f64, max_angle: f64) -> f64 {
    raw * (max_angle / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Matrix {
        Matrix::from_fn(n, n, |r, c| (r * 31 + c * 7) as f64 % 13.0 + 0.1 * r as f64)
    }

    #[test]
    fn zero_shift_is_identity() {
        let src = ramp(19);
        let (x, y) = translated_pair(&src, 13, 0.0, 0.0);
        assert_eq!(x, y);
    }

    #[test]
    fn integral_shift_matches_pixel_indexing() {
        let src = ramp(19);
        let (x, y) = translated_pair(&src, 13, 2.0, 0.0);
        for r in 0..13 {
            for c in 2..13 {
                assert_eq!(y[(r, c)], x[(r, c - 2)]);
            }
        }
        let (x, y) = translated_pair(&src, 13, -1.0, 3.0);
        for r in 3..13 {
            for c in 0..12 {
                assert_eq!(y[(r, c)], x[(r - 3, c + 1)]);
            }
        }
    }

    #[test]
    fn quadrant_sign_table() {
        let table = [
            ((1.0, 1.0), 0),
            ((-1.0, 1.0), 1),
            ((-1.0, -1.0), 2),
            ((1.0, -1.0), 3),
        ];
        for ((sx, sy), want) in table {
            assert_eq!(quadrant_label(sx * 1.5, sy * 2.2), want);
        }
        assert_eq!(quadrant_label(1.5, -2.2), 3);
    }

    #[test]
    fn rotation_bin_edges() {
        let max = 36f64.to_radians();
        assert_eq!(rotation_label(max, max, 10), 9);
        assert_eq!(rotation_label(-max, max, 10), 0);
        assert_eq!(rotation_label(0.0, max, 10), 5);
        assert_eq!(rotation_label(-1e-9, max, 10), 4);
    }

    #[test]
    fn zero_rotation_is_identity() {
        let src = ramp(21);
        let (x, y) = rotated_pair(&src, 13, 0.0);
        assert!(x.max_abs_diff(&y) < 1e-12);
    }

    #[test]
    fn quarter_turn_is_index_permutation() {
        let n = 9;
        let src = Matrix::from_fn(15, 15, |r, c| (r * 15 + c) as f64 + 0.25 * (c as f64).powi(2));
        let (x, y) = rotated_pair(&src, n, PI / 2.0);
        for r in 0..n {
            for c in 0..n {
                assert!((y[(r, c)] - x[(c, n - 1 - r)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standardize_moments() {
        let mut v: Vec<f64> = (0..50).map(|i| (i * i) as f64).collect();
        standardize(&mut v);
        let mean = v.iter().sum::<f64>() / 50.0;
        let var = v.iter().map(|a| a * a).sum::<f64>() / 50.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        let mut flat = vec![3.0; 4];
        standardize(&mut flat);
        assert_eq!(flat, vec![0.0; 4]);
    }

    #[test]
    fn dot_density() {
        let mut rng = Rng::new(8);
        let img = gen_random_dot_image(5, 0.0001, &mut rng);
        assert!(img.as_slice().iter().filter(|&&v| v > 0.0).count() <= 1);
        let img = gen_random_dot_image(317, 0.5, &mut rng);
        let n = img.as_slice().len() as f64;
        let frac = img.as_slice().iter().filter(|&&v| v > 0.0).count() as f64 / n;
        let sigma = (0.25 / n).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma, "fill {frac}");
    }
}
