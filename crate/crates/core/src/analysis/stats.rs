//! Circular statistics, rank tests and map smoothness.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::spectrum::{FilterAnalysis, FilterSpectrum};
use crate::model::CoreStructure;
use crate::{Error, Result};

/// Mean resultant length of angles with period 2π.
pub fn resultant_length(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let (s, c) = angles
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    (s * s + c * c).sqrt() / angles.len() as f64
}

/// `sqrt(-2 ln R)`; unbounded as the resultant vanishes.
pub fn circular_std(angles: &[f64]) -> f64 {
    let r = resultant_length(angles).min(1.0);
    (-2.0 * r.ln()).max(0.0).sqrt()
}

/// Circular standard deviation of axial data (period π), in radians of the
/// axis itself: angles are doubled, and the result halved.
pub fn axial_std(angles: &[f64]) -> f64 {
    let doubled: Vec<f64> = angles.iter().map(|a| 2.0 * a).collect();
    circular_std(&doubled) / 2.0
}

/// Smallest difference between two orientations in `[0, π)`, in `[0, π/2]`.
pub fn orientation_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Normal approximation with tie correction; negative when the first
    /// sample tends to be smaller.
    pub z: f64,
    /// One-sided p-value for "first sample is stochastically smaller".
    pub p_less: f64,
}

pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() || a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(
            "Mann-Whitney needs two nonempty samples without NaN".into(),
        ));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += rank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let z = if var > 0.0 {
        // continuity correction toward the mean
        let d = u - mean;
        let corrected = if d.abs() <= 0.5 { 0.0 } else { d - 0.5 * d.signum() };
        corrected / var.sqrt()
    } else {
        0.0
    };
    let p_less = Normal::standard().cdf(z);
    Ok(MannWhitney { u, z, p_less })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub neighbor_differences: Vec<f64>,
    pub random_differences: Vec<f64>,
    pub test: MannWhitney,
}

impl Smoothness {
    pub fn mean_neighbor(&self) -> f64 {
        mean(&self.neighbor_differences)
    }

    pub fn mean_random(&self) -> f64 {
        mean(&self.random_differences)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Orientation differences between 4-neighbors on the filter grid against
/// all other filter pairs. Degenerate filters are skipped.
pub fn topographic_smoothness(
    spectra: &[FilterAnalysis],
    grid_rows: usize,
    grid_cols: usize,
    wraparound: bool,
) -> Result<Smoothness> {
    if spectra.len() != grid_rows * grid_cols {
        return Err(Error::Dimension(format!(
            "{} filters on a {grid_rows}x{grid_cols} grid",
            spectra.len()
        )));
    }
    let at = |r: usize, c: usize| spectra[r * grid_cols + c].spectrum();
    let mut is_neighbor = vec![false; spectra.len() * spectra.len()];
    let mut neighbor_differences = Vec::new();
    for r in 0..grid_rows {
        for c in 0..grid_cols {
            let mut next = Vec::new();
            if c + 1 < grid_cols || (wraparound && grid_cols > 2) {
                next.push((r, (c + 1) % grid_cols));
            }
            if r + 1 < grid_rows || (wraparound && grid_rows > 2) {
                next.push(((r + 1) % grid_rows, c));
            }
            for (r2, c2) in next {
                let (i, j) = (r * grid_cols + c, r2 * grid_cols + c2);
                is_neighbor[i * spectra.len() + j] = true;
                is_neighbor[j * spectra.len() + i] = true;
                if let (Some(a), Some(b)) = (at(r, c), at(r2, c2)) {
                    neighbor_differences.push(orientation_distance(a.orientation, b.orientation));
                }
            }
        }
    }
    let mut random_differences = Vec::new();
    for i in 0..spectra.len() {
        for j in i + 1..spectra.len() {
            if is_neighbor[i * spectra.len() + j] {
                continue;
            }
            if let (Some(a), Some(b)) = (spectra[i].spectrum(), spectra[j].spectrum()) {
                random_differences.push(orientation_distance(a.orientation, b.orientation));
            }
        }
    }
    let test = mann_whitney(&neighbor_differences, &random_differences)?;
    Ok(Smoothness {
        neighbor_differences,
        random_differences,
        test,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDispersion {
    pub group: usize,
    pub members: usize,
    /// Circular std of phase.
    pub phase_std: f64,
    /// Axial circular std of orientation.
    pub orientation_std: f64,
    /// Population std of frequency.
    pub frequency_std: f64,
}

/// Within-group spread of the input filters' properties, for groups with at
/// least two non-degenerate members.
pub fn group_dispersion(core: &CoreStructure, input_spectra: &[FilterAnalysis]) -> Vec<GroupDispersion> {
    core.groups()
        .iter()
        .enumerate()
        .filter_map(|(g, grp)| {
            let members: Vec<&FilterSpectrum> = grp
                .inputs
                .iter()
                .filter_map(|&i| input_spectra.get(i).and_then(FilterAnalysis::spectrum))
                .collect();
            if members.len() < 2 {
                return None;
            }
            let phases: Vec<f64> = members.iter().map(|s| s.phase).collect();
            let orients: Vec<f64> = members.iter().map(|s| s.orientation).collect();
            let freqs: Vec<f64> = members.iter().map(|s| s.frequency).collect();
            let fm = mean(&freqs);
            let fv = freqs.iter().map(|f| (f - fm).powi(2)).sum::<f64>() / freqs.len() as f64;
            Some(GroupDispersion {
                group: g,
                members: members.len(),
                phase_std: circular_std(&phases),
                orientation_std: axial_std(&orients),
                frequency_std: fv.sqrt(),
            })
        })
        .collect()
}
