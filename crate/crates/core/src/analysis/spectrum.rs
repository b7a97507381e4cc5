//! Dominant Fourier component of a filter, and tables built from it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::math::{dft2, idft2_real, signed_frequency, wrap_angle, Matrix, WhiteningTransform};
use crate::model::FactorModel;
use crate::{Error, Result};

/// Orientation bins over `[0, π)`.
pub const ORIENTATION_BINS: usize = 8;

/// A peak is spurious when it is below this multiple of the median
/// candidate magnitude.
pub const PEAK_TO_MEDIAN: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpectrum {
    pub filter_index: usize,
    /// Cycles per patch, `≤ side/2`.
    pub frequency: f64,
    /// Radians in `[0, π)`.
    pub orientation: f64,
    /// Radians in `[-π, π)`, relative to pixel `(0, 0)`.
    pub phase: f64,
    pub peak_magnitude: f64,
    /// Signed bin of the peak (columns, rows).
    pub kx: i64,
    pub ky: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FilterAnalysis {
    Spectrum(FilterSpectrum),
    /// All-zero filter or spurious peak; no spectrum is reported.
    Degenerate { filter_index: usize, peak_magnitude: f64 },
}

impl FilterAnalysis {
    pub fn spectrum(&self) -> Option<&FilterSpectrum> {
        match self {
            FilterAnalysis::Spectrum(s) => Some(s),
            FilterAnalysis::Degenerate { .. } => None,
        }
    }

    pub fn filter_index(&self) -> usize {
        match self {
            FilterAnalysis::Spectrum(s) => s.filter_index,
            FilterAnalysis::Degenerate { filter_index, .. } => *filter_index,
        }
    }
}

/// Non-DC bin in the half plane `atan2(ky, kx) ∈ [0, π)` with radial
/// frequency at most Nyquist.
fn candidate(ky: usize, kx: usize, n: usize) -> Option<(i64, i64, f64, f64)> {
    let (sx, sy) = (signed_frequency(kx, n), signed_frequency(ky, n));
    if sx == 0 && sy == 0 {
        return None;
    }
    let angle = (sy as f64).atan2(sx as f64);
    if !(0.0..PI).contains(&angle) {
        return None;
    }
    let freq = ((sx * sx + sy * sy) as f64).sqrt();
    if freq > n as f64 / 2.0 + 1e-12 {
        return None;
    }
    Some((sx, sy, freq, angle))
}

pub fn analyze_filter(filter_index: usize, filter: &Matrix) -> Result<FilterAnalysis> {
    if filter.rows() != filter.cols() || filter.rows() < 2 {
        return Err(Error::Dimension(format!(
            "filter must be square with side >= 2, got {}x{}",
            filter.rows(),
            filter.cols()
        )));
    }
    let n = filter.rows();
    let spec = dft2(filter)?;
    let mut mags = Vec::new();
    let mut best: Option<(f64, f64, f64, i64, i64, Complex64)> = None;
    for ky in 0..n {
        for kx in 0..n {
            let Some((sx, sy, freq, angle)) = candidate(ky, kx, n) else {
                continue;
            };
            let c = spec.at(ky, kx);
            let m = c.norm();
            mags.push(m);
            let better = match &best {
                None => true,
                Some((bm, bf, ba, ..)) => {
                    let tol = 1e-12 * bm.max(m);
                    if (m - bm).abs() > tol {
                        m > *bm
                    } else if (freq - bf).abs() > 1e-12 {
                        freq < *bf
                    } else {
                        angle < *ba
                    }
                }
            };
            if better {
                best = Some((m, freq, angle, sx, sy, c));
            }
        }
    }
    let (peak, frequency, orientation, kx, ky, c) = best.expect("n >= 2 leaves a candidate");
    mags.sort_by(f64::total_cmp);
    let median = if mags.len() % 2 == 1 {
        mags[mags.len() / 2]
    } else {
        0.5 * (mags[mags.len() / 2 - 1] + mags[mags.len() / 2])
    };
    let scale = spec.energy().sqrt();
    if peak <= 1e-10 * scale || peak < PEAK_TO_MEDIAN * median {
        return Ok(FilterAnalysis::Degenerate {
            filter_index,
            peak_magnitude: peak,
        });
    }
    Ok(FilterAnalysis::Spectrum(FilterSpectrum {
        filter_index,
        frequency,
        orientation,
        phase: wrap_angle(c.arg()),
        peak_magnitude: peak,
        kx,
        ky,
    }))
}

/// Rotates the phase of every non-self-conjugate component by `delta`
/// (conjugate partners by `-delta`), keeping the filter real.
pub fn phase_rotate(filter: &Matrix, delta: f64) -> Result<Matrix> {
    let n = filter.rows();
    let mut spec = dft2(filter)?;
    let up = Complex64::from_polar(1.0, delta);
    for ky in 0..n {
        for kx in 0..n {
            let (cy, cx) = ((n - ky) % n, (n - kx) % n);
            if (cy, cx) == (ky, kx) {
                continue;
            }
            let sx = signed_frequency(kx, n);
            let sy = signed_frequency(ky, n);
            // at the row Nyquist both partners have sy = n/2
            let upper = if 2 * ky == n {
                sx > 0
            } else {
                (0.0..PI).contains(&(sy as f64).atan2(sx as f64))
            };
            *spec.at_mut(ky, kx) *= if upper { up } else { up.conj() };
        }
    }
    Ok(idft2_real(&spec))
}

/// Reshapes filter columns to square pixel patches, un-whitening first when
/// a transform is given.
pub fn filters_as_patches(weights: &Matrix, whitening: Option<&WhiteningTransform>) -> Result<Vec<Matrix>> {
    let pixels = whitening.map_or(weights.rows(), |w| w.pixels());
    if let Some(w) = whitening {
        if w.components() != weights.rows() {
            return Err(Error::Dimension(format!(
                "filters have {} components, whitening expects {}",
                weights.rows(),
                w.components()
            )));
        }
    }
    let side = (pixels as f64).sqrt().round() as usize;
    if side * side != pixels {
        return Err(Error::Dimension(format!("{pixels} pixels is not a square patch")));
    }
    (0..weights.cols())
        .map(|f| {
            let col = weights.col(f);
            let px = match whitening {
                Some(w) => w.to_pixel_direction(&col),
                None => col,
            };
            Matrix::from_vec(side, side, px)
        })
        .collect()
}

pub fn analyze_filters(filters: &[Matrix]) -> Result<Vec<FilterAnalysis>> {
    filters
        .iter()
        .enumerate()
        .map(|(i, f)| analyze_filter(i, f))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBins {
    pub orientation_bins: usize,
    /// Frequency bins are `0..=max_frequency` (rounded cycles/patch).
    pub max_frequency: usize,
}

impl HistogramBins {
    pub fn for_patch(side: usize) -> Self {
        Self {
            orientation_bins: ORIENTATION_BINS,
            max_frequency: side / 2,
        }
    }

    pub fn orientation_bin(&self, orientation: f64) -> usize {
        let b = (orientation / (PI / self.orientation_bins as f64)).floor();
        (b.max(0.0) as usize).min(self.orientation_bins - 1)
    }

    pub fn frequency_bin(&self, frequency: f64) -> usize {
        (frequency.round().max(0.0) as usize).min(self.max_frequency)
    }

    pub fn bin(&self, s: &FilterSpectrum) -> (usize, usize) {
        (self.frequency_bin(s.frequency), self.orientation_bin(s.orientation))
    }
}

/// `counts[frequency bin][orientation bin]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyHistogram {
    pub bins: HistogramBins,
    pub counts: Vec<Vec<usize>>,
}

impl PropertyHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn max_cell(&self) -> usize {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn occupied_orientations(&self) -> usize {
        (0..self.bins.orientation_bins)
            .filter(|&o| self.counts.iter().any(|row| row[o] > 0))
            .count()
    }

    pub fn occupied_frequencies(&self) -> usize {
        self.counts.iter().filter(|row| row.iter().any(|&c| c > 0)).count()
    }
}

pub fn property_histograms(spectra: &[FilterAnalysis], bins: HistogramBins) -> Result<PropertyHistogram> {
    if spectra.is_empty() {
        return Err(Error::InvalidArgument("no spectra to histogram".into()));
    }
    if bins.orientation_bins == 0 {
        return Err(Error::InvalidArgument("orientation_bins must be positive".into()));
    }
    let mut counts = vec![vec![0; bins.orientation_bins]; bins.max_frequency + 1];
    for s in spectra.iter().filter_map(FilterAnalysis::spectrum) {
        let (f, o) = bins.bin(s);
        counts[f][o] += 1;
    }
    Ok(PropertyHistogram { bins, counts })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDifference {
    pub input_filter: usize,
    pub output_filter: usize,
    /// `φ_y − φ_x`, wrapped to `[-π, π)`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDifferenceTable {
    pub bins: HistogramBins,
    /// Keyed by (frequency bin, orientation bin).
    pub rows: BTreeMap<(usize, usize), Vec<PhaseDifference>>,
}

impl PhaseDifferenceTable {
    pub fn all(&self) -> impl Iterator<Item = &PhaseDifference> {
        self.rows.values().flatten()
    }
}

/// Input- and output-filter analyses of a factor model, in pixel space.
pub fn model_spectra(
    model: &FactorModel,
    whitening: Option<&WhiteningTransform>,
) -> Result<(Vec<FilterAnalysis>, Vec<FilterAnalysis>)> {
    let fx = analyze_filters(&filters_as_patches(&model.wx, whitening)?)?;
    let fy = analyze_filters(&filters_as_patches(&model.wy, whitening)?)?;
    Ok((fx, fy))
}

pub fn phase_difference_table(
    model: &FactorModel,
    whitening: Option<&WhiteningTransform>,
) -> Result<PhaseDifferenceTable> {
    if !model.core.kind().is_symmetric() {
        return Err(Error::Unsupported(
            "phase differences need matched input/output filters".into(),
        ));
    }
    let (fx, fy) = model_spectra(model, whitening)?;
    let pixels = whitening.map_or(model.input_dim(), |w| w.pixels());
    let bins = HistogramBins::for_patch((pixels as f64).sqrt().round() as usize);
    let mut rows: BTreeMap<(usize, usize), Vec<PhaseDifference>> = BTreeMap::new();
    for t in model.core.triples() {
        let (Some(sx), Some(sy)) = (fx[t.input].spectrum(), fy[t.output].spectrum()) else {
            continue;
        };
        let bx = bins.bin(sx);
        if bx != bins.bin(sy) {
            continue;
        }
        rows.entry(bx).or_default().push(PhaseDifference {
            input_filter: t.input,
            output_filter: t.output,
            delta: wrap_angle(sy.phase - sx.phase),
        });
    }
    Ok(PhaseDifferenceTable { bins, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rng;
    use crate::model::CoreStructure;

    fn grating(n: usize, kx: f64, ky: f64, phase: f64) -> Matrix {
        Matrix::from_fn(n, n, |r, c| {
            (2.0 * PI * (kx * c as f64 + ky * r as f64) / n as f64 + phase).cos()
        })
    }

    fn spec(a: FilterAnalysis) -> FilterSpectrum {
        *a.spectrum().expect("non-degenerate")
    }

    #[test]
    fn pure_cosine() {
        let s = spec(analyze_filter(0, &grating(13, 3.0, 0.0, 0.0)).unwrap());
        assert!((s.frequency - 3.0).abs() < 1e-6);
        assert!(s.orientation.abs() < 1e-6);
        assert!(s.phase.abs() < 1e-6);
        let s = spec(analyze_filter(0, &grating(13, 3.0, 0.0, PI / 2.0)).unwrap());
        assert!((s.frequency - 3.0).abs() < 1e-6);
        assert!(s.orientation.abs() < 1e-6);
        assert!((s.phase - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn oblique_orientation_lands_in_half_plane() {
        let s = spec(analyze_filter(0, &grating(12, -2.0, 2.0, 0.3)).unwrap());
        assert!((s.orientation - 3.0 * PI / 4.0).abs() < 1e-9);
        assert!((s.frequency - 8f64.sqrt()).abs() < 1e-9);
        assert!((s.phase - 0.3).abs() < 1e-9);
    }

    #[test]
    fn zero_and_flat_noise_are_degenerate() {
        assert!(analyze_filter(0, &Matrix::zeros(5, 5)).unwrap().spectrum().is_none());
        let flat = Matrix::from_fn(6, 6, |_, _| 2.0);
        assert!(analyze_filter(0, &flat).unwrap().spectrum().is_none());
        assert!(analyze_filter(0, &Matrix::zeros(4, 5)).is_err());
    }

    #[test]
    fn negation_shifts_phase_by_pi() {
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let f = grating(11, rng.below(5) as f64 + 1.0, rng.below(5) as f64, rng.uniform(-PI, PI));
            let noisy = f.map(|v| v + 0.05 * rng.gaussian(0.0, 1.0));
            let a = spec(analyze_filter(0, &noisy).unwrap());
            let b = spec(analyze_filter(0, &noisy.map(|v| -v)).unwrap());
            assert_eq!((a.kx, a.ky), (b.kx, b.ky));
            assert!((wrap_angle(b.phase - a.phase).abs() - PI).abs() < 1e-6);
        }
    }

    #[test]
    fn circular_shift_moves_only_phase() {
        let n = 16;
        let (kx, ky) = (3.0, 1.0);
        let f = grating(n, kx, ky, 0.4);
        let a = spec(analyze_filter(0, &f).unwrap());
        for t in 1..4usize {
            // shift by t pixels along x
            let g = Matrix::from_fn(n, n, |r, c| f[(r, (c + n - t) % n)]);
            let b = spec(analyze_filter(0, &g).unwrap());
            assert_eq!((a.kx, a.ky), (b.kx, b.ky));
            let want = wrap_angle(a.phase - 2.0 * PI * kx * t as f64 / n as f64);
            assert!(wrap_angle(b.phase - want).abs() < 1e-6);
        }
    }

    #[test]
    fn gabor_parameters_are_recovered() {
        let mut rng = Rng::new(11);
        let n = 13;
        let c0 = (n as f64 - 1.0) / 2.0;
        for _ in 0..30 {
            let f = 1.5 + 3.0 * rng.unit();
            let theta = PI * rng.unit();
            let phi = rng.uniform(-PI, PI);
            let (fx, fy) = (f * theta.cos(), f * theta.sin());
            let sigma = 3.0;
            let g = Matrix::from_fn(n, n, |r, c| {
                let (u, v) = (c as f64 - c0, r as f64 - c0);
                let env = (-(u * u + v * v) / (2.0 * sigma * sigma)).exp();
                env * (2.0 * PI * (fx * u + fy * v) / n as f64 + phi).cos()
            });
            let s = spec(analyze_filter(0, &g).unwrap());
            let (ex, ey) = (s.kx as f64 - fx, s.ky as f64 - fy);
            let (ax, ay) = (s.kx as f64 + fx, s.ky as f64 + fy);
            // either the bin or its conjugate lies within one bin of the truth
            let near = ex.abs() <= 1.0 && ey.abs() <= 1.0;
            let near_conj = ax.abs() <= 1.0 && ay.abs() <= 1.0;
            assert!(near || near_conj, "f={f} θ={theta}: bin ({}, {})", s.kx, s.ky);
            if near {
                // symmetric envelope about the center: phase is φ − 2π k·p0/n at bin k
                let want = wrap_angle(phi - 2.0 * PI * (s.kx + s.ky) as f64 * c0 / n as f64);
                assert!(wrap_angle(s.phase - want).abs() < 0.2, "phase {} vs {want}", s.phase);
            }
        }
    }

    #[test]
    fn histogram_counts_match_a_tally() {
        let mut rng = Rng::new(5);
        let bins = HistogramBins::for_patch(13);
        let spectra: Vec<FilterAnalysis> = (0..200)
            .map(|i| {
                if i % 17 == 0 {
                    FilterAnalysis::Degenerate {
                        filter_index: i,
                        peak_magnitude: 0.0,
                    }
                } else {
                    FilterAnalysis::Spectrum(FilterSpectrum {
                        filter_index: i,
                        frequency: 1.0 + 5.0 * rng.unit(),
                        orientation: PI * rng.unit(),
                        phase: 0.0,
                        peak_magnitude: 1.0,
                        kx: 0,
                        ky: 0,
                    })
                }
            })
            .collect();
        let h = property_histograms(&spectra, bins).unwrap();
        let good: Vec<_> = spectra.iter().filter_map(|s| s.spectrum()).collect();
        assert_eq!(h.total(), good.len());
        for f in 0..=bins.max_frequency {
            for o in 0..bins.orientation_bins {
                let tally = good
                    .iter()
                    .filter(|s| {
                        (s.frequency.round() as usize).min(6) == f
                            && ((s.orientation * 8.0 / PI) as usize).min(7) == o
                    })
                    .count();
                assert_eq!(h.counts[f][o], tally);
            }
        }
        let one = property_histograms(&spectra[1..2], bins).unwrap();
        assert_eq!(one.total(), 1);
        assert_eq!(one.max_cell(), 1);
    }

    fn grating_model(n: usize, rng: &mut Rng) -> FactorModel {
        let core = CoreStructure::grouped(12, 3).unwrap();
        let mut m = FactorModel::zeros(core, n * n, n * n, 2);
        for f in 0..12 {
            let g = grating(n, rng.below(4) as f64 + 1.0, rng.below(3) as f64, rng.uniform(-PI, PI));
            m.wx.set_col(f, g.as_slice());
        }
        m
    }

    #[test]
    fn identical_filters_have_zero_phase_difference() {
        let mut rng = Rng::new(6);
        let mut m = grating_model(10, &mut rng);
        m.wy = m.wx.clone();
        let t = phase_difference_table(&m, None).unwrap();
        let diag: Vec<_> = t.all().filter(|d| d.input_filter == d.output_filter).collect();
        assert_eq!(diag.len(), 12);
        assert!(diag.iter().all(|d| d.delta == 0.0));
    }

    #[test]
    fn analytic_phase_advance_is_recovered() {
        let mut rng = Rng::new(7);
        let n = 10;
        let mut m = grating_model(n, &mut rng);
        // add broadband noise so the rotation acts on a generic filter
        for v in m.wx.as_mut_slice() {
            *v += 0.02 * rng.gaussian(0.0, 1.0);
        }
        for f in 0..12 {
            let g = Matrix::from_vec(n, n, m.wx.col(f)).unwrap();
            let r = phase_rotate(&g, PI / 4.0).unwrap();
            m.wy.set_col(f, r.as_slice());
        }
        let t = phase_difference_table(&m, None).unwrap();
        let diag: Vec<_> = t.all().filter(|d| d.input_filter == d.output_filter).collect();
        assert_eq!(diag.len(), 12);
        for d in diag {
            assert!((d.delta - PI / 4.0).abs() < 1e-6, "{}", d.delta);
        }
    }

    #[test]
    fn asymmetric_models_are_rejected() {
        let m = FactorModel::zeros(CoreStructure::asym_grouped(6, 3).unwrap(), 16, 16, 2);
        assert!(phase_difference_table(&m, None).is_err());
    }
}
