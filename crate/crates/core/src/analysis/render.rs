//! Binary PGM/PPM rendering of filters and property maps.

use std::f64::consts::PI;
use std::path::Path;

use super::spectrum::FilterAnalysis;
use crate::math::Matrix;
use crate::{Error, Result};

/// 8-bit raster, 1 (gray) or 3 (RGB) channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Image {
    fn new(width: usize, height: usize, channels: usize, fill: u8) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![fill; width * height * channels],
        }
    }

    fn put(&mut self, row: usize, col: usize, px: &[u8]) {
        let i = (row * self.width + col) * self.channels;
        self.data[i..i + self.channels].copy_from_slice(px);
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[u8] {
        let i = (row * self.width + col) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// P5 for gray, P6 for color.
    pub fn to_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_raw(path.as_ref(), &self.to_pnm())
    }
}

/// HSV with `s = v = 1` to RGB; `hue` in turns.
pub fn hue_to_rgb(hue: f64) -> [u8; 3] {
    let h = hue.rem_euclid(1.0) * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as usize {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let q = |v: f64| (v * 255.0).round() as u8;
    [q(r), q(g), q(b)]
}

const BORDER: u8 = 0;

/// Tiles on a `grid_rows × grid_cols` layout with one-pixel borders; each
/// tile is scaled by its own max |value| so that zero maps to mid-gray.
fn tile(filters: &[Matrix], grid_rows: usize, grid_cols: usize) -> Result<Image> {
    let side = filters.first().map_or(0, Matrix::rows);
    if side == 0 || filters.iter().any(|f| f.shape() != (side, side)) {
        return Err(Error::Dimension("filters must be nonempty squares of one size".into()));
    }
    if filters.len() > grid_rows * grid_cols {
        return Err(Error::Dimension(format!(
            "{} filters do not fit a {grid_rows}x{grid_cols} layout",
            filters.len()
        )));
    }
    let step = side + 1;
    let mut img = Image::new(grid_cols * step + 1, grid_rows * step + 1, 1, BORDER);
    for (i, f) in filters.iter().enumerate() {
        let (gr, gc) = (i / grid_cols, i % grid_cols);
        let scale = f.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..side {
            for c in 0..side {
                let v = if scale > 0.0 { f[(r, c)] / scale } else { 0.0 };
                let g = (127.5 + 127.5 * v).round().clamp(0.0, 255.0) as u8;
                img.put(gr * step + 1 + r, gc * step + 1 + c, &[g]);
            }
        }
    }
    Ok(img)
}

/// Near-square mosaic in filter order.
pub fn render_mosaic(filters: &[Matrix]) -> Result<Image> {
    let cols = (filters.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = filters.len().div_ceil(cols).max(1);
    tile(filters, rows, cols)
}

/// Filter `i` drawn at grid cell `(i / grid_cols, i % grid_cols)`.
pub fn render_topographic_map(filters: &[Matrix], grid_rows: usize, grid_cols: usize) -> Result<Image> {
    if filters.len() != grid_rows * grid_cols {
        return Err(Error::Dimension(format!(
            "{} filters for a {grid_rows}x{grid_cols} map",
            filters.len()
        )));
    }
    tile(filters, grid_rows, grid_cols)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Property {
    /// Gray level, black = 0 and white = `max`.
    Frequency { max: f64 },
    /// Hue over `[0, π)`.
    Orientation,
    /// Hue over `[-π, π)`.
    Phase,
}

/// One `cell × cell` block per filter; degenerate filters are black.
pub fn render_property_map(
    spectra: &[FilterAnalysis],
    property: Property,
    grid_rows: usize,
    grid_cols: usize,
    cell: usize,
) -> Result<Image> {
    if spectra.len() != grid_rows * grid_cols || cell == 0 {
        return Err(Error::Dimension(format!(
            "{} spectra for a {grid_rows}x{grid_cols} map with cell {cell}",
            spectra.len()
        )));
    }
    let channels = if matches!(property, Property::Frequency { .. }) { 1 } else { 3 };
    let mut img = Image::new(grid_cols * cell, grid_rows * cell, channels, 0);
    for (i, a) in spectra.iter().enumerate() {
        let Some(s) = a.spectrum() else { continue };
        let px: Vec<u8> = match property {
            Property::Frequency { max } => {
                let g = if max > 0.0 { s.frequency / max } else { 0.0 };
                vec![(g.clamp(0.0, 1.0) * 255.0).round() as u8]
            }
            Property::Orientation => hue_to_rgb(s.orientation / PI).to_vec(),
            Property::Phase => hue_to_rgb((s.phase + PI) / (2.0 * PI)).to_vec(),
        };
        let (gr, gc) = (i / grid_cols, i % grid_cols);
        for r in 0..cell {
            for c in 0..cell {
                img.put(gr * cell + r, gc * cell + c, &px);
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::FilterSpectrum;

    fn spec(i: usize, orientation: f64) -> FilterAnalysis {
        FilterAnalysis::Spectrum(FilterSpectrum {
            filter_index: i,
            frequency: 2.0,
            orientation,
            phase: 0.5,
            peak_magnitude: 1.0,
            kx: 2,
            ky: 0,
        })
    }

    #[test]
    fn single_tile_has_border() {
        let f = Matrix::from_fn(5, 5, |r, c| r as f64 - c as f64);
        let img = render_mosaic(&[f]).unwrap();
        assert_eq!((img.width, img.height), (7, 7));
        for k in 0..7 {
            assert_eq!(img.pixel(0, k), &[BORDER]);
            assert_eq!(img.pixel(6, k), &[BORDER]);
        }
        // diagonal of r - c is zero: mid-gray
        assert_eq!(img.pixel(3, 3), &[128]);
        assert_eq!(img.to_pnm()[..11], *b"P5\n7 7\n255\n");
    }

    #[test]
    fn equal_orientations_give_uniform_hue() {
        let spectra: Vec<_> = (0..6).map(|i| spec(i, 1.0)).collect();
        let img = render_property_map(&spectra, Property::Orientation, 2, 3, 4).unwrap();
        let first = img.pixel(0, 0).to_vec();
        for r in 0..img.height {
            for c in 0..img.width {
                assert_eq!(img.pixel(r, c), &first[..]);
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let fs: Vec<Matrix> = (0..4).map(|i| Matrix::from_fn(3, 3, |r, c| (r * 3 + c + i) as f64)).collect();
        assert_eq!(render_topographic_map(&fs, 2, 2).unwrap(), render_topographic_map(&fs, 2, 2).unwrap());
        assert!(render_topographic_map(&fs, 3, 2).is_err());
    }

    #[test]
    fn hue_wheel_primaries() {
        assert_eq!(hue_to_rgb(0.0), [255, 0, 0]);
        assert_eq!(hue_to_rgb(1.0 / 3.0), [0, 255, 0]);
        assert_eq!(hue_to_rgb(2.0 / 3.0), [0, 0, 255]);
        assert_eq!(hue_to_rgb(1.0), [255, 0, 0]);
    }
}
