use serde::{Deserialize, Serialize};

use super::synthetic::standardize;
use super::{PatchPair, Split};
use crate::math::{dft2_rect, idft2_real, signed_frequency, Matrix, Rng};
use crate::{Error, Result};

/// Pairs cut from consecutive frames, plus how many were asked for.
#[derive(Clone, Debug)]
pub struct FramePairs {
    pub split: Split,
    pub requested: usize,
    pub produced: usize,
}

impl FramePairs {
    pub fn len(&self) -> usize {
        self.produced
    }

    pub fn is_empty(&self) -> bool {
        self.produced == 0
    }
}

/// Cuts `(frame t, frame t+1)` patch pairs at a shared location.
///
/// Locations and frame indices are drawn uniformly per pair. When `count` is
/// at least the number of distinct (frame, location) positions, every position
/// is emitted once instead and `produced` reports the smaller number.
pub fn ingest_frame_pairs(
    frames: &[Matrix],
    patch_size: usize,
    count: usize,
    rng: &mut Rng,
) -> Result<FramePairs> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 frames, got {}",
            frames.len()
        )));
    }
    let (rows, cols) = frames[0].shape();
    for (i, f) in frames.iter().enumerate() {
        if f.shape() != (rows, cols) {
            return Err(Error::Dimension(format!(
                "frame {i} is {}x{}, frame 0 is {rows}x{cols}",
                f.rows(),
                f.cols()
            )));
        }
    }
    if rows < patch_size || cols < patch_size || patch_size == 0 {
        return Err(Error::InvalidArgument(format!(
            "frames of {rows}x{cols} are smaller than the {patch_size}px patch"
        )));
    }
    let pos_r = rows - patch_size + 1;
    let pos_c = cols - patch_size + 1;
    let available = (frames.len() - 1) * pos_r * pos_c;

    let cut = |t: usize, r: usize, c: usize| PatchPair {
        x: super::crop(&frames[t], r, c, patch_size).into_vec(),
        y: super::crop(&frames[t + 1], r, c, patch_size).into_vec(),
        label: None,
        params: None,
    };
    let pairs: Vec<PatchPair> = if count >= available {
        let mut all = Vec::with_capacity(available);
        for t in 0..frames.len() - 1 {
            for r in 0..pos_r {
                for c in 0..pos_c {
                    all.push(cut(t, r, c));
                }
            }
        }
        all
    } else {
        (0..count)
            .map(|_| {
                let t = rng.below(frames.len() - 1);
                let r = rng.below(pos_r);
                let c = rng.below(pos_c);
                cut(t, r, c)
            })
            .collect()
    };
    let produced = pairs.len();
    Ok(FramePairs {
        split: Split::from_pairs(pairs)?,
        requested: count,
        produced,
    })
}

/// Settings for synthetic natural-style video: a periodic 1/f noise canvas
/// viewed through a window that drifts with a slowly varying velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaturalVideoParams {
    pub rows: usize,
    pub cols: usize,
    pub frames: usize,
    /// Side of the periodic canvas the window moves over.
    #[serde(default = "default_canvas")]
    pub canvas: usize,
    /// Amplitude spectrum falls off as 1/f^exponent.
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    /// Upper bound on |velocity| per axis, in pixels per frame.
    #[serde(default = "default_max_speed")]
    pub max_speed: f64,
    /// Standard deviation of the per-frame velocity change.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_canvas() -> usize {
    96
}
fn default_exponent() -> f64 {
    1.0
}
fn default_max_speed() -> f64 {
    2.0
}
fn default_jitter() -> f64 {
    0.7
}

impl NaturalVideoParams {
    pub fn new(rows: usize, cols: usize, frames: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            frames,
            canvas: default_canvas(),
            exponent: default_exponent(),
            max_speed: default_max_speed(),
            jitter: default_jitter(),
            seed,
        }
    }
}

fn pink_canvas(size: usize, exponent: f64, rng: &mut Rng) -> Matrix {
    let noise = Matrix::from_fn(size, size, |_, _| rng.gaussian(0.0, 1.0));
    let mut spec = dft2_rect(&noise);
    for ky in 0..size {
        for kx in 0..size {
            let fy = signed_frequency(ky, size) as f64;
            let fx = signed_frequency(kx, size) as f64;
            let f = (fx * fx + fy * fy).sqrt();
            let gain = if f == 0.0 { 0.0 } else { f.powf(-exponent) };
            *spec.at_mut(ky, kx) *= gain;
        }
    }
    let mut img = idft2_real(&spec);
    standardize(img.as_mut_slice());
    img
}

fn periodic_bilinear(img: &Matrix, row: f64, col: f64) -> f64 {
    let n_r = img.rows() as f64;
    let n_c = img.cols() as f64;
    let row = row.rem_euclid(n_r);
    let col = col.rem_euclid(n_c);
    let r0 = row.floor();
    let c0 = col.floor();
    let (fr, fc) = (row - r0, col - c0);
    let r0 = r0 as usize % img.rows();
    let c0 = c0 as usize % img.cols();
    let r1 = (r0 + 1) % img.rows();
    let c1 = (c0 + 1) % img.cols();
    let top = img[(r0, c0)] * (1.0 - fc) + img[(r0, c1)] * fc;
    let bottom = img[(r1, c0)] * (1.0 - fc) + img[(r1, c1)] * fc;
    top * (1.0 - fr) + bottom * fr
}

/// Generates drifting 1/f noise frames.
pub fn synth_natural_frames(params: &NaturalVideoParams) -> Result<Vec<Matrix>> {
    if params.rows == 0 || params.cols == 0 || params.frames < 2 || params.canvas < 4 {
        return Err(Error::InvalidArgument(
            "natural video needs positive frame size, >= 2 frames and canvas >= 4".into(),
        ));
    }
    let mut rng = Rng::new(params.seed);
    let canvas = pink_canvas(params.canvas, params.exponent, &mut rng);
    let mut pos = (
        rng.uniform(0.0, params.canvas as f64),
        rng.uniform(0.0, params.canvas as f64),
    );
    let mut vel = (
        rng.uniform(-params.max_speed, params.max_speed),
        rng.uniform(-params.max_speed, params.max_speed),
    );
    let mut frames = Vec::with_capacity(params.frames);
    for _ in 0..params.frames {
        frames.push(Matrix::from_fn(params.rows, params.cols, |r, c| {
            periodic_bilinear(&canvas, pos.0 + r as f64, pos.1 + c as f64)
        }));
        vel.0 = (vel.0 + rng.gaussian(0.0, params.jitter)).clamp(-params.max_speed, params.max_speed);
        vel.1 = (vel.1 + rng.gaussian(0.0, params.jitter)).clamp(-params.max_speed, params.max_speed);
        pos.0 += vel.0;
        pos.1 += vel.1;
    }
    Ok(frames)
}
