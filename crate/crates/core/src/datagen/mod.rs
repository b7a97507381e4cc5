//! Labeled image-pair datasets.
//!
//! Synthetic tasks (translations and rotations of random-dot images) are
//! generated per example from independent random substreams keyed by split
//! and index, so a dataset is a pure function of its [`DatasetSpec`] and the
//! three splits never share randomness. Natural-frame pairs are ingested from
//! image sequences and PCA-whitened.

mod frames;
mod synthetic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::math::{Matrix, Rng, WhiteningTransform};
use crate::{Error, Result};

pub use frames::{ingest_frame_pairs, synth_natural_frames, FramePairs, NaturalVideoParams};
pub use synthetic::{
    bilinear, crop, gen_random_dot_image, quadrant_label, random_dots, rotated_pair,
    rotation_label, rotation_source_size, scale_angle, standardize, translated_pair,
    translation_source_size,
};

/// Shifts closer than this to an axis are redrawn so quadrant labels are unambiguous.
pub const MIN_AXIS_DISTANCE: f64 = 0.25;

/// Raw transformation behind a pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TransformParams {
    Shift { dx: f64, dy: f64 },
    Angle(f64),
}

/// One input/output pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub label: Option<u16>,
    pub params: Option<TransformParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrameSource {
    /// Frame container file (see [`crate::io::read_frames`]).
    File { path: String },
    /// Directory of binary PGM frames, read in file-name order.
    PgmDir { path: String },
    /// Drifting 1/f noise, see [`synth_natural_frames`].
    Synthetic(NaturalVideoParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Translation {
        #[serde(default = "default_max_shift")]
        max_shift: f64,
        #[serde(default = "default_density")]
        density: f64,
    },
    Rotation {
        #[serde(default = "default_max_angle_deg")]
        max_angle_deg: f64,
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_density")]
        density: f64,
        #[serde(default = "default_rotation_classes")]
        num_classes: usize,
    },
    Natural {
        source: FrameSource,
        #[serde(default = "default_retain")]
        retain: f64,
    },
}

fn default_max_shift() -> f64 {
    3.0
}
fn default_density() -> f64 {
    0.1
}
fn default_max_angle_deg() -> f64 {
    36.0
}
fn default_kappa() -> f64 {
    1.0
}
fn default_rotation_classes() -> usize {
    10
}
fn default_retain() -> f64 {
    0.95
}

impl TaskSpec {
    pub fn translation() -> Self {
        TaskSpec::Translation {
            max_shift: default_max_shift(),
            density: default_density(),
        }
    }

    pub fn rotation() -> Self {
        TaskSpec::Rotation {
            max_angle_deg: default_max_angle_deg(),
            kappa: default_kappa(),
            density: default_density(),
            num_classes: default_rotation_classes(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Translation { .. } => "translation",
            TaskSpec::Rotation { .. } => "rotation",
            TaskSpec::Natural { .. } => "natural",
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self {
            TaskSpec::Translation { .. } => Some(4),
            TaskSpec::Rotation { num_classes, .. } => Some(*num_classes),
            TaskSpec::Natural { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.valid + self.test
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub task: TaskSpec,
    pub patch_size: usize,
    pub counts: SplitCounts,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let p = self.patch_size;
        if p < 2 {
            return Err(Error::InvalidArgument(format!("patch_size {p} < 2")));
        }
        if self.counts.train == 0 || self.counts.valid == 0 || self.counts.test == 0 {
            return Err(Error::InvalidArgument("split counts must be positive".into()));
        }
        match &self.task {
            TaskSpec::Translation { max_shift, density } => {
                if !(*max_shift >= 0.0) || (p as f64) < 2.0 * max_shift + 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "patch_size {p} too small for shifts up to {max_shift}"
                    )));
                }
                if *max_shift < MIN_AXIS_DISTANCE {
                    return Err(Error::InvalidArgument(format!(
                        "max_shift must be at least {MIN_AXIS_DISTANCE} for quadrant labels"
                    )));
                }
                check_density(*density)
            }
            TaskSpec::Rotation {
                max_angle_deg,
                kappa,
                density,
                num_classes,
            } => {
                if !(*max_angle_deg > 0.0 && *max_angle_deg <= 180.0) {
                    return Err(Error::InvalidArgument(format!(
                        "max_angle_deg {max_angle_deg} outside (0, 180]"
                    )));
                }
                if !(*kappa >= 0.0) {
                    return Err(Error::InvalidArgument(format!("kappa {kappa} < 0")));
                }
                if *num_classes < 2 || *num_classes > u16::MAX as usize {
                    return Err(Error::InvalidArgument(format!(
                        "num_classes {num_classes} out of range"
                    )));
                }
                check_density(*density)
            }
            TaskSpec::Natural { retain, .. } => {
                if !(*retain > 0.0 && *retain <= 1.0) {
                    return Err(Error::InvalidArgument(format!("retain {retain} outside (0, 1]")));
                }
                Ok(())
            }
        }
    }
}

fn check_density(d: f64) -> Result<()> {
    if d > 0.0 && d < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("density {d} outside (0, 1)")))
    }
}

/// One split stored as row matrices (one example per row).
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub x: Matrix,
    pub y: Matrix,
    pub labels: Option<Vec<u16>>,
    pub params: Vec<Option<TransformParams>>,
}

impl Split {
    pub fn from_pairs(pairs: Vec<PatchPair>) -> Result<Self> {
        let dim = pairs.first().map_or(0, |p| p.x.len());
        let has_labels = pairs.first().is_some_and(|p| p.label.is_some());
        let mut xs = Vec::with_capacity(pairs.len() * dim);
        let mut ys = Vec::with_capacity(pairs.len() * dim);
        let mut labels = Vec::new();
        let mut params = Vec::with_capacity(pairs.len());
        for (i, p) in pairs.into_iter().enumerate() {
            if p.x.len() != dim || p.y.len() != dim {
                return Err(Error::Dimension(format!("pair {i} has inconsistent length")));
            }
            if p.label.is_some() != has_labels {
                return Err(Error::InvalidArgument(format!(
                    "pair {i}: labels must be present on all pairs or none"
                )));
            }
            xs.extend(p.x);
            ys.extend(p.y);
            if let Some(l) = p.label {
                labels.push(l);
            }
            params.push(p.params);
        }
        let n = params.len();
        Ok(Split {
            x: Matrix::from_vec(n, dim, xs)?,
            y: Matrix::from_vec(n, dim, ys)?,
            labels: has_labels.then_some(labels),
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn pair(&self, i: usize) -> PatchPair {
        PatchPair {
            x: self.x.row(i).to_vec(),
            y: self.y.row(i).to_vec(),
            label: self.labels.as_ref().map(|l| l[i]),
            params: self.params[i],
        }
    }

    /// First `n` examples.
    pub fn head(&self, n: usize) -> Split {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }

    pub fn subset(&self, idx: &[usize]) -> Split {
        Split {
            x: self.x.select_rows(idx),
            y: self.y.select_rows(idx),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            params: idx.iter().map(|&i| self.params[i]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    /// Length of each example vector (patch_size² unless whitened).
    pub dim: usize,
    pub num_classes: Option<usize>,
    pub whitened: bool,
    pub train: Split,
    pub valid: Split,
    pub test: Split,
}

impl Dataset {
    pub fn splits(&self) -> [(&'static str, &Split); 3] {
        [
            ("train", &self.train),
            ("valid", &self.valid),
            ("test", &self.test),
        ]
    }
}

const TAG_TRAIN: u16 = 1;
const TAG_VALID: u16 = 2;
const TAG_TEST: u16 = 3;

/// Generates a synthetic (translation or rotation) dataset.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let base = Rng::new(spec.seed);
    let make = |tag: u16, n: usize| -> Result<Split> {
        let pairs: Result<Vec<PatchPair>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = base.substream(tag, i as u64);
                match &spec.task {
                    TaskSpec::Translation { .. } => gen_translation_pair(spec, &mut rng),
                    TaskSpec::Rotation { .. } => gen_rotation_pair(spec, &mut rng),
                    TaskSpec::Natural { .. } => Err(Error::InvalidArgument(
                        "natural datasets are built with ingest_frame_pairs".into(),
                    )),
                }
            })
            .collect();
        Split::from_pairs(pairs?)
    };
    Ok(Dataset {
        spec: spec.clone(),
        dim: spec.patch_size * spec.patch_size,
        num_classes: spec.task.num_classes(),
        whitened: false,
        train: make(TAG_TRAIN, spec.counts.train)?,
        valid: make(TAG_VALID, spec.counts.valid)?,
        test: make(TAG_TEST, spec.counts.test)?,
    })
}

/// One translation pair from `rng`. The source image is standardized once, so
/// `x` and `y` share the same affine pixel scaling.
pub fn gen_translation_pair(spec: &DatasetSpec, rng: &mut Rng) -> Result<PatchPair> {
    let TaskSpec::Translation { max_shift, density } = spec.task else {
        return Err(Error::InvalidArgument("not a translation task".into()));
    };
    let size = translation_source_size(spec.patch_size, max_shift);
    let source = gen_random_dot_image(size, density, rng);
    let (dx, dy) = loop {
        let dx = rng.uniform(-max_shift, max_shift);
        let dy = rng.uniform(-max_shift, max_shift);
        if dx.abs() >= MIN_AXIS_DISTANCE && dy.abs() >= MIN_AXIS_DISTANCE {
            break (dx, dy);
        }
    };
    let (x, y) = translated_pair(&source, spec.patch_size, dx, dy);
    Ok(PatchPair {
        x: x.into_vec(),
        y: y.into_vec(),
        label: Some(quadrant_label(dx, dy)),
        params: Some(TransformParams::Shift { dx, dy }),
    })
}

/// One rotation pair from `rng`: a von Mises angle on `[-π, π]` scaled to the
/// configured maximum.
pub fn gen_rotation_pair(spec: &DatasetSpec, rng: &mut Rng) -> Result<PatchPair> {
    let TaskSpec::Rotation {
        max_angle_deg,
        kappa,
        density,
        num_classes,
    } = spec.task
    else {
        return Err(Error::InvalidArgument("not a rotation task".into()));
    };
    let max_angle = max_angle_deg.to_radians();
    let size = rotation_source_size(spec.patch_size);
    let source = gen_random_dot_image(size, density, rng);
    let theta = scale_angle(rng.von_mises(kappa)?, max_angle);
    let (x, y) = rotated_pair(&source, spec.patch_size, theta);
    Ok(PatchPair {
        x: x.into_vec(),
        y: y.into_vec(),
        label: Some(rotation_label(theta, max_angle, num_classes)),
        params: Some(TransformParams::Angle(theta)),
    })
}

/// Builds a whitened natural-frame dataset; splits are filled in order from
/// the sampled pairs, shrinking proportionally when fewer pairs exist.
pub fn build_natural_dataset(spec: &DatasetSpec, frames: &[Matrix]) -> Result<(Dataset, WhiteningTransform, FramePairs)> {
    spec.validate()?;
    let TaskSpec::Natural { retain, .. } = spec.task else {
        return Err(Error::InvalidArgument("not a natural task".into()));
    };
    let mut rng = Rng::new(spec.seed);
    let pairs = ingest_frame_pairs(frames, spec.patch_size, spec.counts.total(), &mut rng)?;
    let produced = pairs.len();
    let scale = produced as f64 / spec.counts.total() as f64;
    let n_train = ((spec.counts.train as f64 * scale).floor() as usize).max(1);
    let n_valid = ((spec.counts.valid as f64 * scale).floor() as usize).max(1);
    if n_train + n_valid >= produced {
        return Err(Error::InvalidArgument(format!(
            "only {produced} frame pairs available"
        )));
    }
    let train_idx: Vec<usize> = (0..n_train).collect();
    let valid_idx: Vec<usize> = (n_train..n_train + n_valid).collect();
    let test_end = (n_train + n_valid + spec.counts.test).min(produced);
    let test_idx: Vec<usize> = (n_train + n_valid..test_end).collect();

    let raw_train = pairs.split.subset(&train_idx);
    let whitening = crate::math::fit_whitening(&raw_train.x, retain)?;
    let whiten = |s: Split| Split {
        x: whitening.whiten_rows(&s.x),
        y: whitening.whiten_rows(&s.y),
        labels: None,
        params: s.params,
    };
    let dataset = Dataset {
        spec: spec.clone(),
        dim: whitening.components(),
        num_classes: None,
        whitened: true,
        train: whiten(raw_train),
        valid: whiten(pairs.split.subset(&valid_idx)),
        test: whiten(pairs.split.subset(&test_idx)),
    };
    Ok((dataset, whitening, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(task: TaskSpec, n: usize, seed: u64) -> DatasetSpec {
        DatasetSpec {
            task,
            patch_size: 13,
            counts: SplitCounts {
                train: n,
                valid: n,
                test: n,
            },
            seed,
        }
    }

    #[test]
    fn generation_is_reproducible_and_splits_differ() {
        let s = spec(TaskSpec::translation(), 20, 3);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train.x, a.valid.x);
        assert_ne!(a.valid.x, a.test.x);
        let c = generate(&spec(TaskSpec::translation(), 20, 4)).unwrap();
        assert_ne!(a.train.x, c.train.x);
    }

    #[test]
    fn translation_labels_follow_shift_signs() {
        let d = generate(&spec(TaskSpec::translation(), 200, 1)).unwrap();
        let labels = d.train.labels.as_ref().unwrap();
        for (i, p) in d.train.params.iter().enumerate() {
            let Some(TransformParams::Shift { dx, dy }) = *p else {
                panic!("missing params")
            };
            assert!(dx.abs() >= MIN_AXIS_DISTANCE && dy.abs() >= MIN_AXIS_DISTANCE);
            assert!(dx.abs() <= 3.0 && dy.abs() <= 3.0);
            assert_eq!(labels[i], quadrant_label(dx, dy));
        }
        assert_eq!(d.dim, 169);
        assert_eq!(d.num_classes, Some(4));
    }

    #[test]
    fn rotation_labels_are_in_range() {
        let d = generate(&spec(TaskSpec::rotation(), 300, 2)).unwrap();
        let labels = d.train.labels.as_ref().unwrap();
        assert!(labels.iter().all(|&l| l < 10));
        for (i, p) in d.train.params.iter().enumerate() {
            let Some(TransformParams::Angle(t)) = *p else {
                panic!("missing params")
            };
            assert!(t.abs() <= 36f64.to_radians() + 1e-12);
            assert_eq!(labels[i], rotation_label(t, 36f64.to_radians(), 10));
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(TaskSpec::translation(), 5, 0);
        s.patch_size = 6;
        assert!(s.validate().is_err());
        s.patch_size = 7;
        assert!(s.validate().is_ok());
        s.counts.valid = 0;
        assert!(s.validate().is_err());
        let mut r = spec(TaskSpec::rotation(), 5, 0);
        if let TaskSpec::Rotation { kappa, .. } = &mut r.task {
            *kappa = -1.0;
        }
        assert!(r.validate().is_err());
    }

    #[test]
    fn split_pair_round_trip() {
        let d = generate(&spec(TaskSpec::rotation(), 4, 9)).unwrap();
        let pairs: Vec<PatchPair> = (0..4).map(|i| d.test.pair(i)).collect();
        assert_eq!(Split::from_pairs(pairs).unwrap(), d.test);
    }
}
