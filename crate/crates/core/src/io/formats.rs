//! Dataset, model, whitening and frame files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{decode, encode, BlockReader, BlockWriter};
use super::FormatError;
use crate::datagen::{Dataset, DatasetSpec, Split, TransformParams};
use crate::math::{Matrix, WhiteningTransform};
use crate::model::{CoreKind, CoreStructure, FactorModel, SquarePoolingModel, TrainConfig};
use crate::{Error, Result};

const DATASET: &[u8; 3] = b"RGD";
const MODEL: &[u8; 3] = b"RGM";
const WHITENING: &[u8; 3] = b"RGW";
const FRAMES: &[u8; 3] = b"RGF";

fn header_err(r: &BlockReader<'_>, message: impl Into<String>) -> FormatError {
    FormatError::Payload {
        offset: r.offset(),
        message: message.into(),
    }
}

fn matrix(r: &mut BlockReader<'_>, rows: usize, cols: usize) -> std::result::Result<Matrix, FormatError> {
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| header_err(r, "matrix size overflows"))?;
    let data = r.f64s(Some(n))?;
    Ok(Matrix::from_vec(rows, cols, data).expect("length checked"))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

// ---- datasets ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitHeader {
    pub name: String,
    pub len: usize,
    pub labeled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub spec: DatasetSpec,
    pub dim: usize,
    pub num_classes: Option<usize>,
    pub whitened: bool,
    pub splits: Vec<SplitHeader>,
}

/// Transform parameters are stored as `(tag, a, b)` triples:
/// tag 0 = none, 1 = shift `(dx, dy)`, 2 = angle `(θ, 0)`.
fn encode_params(params: &[Option<TransformParams>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(params.len() * 3);
    for p in params {
        match p {
            None => out.extend([0.0, 0.0, 0.0]),
            Some(TransformParams::Shift { dx, dy }) => out.extend([1.0, *dx, *dy]),
            Some(TransformParams::Angle(a)) => out.extend([2.0, *a, 0.0]),
        }
    }
    out
}

fn decode_params(r: &BlockReader<'_>, raw: &[f64]) -> std::result::Result<Vec<Option<TransformParams>>, FormatError> {
    raw.chunks_exact(3)
        .map(|c| match c[0] {
            t if t == 0.0 => Ok(None),
            t if t == 1.0 => Ok(Some(TransformParams::Shift { dx: c[1], dy: c[2] })),
            t if t == 2.0 => Ok(Some(TransformParams::Angle(c[1]))),
            t => Err(header_err(r, format!("unknown transform tag {t}"))),
        })
        .collect()
}

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let mut w = BlockWriter::default();
    let mut splits = Vec::new();
    for (name, s) in d.splits() {
        splits.push(SplitHeader {
            name: name.into(),
            len: s.len(),
            labeled: s.labels.is_some(),
        });
        w.f64s(s.x.as_slice()).f64s(s.y.as_slice());
        if let Some(l) = &s.labels {
            w.u16s(l);
        }
        w.f64s(&encode_params(&s.params));
    }
    let header = DatasetHeader {
        spec: d.spec.clone(),
        dim: d.dim,
        num_classes: d.num_classes,
        whitened: d.whitened,
        splits,
    };
    encode(DATASET, &header, w.finish())
}

pub fn decode_dataset(bytes: &[u8]) -> std::result::Result<Dataset, FormatError> {
    let (h, mut r): (DatasetHeader, _) = decode(DATASET, bytes)?;
    if h.splits.len() != 3 {
        return Err(header_err(&r, format!("{} splits, expected 3", h.splits.len())));
    }
    let mut out = Vec::with_capacity(3);
    for sh in &h.splits {
        let x = matrix(&mut r, sh.len, h.dim)?;
        let y = matrix(&mut r, sh.len, h.dim)?;
        let labels = if sh.labeled {
            let l = r.u16s(Some(sh.len))?;
            if let Some(c) = h.num_classes {
                if l.iter().any(|&v| v as usize >= c) {
                    return Err(header_err(&r, "label exceeds num_classes"));
                }
            }
            Some(l)
        } else {
            None
        };
        let raw = r.f64s(Some(sh.len * 3))?;
        let params = decode_params(&r, &raw)?;
        out.push(Split { x, y, labels, params });
    }
    r.finish()?;
    let test = out.pop().expect("3 splits");
    let valid = out.pop().expect("3 splits");
    let train = out.pop().expect("3 splits");
    Ok(Dataset {
        spec: h.spec,
        dim: h.dim,
        num_classes: h.num_classes,
        whitened: h.whitened,
        train,
        valid,
        test,
    })
}

pub fn write_dataset(path: impl AsRef<Path>, d: &Dataset) -> Result<()> {
    write_bytes(path.as_ref(), &encode_dataset(d))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Ok(decode_dataset(&read_bytes(path.as_ref())?)?)
}

// ---- models ----

#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Factor(FactorModel),
    SquarePooling(SquarePoolingModel),
}

impl AnyModel {
    pub fn infer_batch(&self, x: &Matrix, y: &Matrix) -> Result<Matrix> {
        match self {
            AnyModel::Factor(m) => m.infer_batch(x, y),
            AnyModel::SquarePooling(m) => m.infer_batch(x, y),
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            AnyModel::Factor(m) => m.hidden(),
            AnyModel::SquarePooling(m) => m.hidden(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            AnyModel::Factor(m) => m.input_dim(),
            AnyModel::SquarePooling(m) => m.image_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            AnyModel::Factor(m) => m.output_dim(),
            AnyModel::SquarePooling(m) => m.image_dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelShape {
    Factor {
        core: CoreKind,
        num_factors: usize,
        input_dim: usize,
        output_dim: usize,
        hidden: usize,
    },
    SquarePooling {
        image_dim: usize,
        filters: usize,
        hidden: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub shape: ModelShape,
    /// Tensor names in payload order.
    pub tensors: Vec<String>,
    pub train_config: Option<TrainConfig>,
    /// CRC32 of the compact JSON of `train_config`.
    pub train_config_digest: Option<u32>,
    pub library_version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub model: AnyModel,
    pub header: ModelHeader,
}

pub fn config_digest(cfg: &TrainConfig) -> u32 {
    crc32fast::hash(&serde_json::to_vec(cfg).expect("config serializes"))
}

pub fn encode_model(model: &AnyModel, train_config: Option<&TrainConfig>) -> Vec<u8> {
    use crate::model::Autoencoder;
    let (shape, tensors): (ModelShape, Vec<(&str, &[f64])>) = match model {
        AnyModel::Factor(m) => (
            ModelShape::Factor {
                core: m.core.kind().clone(),
                num_factors: m.core.num_factors(),
                input_dim: m.input_dim(),
                output_dim: m.output_dim(),
                hidden: m.hidden(),
            },
            m.tensors(),
        ),
        AnyModel::SquarePooling(m) => (
            ModelShape::SquarePooling {
                image_dim: m.image_dim,
                filters: m.filters(),
                hidden: m.hidden(),
            },
            m.tensors(),
        ),
    };
    let mut w = BlockWriter::default();
    for (_, t) in &tensors {
        w.f64s(t);
    }
    let header = ModelHeader {
        shape,
        tensors: tensors.iter().map(|(n, _)| n.to_string()).collect(),
        train_config: train_config.cloned(),
        train_config_digest: train_config.map(config_digest),
        library_version: crate::VERSION.into(),
    };
    encode(MODEL, &header, w.finish())
}

pub fn decode_model(bytes: &[u8]) -> std::result::Result<ModelFile, FormatError> {
    use crate::model::Autoencoder;
    let (h, mut r): (ModelHeader, _) = decode(MODEL, bytes)?;
    if let (Some(cfg), Some(d)) = (&h.train_config, h.train_config_digest) {
        if config_digest(cfg) != d {
            return Err(FormatError::Header {
                offset: 8,
                message: "train_config digest mismatch".into(),
            });
        }
    }
    let too_big = |dims: &[usize]| {
        dims.iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .is_none_or(|n| n > bytes.len())
    };
    let mut model = match &h.shape {
        ModelShape::Factor {
            core,
            num_factors,
            input_dim,
            output_dim,
            hidden,
        } => {
            if too_big(&[*num_factors, *input_dim + *output_dim + *hidden]) || too_big(&[*hidden]) {
                return Err(header_err(&r, "model dimensions exceed file size"));
            }
            let cs = CoreStructure::new(core.clone(), *num_factors).map_err(|e| FormatError::Header {
                offset: 8,
                message: e.to_string(),
            })?;
            if too_big(&[cs.num_products(), *hidden]) || *input_dim == 0 || *output_dim == 0 || *hidden == 0 {
                return Err(header_err(&r, "model dimensions exceed file size"));
            }
            AnyModel::Factor(FactorModel::zeros(cs, *input_dim, *output_dim, *hidden))
        }
        ModelShape::SquarePooling {
            image_dim,
            filters,
            hidden,
        } => {
            if too_big(&[2 * image_dim, *filters]) || too_big(&[*filters, *hidden]) {
                return Err(header_err(&r, "model dimensions exceed file size"));
            }
            AnyModel::SquarePooling(SquarePoolingModel::zeros(*image_dim, *filters, *hidden))
        }
    };
    let slots: Vec<(&'static str, &mut [f64])> = match &mut model {
        AnyModel::Factor(m) => m.tensors_mut(),
        AnyModel::SquarePooling(m) => m.tensors_mut(),
    };
    let names: Vec<&str> = slots.iter().map(|(n, _)| *n).collect();
    if names != h.tensors.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(header_err(&r, format!("tensor list {:?}, expected {names:?}", h.tensors)));
    }
    for (_, dst) in slots {
        let v = r.f64s(Some(dst.len()))?;
        dst.copy_from_slice(&v);
    }
    r.finish()?;
    Ok(ModelFile { model, header: h })
}

pub fn write_model(path: impl AsRef<Path>, model: &AnyModel, train_config: Option<&TrainConfig>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_model(model, train_config))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    Ok(decode_model(&read_bytes(path.as_ref())?)?)
}

// ---- whitening ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct WhiteningHeader {
    pixels: usize,
    components: usize,
}

pub fn encode_whitening(t: &WhiteningTransform) -> Vec<u8> {
    let mut w = BlockWriter::default();
    w.f64s(&t.mean)
        .f64s(t.forward.as_slice())
        .f64s(t.inverse.as_slice())
        .f64s(&t.eigenvalues)
        .f64s(&[t.retained_variance]);
    let header = WhiteningHeader {
        pixels: t.pixels(),
        components: t.components(),
    };
    encode(WHITENING, &header, w.finish())
}

pub fn decode_whitening(bytes: &[u8]) -> std::result::Result<WhiteningTransform, FormatError> {
    let (h, mut r): (WhiteningHeader, _) = decode(WHITENING, bytes)?;
    let mean = r.f64s(Some(h.pixels))?;
    let forward = matrix(&mut r, h.components, h.pixels)?;
    let inverse = matrix(&mut r, h.pixels, h.components)?;
    let eigenvalues = r.f64s(Some(h.components))?;
    let rv = r.f64s(Some(1))?;
    r.finish()?;
    Ok(WhiteningTransform {
        mean,
        forward,
        inverse,
        eigenvalues,
        retained_variance: rv[0],
    })
}

pub fn write_whitening(path: impl AsRef<Path>, t: &WhiteningTransform) -> Result<()> {
    write_bytes(path.as_ref(), &encode_whitening(t))
}

pub fn read_whitening(path: impl AsRef<Path>) -> Result<WhiteningTransform> {
    Ok(decode_whitening(&read_bytes(path.as_ref())?)?)
}

// ---- frame sequences ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FramesHeader {
    frames: usize,
    rows: usize,
    cols: usize,
}

pub fn encode_frames(frames: &[Matrix]) -> Result<Vec<u8>> {
    let (rows, cols) = frames.first().map_or((0, 0), Matrix::shape);
    if frames.iter().any(|f| f.shape() != (rows, cols)) {
        return Err(Error::Dimension("frames differ in shape".into()));
    }
    let mut w = BlockWriter::default();
    for f in frames {
        w.f64s(f.as_slice());
    }
    let header = FramesHeader {
        frames: frames.len(),
        rows,
        cols,
    };
    Ok(encode(FRAMES, &header, w.finish()))
}

pub fn decode_frames(bytes: &[u8]) -> std::result::Result<Vec<Matrix>, FormatError> {
    let (h, mut r): (FramesHeader, _) = decode(FRAMES, bytes)?;
    if h.frames > bytes.len() {
        return Err(header_err(&r, "frame count exceeds file size"));
    }
    let frames = (0..h.frames)
        .map(|_| matrix(&mut r, h.rows, h.cols))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    r.finish()?;
    Ok(frames)
}

pub fn write_frames(path: impl AsRef<Path>, frames: &[Matrix]) -> Result<()> {
    write_bytes(path.as_ref(), &encode_frames(frames)?)
}

pub fn read_frames(path: impl AsRef<Path>) -> Result<Vec<Matrix>> {
    Ok(decode_frames(&read_bytes(path.as_ref())?)?)
}
