//! C ABI over the `groupgate` library.
//!
//! Models and datasets are opaque heap handles created by `gg_*_load` (or
//! `gg_dataset_generate`) and released with the matching `gg_*_free`.
//! Every fallible call returns a [`GgStatus`]; on failure the message is
//! available from [`gg_last_error_message`] on the same thread until the
//! next failing call.
//!
//! Buffers are caller-owned, row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use groupgate::datagen::{generate, Dataset, DatasetSpec, Split};
use groupgate::io::{read_dataset, read_model, write_dataset, write_model, AnyModel};
use groupgate::math::Matrix;
use groupgate::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GgStatus {
    Ok = 0,
    NullPointer = 1,
    Io = 2,
    Format = 3,
    Dimension = 4,
    InvalidArgument = 5,
    Unsupported = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GgSplit {
    Train = 0,
    Valid = 1,
    Test = 2,
}

/// Opaque trained model.
pub struct GgModel {
    inner: AnyModel,
}

/// Opaque dataset.
pub struct GgDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> GgStatus {
    match e {
        Error::Dimension(_) => GgStatus::Dimension,
        Error::InvalidArgument(_) | Error::Config(_) | Error::Json(_) => GgStatus::InvalidArgument,
        Error::Unsupported(_) => GgStatus::Unsupported,
        Error::Format(_) => GgStatus::Format,
        Error::Io { .. } => GgStatus::Io,
        Error::Stage { source, .. } => status_of(source),
        _ => GgStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GgStatus, String)>) -> GgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GgStatus::Panic
        }
    }
}

fn lib<T>(r: groupgate::Result<T>) -> Result<T, (GgStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GgStatus, String) {
    (GgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, (GgStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (GgStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gg_version() -> *const c_char {
    static V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gg_model_load(path: *const c_char, out: *mut *mut GgModel) -> GgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = path_arg(path)?;
        let m = lib(read_model(p))?.model;
        *out = Box::into_raw(Box::new(GgModel { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gg_model_save(model: *const GgModel, path: *const c_char) -> GgStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let p = path_arg(path)?;
        lib(write_model(p, &m.inner, None))
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gg_model_free(model: *mut GgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gg_model_dims(
    model: *const GgModel,
    input_dim: *mut usize,
    output_dim: *mut usize,
    hidden: *mut usize,
) -> GgStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        if !input_dim.is_null() {
            *input_dim = m.input_dim();
        }
        if !output_dim.is_null() {
            *output_dim = m.output_dim();
        }
        if !hidden.is_null() {
            *hidden = m.hidden();
        }
        Ok(())
    })
}

/// Mapping-unit probabilities for `n` pairs: `x` is `n × input_dim`, `y` is
/// `n × output_dim`, `out` receives `n × hidden`.
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn gg_model_infer(
    model: *const GgModel,
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> GgStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        if x.is_null() || y.is_null() || out.is_null() {
            return Err(null("buffer"));
        }
        if n == 0 {
            return Ok(());
        }
        let (i, j, k) = (m.input_dim(), m.output_dim(), m.hidden());
        let xm = lib(Matrix::from_vec(n, i, std::slice::from_raw_parts(x, n * i).to_vec()))?;
        let ym = lib(Matrix::from_vec(n, j, std::slice::from_raw_parts(y, n * j).to_vec()))?;
        let h = lib(m.infer_batch(&xm, &ym))?;
        std::slice::from_raw_parts_mut(out, n * k).copy_from_slice(h.as_slice());
        Ok(())
    })
}

/// Output-image reconstruction `ŷ` from `x` and mapping units `h` (gated
/// models only): `x` is `n × input_dim`, `h` is `n × hidden`, `out` receives
/// `n × output_dim`.
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn gg_model_reconstruct_y(
    model: *const GgModel,
    x: *const f64,
    h: *const f64,
    n: usize,
    out: *mut f64,
) -> GgStatus {
    guard(|| {
        let AnyModel::Factor(m) = &model.as_ref().ok_or_else(|| null("model"))?.inner else {
            return Err((GgStatus::Unsupported, "reconstruction needs a gated model".into()));
        };
        if x.is_null() || h.is_null() || out.is_null() {
            return Err(null("buffer"));
        }
        if n == 0 {
            return Ok(());
        }
        let (i, j, k) = (m.input_dim(), m.output_dim(), m.hidden());
        let xm = lib(Matrix::from_vec(n, i, std::slice::from_raw_parts(x, n * i).to_vec()))?;
        let hm = lib(Matrix::from_vec(n, k, std::slice::from_raw_parts(h, n * k).to_vec()))?;
        let r = lib(m.reconstruct_y_batch(&xm, &hm))?;
        std::slice::from_raw_parts_mut(out, n * j).copy_from_slice(r.as_slice());
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gg_dataset_load(path: *const c_char, out: *mut *mut GgDataset) -> GgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = lib(read_dataset(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(GgDataset { inner: d }));
        Ok(())
    })
}

/// Generates a synthetic dataset from a JSON dataset spec, e.g.
/// `{"task":{"kind":"rotation"},"patch_size":13,"counts":{"train":100,"valid":10,"test":10},"seed":1}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gg_dataset_generate(spec_json: *const c_char, out: *mut *mut GgDataset) -> GgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = path_arg(spec_json)?;
        let spec: DatasetSpec = lib(serde_json::from_str(&text).map_err(Error::from))?;
        let d = lib(generate(&spec))?;
        *out = Box::into_raw(Box::new(GgDataset { inner: d }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gg_dataset_save(dataset: *const GgDataset, path: *const c_char) -> GgStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        lib(write_dataset(path_arg(path)?, &d.inner))
    })
}

/// Releases a dataset; null is ignored.
///
/// # Safety
/// `dataset` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gg_dataset_free(dataset: *mut GgDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

fn split(d: &Dataset, s: GgSplit) -> &Split {
    match s {
        GgSplit::Train => &d.train,
        GgSplit::Valid => &d.valid,
        GgSplit::Test => &d.test,
    }
}

/// Number of pairs in a split and the length of each image vector.
///
/// # Safety
/// `dataset` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gg_dataset_shape(
    dataset: *const GgDataset,
    which: GgSplit,
    len: *mut usize,
    dim: *mut usize,
) -> GgStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.inner;
        if !len.is_null() {
            *len = split(d, which).len();
        }
        if !dim.is_null() {
            *dim = d.dim;
        }
        Ok(())
    })
}

/// Copies pair `index` of a split into `x` and `y` (`dim` doubles each);
/// `label` receives the class or -1 for unlabeled data.
///
/// # Safety
/// `x` and `y` must hold `dim` doubles; `label` may be null.
#[no_mangle]
pub unsafe extern "C" fn gg_dataset_pair(
    dataset: *const GgDataset,
    which: GgSplit,
    index: usize,
    x: *mut f64,
    y: *mut f64,
    label: *mut i32,
) -> GgStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.inner;
        let s = split(d, which);
        if index >= s.len() {
            return Err((GgStatus::InvalidArgument, format!("index {index} >= {}", s.len())));
        }
        if x.is_null() || y.is_null() {
            return Err(null("buffer"));
        }
        std::slice::from_raw_parts_mut(x, d.dim).copy_from_slice(s.x.row(index));
        std::slice::from_raw_parts_mut(y, d.dim).copy_from_slice(s.y.row(index));
        if !label.is_null() {
            *label = s.labels.as_ref().map_or(-1, |l| l[index] as i32);
        }
        Ok(())
    })
}
