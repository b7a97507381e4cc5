use std::ffi::{CStr, CString};
use std::ptr;

use groupgate::config::ModelConfig;
use groupgate::experiment::build_model;
use groupgate::io::write_model;
use groupgate::model::CoreKind;
use groupgate_ffi::*;

const SPEC: &str = r#"{"task":{"kind":"rotation"},"patch_size":7,"counts":{"train":20,"valid":5,"test":5},"seed":3}"#;

fn last_error() -> String {
    let p = gg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cpath(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(gg_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn dataset_generate_save_load_and_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CString::new(SPEC).unwrap();
    let mut ds: *mut GgDataset = ptr::null_mut();
    assert_eq!(unsafe { gg_dataset_generate(spec.as_ptr(), &mut ds) }, GgStatus::Ok);
    let path = cpath(&dir.path().join("d.rgd"));
    assert_eq!(unsafe { gg_dataset_save(ds, path.as_ptr()) }, GgStatus::Ok);

    let mut back: *mut GgDataset = ptr::null_mut();
    assert_eq!(unsafe { gg_dataset_load(path.as_ptr(), &mut back) }, GgStatus::Ok);
    let (mut len, mut dim) = (0usize, 0usize);
    assert_eq!(unsafe { gg_dataset_shape(back, GgSplit::Train, &mut len, &mut dim) }, GgStatus::Ok);
    assert_eq!((len, dim), (20, 49));

    let (mut x0, mut y0, mut x1, mut y1) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let (mut l0, mut l1) = (-5, -5);
    unsafe {
        assert_eq!(gg_dataset_pair(ds, GgSplit::Test, 4, x0.as_mut_ptr(), y0.as_mut_ptr(), &mut l0), GgStatus::Ok);
        assert_eq!(gg_dataset_pair(back, GgSplit::Test, 4, x1.as_mut_ptr(), y1.as_mut_ptr(), &mut l1), GgStatus::Ok);
    }
    assert_eq!((x0, y0, l0), (x1, y1, l1));
    assert!(l0 >= 0);

    let st = unsafe { gg_dataset_pair(back, GgSplit::Valid, 5, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(st, GgStatus::InvalidArgument);
    assert!(last_error().contains("index"));
    unsafe {
        gg_dataset_free(ds);
        gg_dataset_free(back);
    }
}

#[test]
fn model_load_infer_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ModelConfig::Gated {
        core: CoreKind::Grouped { group_size: 2 },
        num_factors: 8,
        hidden: 5,
    };
    let model = build_model(&cfg, 9, 0.1, 4).unwrap();
    let file = dir.path().join("m.rgm");
    write_model(&file, &model, None).unwrap();

    let path = cpath(&file);
    let mut m: *mut GgModel = ptr::null_mut();
    assert_eq!(unsafe { gg_model_load(path.as_ptr(), &mut m) }, GgStatus::Ok);
    let (mut i, mut j, mut k) = (0, 0, 0);
    assert_eq!(unsafe { gg_model_dims(m, &mut i, &mut j, &mut k) }, GgStatus::Ok);
    assert_eq!((i, j, k), (9, 9, 5));

    let n = 3;
    let x: Vec<f64> = (0..n * i).map(|v| (v as f64 * 0.37).sin()).collect();
    let y: Vec<f64> = (0..n * j).map(|v| (v as f64 * 0.21).cos()).collect();
    let mut h = vec![0.0; n * k];
    assert_eq!(unsafe { gg_model_infer(m, x.as_ptr(), y.as_ptr(), n, h.as_mut_ptr()) }, GgStatus::Ok);
    let xm = groupgate::math::Matrix::from_vec(n, i, x.clone()).unwrap();
    let ym = groupgate::math::Matrix::from_vec(n, j, y).unwrap();
    assert_eq!(h, model.infer_batch(&xm, &ym).unwrap().as_slice());
    assert!(h.iter().all(|v| (0.0..=1.0).contains(v)));

    let mut r = vec![0.0; n * j];
    assert_eq!(unsafe { gg_model_reconstruct_y(m, x.as_ptr(), h.as_ptr(), n, r.as_mut_ptr()) }, GgStatus::Ok);
    assert!(r.iter().all(|v| v.is_finite()));

    let resaved = cpath(&dir.path().join("again.rgm"));
    assert_eq!(unsafe { gg_model_save(m, resaved.as_ptr()) }, GgStatus::Ok);
    unsafe { gg_model_free(m) };
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut m: *mut GgModel = ptr::null_mut();

    let missing = cpath(&dir.path().join("absent.rgm"));
    assert_eq!(unsafe { gg_model_load(missing.as_ptr(), &mut m) }, GgStatus::Io);
    assert!(m.is_null());

    let junk = dir.path().join("junk.rgm");
    std::fs::write(&junk, b"not a model file").unwrap();
    assert_eq!(unsafe { gg_model_load(cpath(&junk).as_ptr(), &mut m) }, GgStatus::Format);
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { gg_model_load(ptr::null(), &mut m) }, GgStatus::NullPointer);
    assert_eq!(unsafe { gg_model_dims(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) }, GgStatus::NullPointer);

    let bad = CString::new(r#"{"task":{"kind":"rotation"},"patch_size":0}"#).unwrap();
    let mut ds: *mut GgDataset = ptr::null_mut();
    assert_eq!(unsafe { gg_dataset_generate(bad.as_ptr(), &mut ds) }, GgStatus::InvalidArgument);

    // freeing null is a no-op
    unsafe {
        gg_model_free(ptr::null_mut());
        gg_dataset_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/groupgate.h")).unwrap();
    for name in [
        "gg_last_error_message",
        "gg_version",
        "gg_model_load",
        "gg_model_save",
        "gg_model_free",
        "gg_model_dims",
        "gg_model_infer",
        "gg_model_reconstruct_y",
        "gg_dataset_load",
        "gg_dataset_generate",
        "gg_dataset_save",
        "gg_dataset_free",
        "gg_dataset_shape",
        "gg_dataset_pair",
        "GG_STATUS_OK",
        "typedef struct GgModel GgModel",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}
