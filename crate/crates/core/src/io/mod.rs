//! Binary file formats and report writers.
//!
//! All numeric payloads are little-endian regardless of host. Readers never
//! panic on malformed input; each failure kind is a distinct
//! [`FormatError`] carrying the byte offset where it was detected.

mod container;
mod formats;
mod pgm;
mod report;

pub use formats::{
    config_digest, decode_dataset, decode_frames, decode_model, decode_whitening, encode_dataset,
    encode_frames, encode_model, encode_whitening, read_dataset, read_frames, read_model,
    read_whitening, write_dataset, write_frames, write_model, write_whitening, AnyModel,
    DatasetHeader, ModelFile, ModelHeader, ModelShape, SplitHeader,
};
pub use formats::write_bytes as write_raw;
pub use pgm::{decode_pgm, read_pgm, read_pgm_dir};
pub use report::{csv_bytes, write_csv_report, write_json_report};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {found:?} at byte {offset}")]
    BadMagic { offset: u64, found: [u8; 4] },
    #[error("unsupported format version {found:#04x} at byte {offset}")]
    UnsupportedVersion { offset: u64, found: u8 },
    #[error("payload CRC mismatch at byte {offset}: header {expected:#010x}, computed {actual:#010x}")]
    Crc { offset: u64, expected: u32, actual: u32 },
    #[error("truncated at byte {offset}: need {needed} bytes, {available} available")]
    Truncated { offset: u64, needed: u64, available: u64 },
    #[error("malformed header at byte {offset}: {message}")]
    Header { offset: u64, message: String },
    #[error("inconsistent payload at byte {offset}: {message}")]
    Payload { offset: u64, message: String },
}

impl FormatError {
    pub fn offset(&self) -> u64 {
        match self {
            FormatError::BadMagic { offset, .. }
            | FormatError::UnsupportedVersion { offset, .. }
            | FormatError::Crc { offset, .. }
            | FormatError::Truncated { offset, .. }
            | FormatError::Header { offset, .. }
            | FormatError::Payload { offset, .. } => *offset,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, DatasetSpec, SplitCounts, TaskSpec};
    use crate::math::{fit_whitening, Matrix, Rng};
    use crate::model::{CoreStructure, FactorModel, SquarePoolingModel, TrainConfig};

    fn tiny_dataset() -> crate::datagen::Dataset {
        generate(&DatasetSpec {
            task: TaskSpec::rotation(),
            patch_size: 5,
            counts: SplitCounts {
                train: 10,
                valid: 3,
                test: 2,
            },
            seed: 9,
        })
        .unwrap()
    }

    #[test]
    fn dataset_round_trip_is_bitwise() {
        let d = tiny_dataset();
        let bytes = encode_dataset(&d);
        let back = decode_dataset(&bytes).unwrap();
        assert_eq!(back, d);
        assert_eq!(encode_dataset(&back), bytes);
    }

    #[test]
    fn flipped_payload_byte_is_a_crc_error() {
        let mut bytes = encode_dataset(&tiny_dataset());
        let n = bytes.len();
        bytes[n - 5] ^= 0x40;
        assert!(matches!(decode_dataset(&bytes), Err(FormatError::Crc { .. })));
    }

    #[test]
    fn version_and_magic_are_distinct_errors() {
        let mut bytes = encode_dataset(&tiny_dataset());
        bytes[3] = b'2';
        assert!(matches!(
            decode_dataset(&bytes),
            Err(FormatError::UnsupportedVersion { offset: 3, found: b'2' })
        ));
        bytes[0] = b'X';
        assert!(matches!(decode_dataset(&bytes), Err(FormatError::BadMagic { .. })));
        // a model file is not a dataset
        let m = AnyModel::SquarePooling(SquarePoolingModel::zeros(2, 1, 1));
        assert!(matches!(decode_dataset(&encode_model(&m, None)), Err(FormatError::BadMagic { .. })));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_dataset(&tiny_dataset());
        for cut in [0, 3, 6, 20, bytes.len() - 1] {
            let err = decode_dataset(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, FormatError::Truncated { .. } | FormatError::Header { .. }),
                "cut {cut}: {err}"
            );
        }
    }

    #[test]
    fn model_round_trip_for_every_kind() {
        let mut rng = Rng::new(1);
        let cfg = TrainConfig::default();
        for core in [
            CoreStructure::diagonal(4).unwrap(),
            CoreStructure::grouped(5, 2).unwrap(),
            CoreStructure::asym_grouped(6, 3).unwrap(),
            CoreStructure::topographic(3, 3, 2, true).unwrap(),
        ] {
            let m = AnyModel::Factor(FactorModel::init(core, 7, 6, 3, 0.3, &mut rng).unwrap());
            let bytes = encode_model(&m, Some(&cfg));
            let back = decode_model(&bytes).unwrap();
            assert_eq!(back.model, m);
            assert_eq!(back.header.train_config.as_ref(), Some(&cfg));
            assert_eq!(encode_model(&back.model, Some(&cfg)), bytes);
        }
        let p = AnyModel::SquarePooling(SquarePoolingModel::init(4, 3, 2, 0.1, &mut rng).unwrap());
        assert_eq!(decode_model(&encode_model(&p, None)).unwrap().model, p);
    }

    #[test]
    fn whitening_and_frames_round_trip() {
        let mut rng = Rng::new(2);
        let x = Matrix::from_fn(50, 6, |_, _| rng.gaussian(0.0, 1.0));
        let t = fit_whitening(&x, 0.9).unwrap();
        assert_eq!(decode_whitening(&encode_whitening(&t)).unwrap(), t);
        let frames = vec![Matrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64); 3];
        assert_eq!(decode_frames(&encode_frames(&frames).unwrap()).unwrap(), frames);
    }

    #[test]
    fn pgm_binary_and_ascii() {
        let mut p5 = b"P5\n# comment\n3 2\n255\n".to_vec();
        p5.extend([0u8, 51, 255, 102, 204, 0]);
        let m = decode_pgm(&p5).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(0, 2)], 1.0);
        assert!((m[(1, 0)] - 0.4).abs() < 1e-12);
        let p2 = b"P2 2 1 4 1 4".to_vec();
        assert_eq!(decode_pgm(&p2).unwrap().as_slice(), &[0.25, 1.0]);
        assert!(matches!(decode_pgm(b"P5\n3 2\n255\n\x00"), Err(FormatError::Truncated { .. })));
        assert!(matches!(decode_pgm(b"P6 1 1 255 "), Err(FormatError::BadMagic { .. })));
    }

    #[test]
    fn csv_quotes_and_orders_rows() {
        let b = csv_bytes(&["a", "b"], vec![vec!["1", "x,y"], vec!["2", "z"]]).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "a,b\n1,\"x,y\"\n2,z\n");
    }
}
