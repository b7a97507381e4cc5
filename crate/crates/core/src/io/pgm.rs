//! Netpbm gray-map input (P2 and P5, 8- or 16-bit).

use std::path::Path;

use super::FormatError;
use crate::math::Matrix;
use crate::{Error, Result};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> std::result::Result<usize, FormatError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(FormatError::Header {
                offset: start as u64,
                message: "expected an unsigned integer".into(),
            })
    }
}

/// Decodes a gray map, scaling samples to `[0, 1]` by `maxval`.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<Matrix, FormatError> {
    if bytes.len() < 2 {
        return Err(FormatError::Truncated {
            offset: 0,
            needed: 2,
            available: bytes.len() as u64,
        });
    }
    let binary = match &bytes[..2] {
        b"P5" => true,
        b"P2" => false,
        _ => {
            let mut found = [0u8; 4];
            found[..2].copy_from_slice(&bytes[..2]);
            return Err(FormatError::BadMagic { offset: 0, found });
        }
    };
    let mut c = Cursor { bytes, pos: 2 };
    let cols = c.token()?;
    let rows = c.token()?;
    let maxval = c.token()?;
    if cols == 0 || rows == 0 || maxval == 0 || maxval > 65535 {
        return Err(FormatError::Header {
            offset: 2,
            message: format!("invalid size {cols}x{rows} or maxval {maxval}"),
        });
    }
    let n = rows.checked_mul(cols).filter(|&n| n <= bytes.len()).ok_or(FormatError::Truncated {
        offset: c.pos as u64,
        needed: (rows as u64).saturating_mul(cols as u64),
        available: (bytes.len() - c.pos) as u64,
    })?;
    let scale = 1.0 / maxval as f64;
    let data: Vec<f64> = if binary {
        // exactly one whitespace byte separates header and raster
        let start = c.pos + 1;
        let width = if maxval < 256 { 1 } else { 2 };
        let needed = n * width;
        if bytes.len() < start || bytes.len() - start < needed {
            return Err(FormatError::Truncated {
                offset: start as u64,
                needed: needed as u64,
                available: bytes.len().saturating_sub(start) as u64,
            });
        }
        let raster = &bytes[start..start + needed];
        if width == 1 {
            raster.iter().map(|&v| v as f64 * scale).collect()
        } else {
            raster
                .chunks_exact(2)
                .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64 * scale)
                .collect()
        }
    } else {
        (0..n)
            .map(|_| c.token().map(|v| v as f64 * scale))
            .collect::<std::result::Result<_, _>>()?
    };
    Ok(Matrix::from_vec(rows, cols, data).expect("length checked"))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    Ok(decode_pgm(&super::formats::read_bytes(path)?)?)
}

/// All `*.pgm` files of a directory, in file-name order.
pub fn read_pgm_dir(dir: impl AsRef<Path>) -> Result<Vec<Matrix>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no .pgm files in {}", dir.display())));
    }
    paths.iter().map(read_pgm).collect()
}
