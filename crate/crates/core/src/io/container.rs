//! Shared container layout:
//!
//! ```text
//! offset 0   magic, 4 bytes ("RGD1", "RGM1", "RGW1", "RGF1")
//! offset 4   header length H, u32 little-endian
//! offset 8   header, H bytes of UTF-8 JSON
//! offset 8+H payload: blocks of (u64 LE element count, elements LE)
//! ```
//!
//! The header always carries `payload_len` and `payload_crc32`; the CRC is
//! checked before any block is decoded.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::FormatError;

pub const FORMAT_VERSION: u8 = b'1';

/// Fields every header shares.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub payload_len: u64,
    pub payload_crc32: u32,
}

pub fn encode<H: Serialize>(family: &[u8; 3], header: &H, payload: Vec<u8>) -> Vec<u8> {
    let mut value = serde_json::to_value(header).expect("headers serialize");
    let env = Envelope {
        payload_len: payload.len() as u64,
        payload_crc32: crc32fast::hash(&payload),
    };
    let obj = value.as_object_mut().expect("headers are JSON objects");
    obj.insert("payload_len".into(), env.payload_len.into());
    obj.insert("payload_crc32".into(), env.payload_crc32.into());
    let json = serde_json::to_vec(&value).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + payload.len());
    out.extend_from_slice(family);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    out
}

/// Validates magic, version, header and CRC; returns the typed header and a
/// reader positioned at the first payload byte.
pub fn decode<'a, H: DeserializeOwned>(
    family: &[u8; 3],
    bytes: &'a [u8],
) -> Result<(H, BlockReader<'a>), FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated {
            offset: 0,
            needed: 4,
            available: bytes.len() as u64,
        });
    }
    if &bytes[..3] != family {
        return Err(FormatError::BadMagic {
            offset: 0,
            found: bytes[..4].try_into().expect("4 bytes"),
        });
    }
    if bytes[3] != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion {
            offset: 3,
            found: bytes[3],
        });
    }
    let mut r = BlockReader {
        bytes,
        pos: 4,
    };
    let hlen = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes")) as usize;
    let hstart = r.pos;
    let raw = r.take(hlen)?;
    let value: serde_json::Value =
        serde_json::from_slice(raw).map_err(|e| FormatError::Header {
            offset: hstart as u64,
            message: e.to_string(),
        })?;
    let env: Envelope = serde_json::from_value(value.clone()).map_err(|e| FormatError::Header {
        offset: hstart as u64,
        message: e.to_string(),
    })?;
    let header: H = serde_json::from_value(value).map_err(|e| FormatError::Header {
        offset: hstart as u64,
        message: e.to_string(),
    })?;
    let pstart = r.pos;
    let available = (bytes.len() - pstart) as u64;
    if available < env.payload_len {
        return Err(FormatError::Truncated {
            offset: pstart as u64,
            needed: env.payload_len,
            available,
        });
    }
    if available > env.payload_len {
        return Err(FormatError::Payload {
            offset: pstart as u64 + env.payload_len,
            message: format!("{} trailing bytes", available - env.payload_len),
        });
    }
    let actual = crc32fast::hash(&bytes[pstart..]);
    if actual != env.payload_crc32 {
        return Err(FormatError::Crc {
            offset: pstart as u64,
            expected: env.payload_crc32,
            actual,
        });
    }
    Ok((header, r))
}

#[derive(Default)]
pub struct BlockWriter {
    buf: Vec<u8>,
}

impl BlockWriter {
    pub fn f64s(&mut self, values: &[f64]) -> &mut Self {
        self.buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self
    }

    pub fn u16s(&mut self, values: &[u16]) -> &mut Self {
        self.buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct BlockReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BlockReader<'a> {
    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(FormatError::Truncated {
                offset: self.pos as u64,
                needed: n as u64,
                available: available as u64,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Element count of the next block, checked against the bytes left so a
    /// corrupt count cannot trigger a huge allocation.
    fn count(&mut self, width: usize, expected: Option<usize>) -> Result<usize, FormatError> {
        let at = self.pos as u64;
        let n = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        let left = (self.bytes.len() - self.pos) as u64;
        if n.checked_mul(width as u64).is_none_or(|b| b > left) {
            return Err(FormatError::Truncated {
                offset: at,
                needed: n.saturating_mul(width as u64),
                available: left,
            });
        }
        if let Some(e) = expected {
            if n != e as u64 {
                return Err(FormatError::Payload {
                    offset: at,
                    message: format!("block holds {n} values, header implies {e}"),
                });
            }
        }
        Ok(n as usize)
    }

    pub fn f64s(&mut self, expected: Option<usize>) -> Result<Vec<f64>, FormatError> {
        let n = self.count(8, expected)?;
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub fn u16s(&mut self, expected: Option<usize>) -> Result<Vec<u16>, FormatError> {
        let n = self.count(2, expected)?;
        let raw = self.take(n * 2)?;
        Ok(raw
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes(c.try_into().expect("2 bytes")))
            .collect())
    }

    pub fn finish(&self) -> Result<(), FormatError> {
        if self.pos != self.bytes.len() {
            return Err(FormatError::Payload {
                offset: self.pos as u64,
                message: format!("{} unread payload bytes", self.bytes.len() - self.pos),
            });
        }
        Ok(())
    }
}
