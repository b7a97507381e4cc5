//! CSV and JSON report writers.

use std::path::Path;

use serde::Serialize;

use super::formats::write_bytes;
use crate::Result;

/// Writes a CSV table; every row must have `header.len()` fields.
pub fn write_csv_report<R, S>(path: impl AsRef<Path>, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator,
    R::Item: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    write_bytes(path.as_ref(), &csv_bytes(header, rows)?)
}

pub fn csv_bytes<R, S>(header: &[&str], rows: R) -> Result<Vec<u8>>
where
    R: IntoIterator,
    R::Item: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| crate::Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(|s| s.as_ref().to_string()).collect();
        w.write_record(&fields).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| crate::Error::InvalidArgument(format!("csv: {e}")))
}

pub fn write_json_report<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path.as_ref(), &bytes)
}
