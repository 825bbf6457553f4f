use std::collections::HashMap;
use std::str::FromStr;

use csv::StringRecord;

use crate::error::{Error, Result};

/// Header lookup that reports the first missing column by name.
pub(crate) struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    pub(crate) fn new(headers: &StringRecord) -> Self {
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        Self { index }
    }

    pub(crate) fn require(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

pub(crate) fn field<T: FromStr>(record: &StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        Error::Schema(format!("column `{name}` line {line}: cannot parse `{raw}`"))
    })
}

/// Integer columns are sometimes exported as `12.0`.
pub(crate) fn int_field(record: &StringRecord, idx: usize, name: &str) -> Result<i64> {
    let v: f64 = field(record, idx, name)?;
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::Schema(format!("column `{name}`: `{v}` is not an integer")));
    }
    Ok(v as i64)
}
