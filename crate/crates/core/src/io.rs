//! JSON reading and writing for the CLI.
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::array::DenseArray;
use crate::error::{Error, Result};
use crate::kron::{Matrix, MatrixDoc};

/// Compact JSON with floats as `d.dddddddddddddddde±x`.
#[derive(Debug, Default, Clone, Copy)]
pub struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

/// Input arrays for batch commands: a single array document, a JSON list of
/// them, or a sample output `{"draws": [...]}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ArrayBatchDoc {
    One(DenseArray),
    Many(Vec<DenseArray>),
    Draws { draws: Vec<DenseArray> },
}

pub fn parse_arrays(text: &str, what: &str) -> Result<Vec<DenseArray>> {
    // Parse to a Value first so that a malformed document reports the real
    // serde error instead of the untagged-enum fallback message.
    let value: serde_json::Value = parse_json(text, what)?;
    if let Some(obj) = value.as_object() {
        if obj.contains_key("draws") {
            let draws = obj.get("draws").cloned().unwrap_or_default();
            return serde_json::from_value(draws).map_err(|e| Error::Parse(format!("{what}: draws: {e}")));
        }
        return serde_json::from_value::<DenseArray>(value)
            .map(|a| vec![a])
            .map_err(|e| Error::Parse(format!("{what}: {e}")));
    }
    match serde_json::from_value::<ArrayBatchDoc>(value) {
        Ok(ArrayBatchDoc::One(a)) => Ok(vec![a]),
        Ok(ArrayBatchDoc::Many(v)) | Ok(ArrayBatchDoc::Draws { draws: v }) => Ok(v),
        Err(_) => Err(Error::Parse(format!(
            "{what}: expected an array document, a list of them, or {{\"draws\": [...]}}"
        ))),
    }
}

/// A bare list of factor matrices: `{"factors": [...]}`. Other keys (such as
/// a parameter file's `mean`) are ignored.
#[derive(Debug, Deserialize)]
pub struct FactorsDoc {
    pub factors: Vec<MatrixDoc>,
}

impl FactorsDoc {
    pub fn into_matrices(self) -> Result<Vec<Matrix>> {
        self.factors
            .into_iter()
            .enumerate()
            .map(|(j, m)| m.into_matrix().map_err(|e| Error::Parse(format!("factors[{j}]: {e}"))))
            .collect()
    }
}

/// Output of the `sample` command.
#[derive(Debug, Serialize, Deserialize)]
pub struct SampleDoc {
    pub draws: Vec<DenseArray>,
    pub seed: u64,
}
