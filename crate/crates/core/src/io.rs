//! JSON file formats and the canonical writer used for reproducible output.
//!
//! * Complex matrices: `{"rows": n, "cols": m, "data": [[re, im], ...]}`, row-major.
//! * Transfer matrices: `{"dim": d, "t": [[...], ...]}`; maps between different
//!   dimensions add `"dim_out"`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, RealMatrix};
use crate::transfer::TransferMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows * j.cols {
            return Err(Error::Parse(format!(
                "matrix declares {}x{} but carries {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        let entries: Vec<_> = j.data.iter().map(|[re, im]| c64(*re, *im)).collect();
        Ok(ComplexMatrix::from_row_slice(j.rows, j.cols, &entries))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_out: Option<usize>,
    pub t: Vec<Vec<f64>>,
}

impl From<&TransferMatrix> for TransferJson {
    fn from(t: &TransferMatrix) -> Self {
        let m = t.matrix();
        Self {
            dim: t.dim_in(),
            dim_out: (!t.is_square()).then_some(t.dim_out()),
            t: m.row_iter().map(|r| r.iter().cloned().collect()).collect(),
        }
    }
}

impl TryFrom<TransferJson> for TransferMatrix {
    type Error = Error;

    fn try_from(j: TransferJson) -> Result<Self> {
        let rows = j.t.len();
        let cols = j.t.first().map_or(0, |r| r.len());
        if j.t.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("transfer matrix rows have different lengths".into()));
        }
        let data: Vec<f64> = j.t.into_iter().flatten().collect();
        let m = RealMatrix::from_row_slice(rows, cols, &data);
        TransferMatrix::rectangular(j.dim, j.dim_out.unwrap_or(j.dim), m)
            .map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    j.try_into()
}

pub fn parse_transfer(text: &str) -> Result<TransferMatrix> {
    let j: TransferJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    j.try_into()
}

pub fn read_transfer(path: &Path) -> Result<TransferMatrix> {
    parse_transfer(&std::fs::read_to_string(path)?)
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_transfer(path: &Path, t: &TransferMatrix) -> Result<()> {
    std::fs::write(path, to_canonical_json(&TransferJson::from(t))?)?;
    Ok(())
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, to_canonical_json(&MatrixJson::from(m))?)?;
    Ok(())
}

/// Formats every float with 17 significant digits so repeated runs emit
/// identical bytes.
struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        let value = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes with sorted object keys and fixed float formatting.
/// Non-finite floats become `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    tree.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Serde adapters for nalgebra-backed fields in reports.
pub mod serde_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        j.try_into().map_err(serde::de::Error::custom)
    }
}

pub mod serde_matrices {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(MatrixJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        let js = Vec::<MatrixJson>::deserialize(d)?;
        js.into_iter()
            .map(|j| j.try_into().map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_transfer {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &TransferMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        TransferJson::from(t).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<TransferMatrix, D::Error> {
        let j = TransferJson::deserialize(d)?;
        j.try_into().map_err(serde::de::Error::custom)
    }
}
