//! Dense feature matrices and the on-disk formats for matrices, ground truth,
//! configuration and fusion results.
//!
//! Two matrix encodings are supported:
//!
//! * binary: magic `FSM1`, rows and cols as little-endian `u32`, one kind byte
//!   (`0` distance, `1` similarity), then row-major little-endian `f64` values;
//! * TSV: a `# fsm n=<n> kind=<distance|similarity> name=<str>` header followed
//!   by `n` lines of `n` tab-separated decimals.
//!
//! Values are always stored as `f64`; loading into `f32` goes through
//! [`FeatureMatrix::cast`].

mod config;
mod results;
mod truth;

pub use config::{FusionConfig, CONFIG_KEYS};
pub use results::{load_results, save_results};
pub use truth::GroundTruth;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const BINARY_MAGIC: &[u8; 4] = b"FSM1";
const BINARY_HEADER_LEN: usize = 4 + 4 + 4 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Distance,
    Similarity,
}

impl MatrixKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixKind::Distance => "distance",
            MatrixKind::Similarity => "similarity",
        }
    }

    fn byte(self) -> u8 {
        match self {
            MatrixKind::Distance => 0,
            MatrixKind::Similarity => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(MatrixKind::Distance),
            1 => Some(MatrixKind::Similarity),
            _ => None,
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "distance" => Ok(MatrixKind::Distance),
            "similarity" => Ok(MatrixKind::Similarity),
            other => Err(format!("unknown matrix kind {other:?}")),
        }
    }
}

/// Square `n x n` score matrix for one feature, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    n: usize,
    kind: MatrixKind,
    values: Vec<T>,
    name: String,
}

impl<T: Scalar> FeatureMatrix<T> {
    /// Builds a matrix, rejecting non-square buffers and non-finite entries.
    pub fn new(n: usize, kind: MatrixKind, values: Vec<T>, name: impl Into<String>) -> Result<Self> {
        if values.len() != n * n {
            let cols = values.len().checked_div(n).unwrap_or(values.len());
            return Err(Error::NonSquare { rows: n, cols });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n,
                col: pos % n,
            });
        }
        Ok(Self {
            n,
            kind,
            values,
            name: name.into(),
        })
    }

    pub fn from_fn(
        n: usize,
        kind: MatrixKind,
        name: impl Into<String>,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Self::new(n, kind, values, name)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            n: self.n,
            kind: self.kind,
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
            name: self.name.clone(),
        }
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Encodes to the `FSM1` binary layout.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BINARY_HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(BINARY_MAGIC);
        let dim = self.n as u32;
        out.extend_from_slice(&dim.to_le_bytes());
        out.extend_from_slice(&dim.to_le_bytes());
        out.push(self.kind.byte());
        for v in &self.values {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# fsm n={} kind={} name={}\n", self.n, self.kind, tsv_name(&self.name));
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{:?}", v.as_f64())).collect();
            out.push_str(&line.join("\t"));
            out.push('\n');
        }
        out
    }

    /// Decodes either format, chosen by the leading bytes.
    pub fn from_bytes(bytes: &[u8], default_name: &str) -> Result<Self> {
        if bytes.starts_with(BINARY_MAGIC) {
            Self::decode_binary(bytes, default_name)
        } else if bytes.starts_with(b"#") {
            let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
                line: 1,
                msg: e.to_string(),
            })?;
            Self::decode_tsv(text, default_name)
        } else {
            Err(Error::BadMagic {
                found: bytes.iter().take(4).copied().collect(),
            })
        }
    }

    fn decode_binary(bytes: &[u8], name: &str) -> Result<Self> {
        if bytes.len() < BINARY_HEADER_LEN {
            return Err(Error::Truncated {
                expected: BINARY_HEADER_LEN,
                found: bytes.len(),
            });
        }
        let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if rows != cols {
            return Err(Error::NonSquare { rows, cols });
        }
        let kind = MatrixKind::from_byte(bytes[12]).ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unknown kind byte {}", bytes[12]),
        })?;
        let expected = BINARY_HEADER_LEN + rows * cols * 8;
        if bytes.len() != expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let values = bytes[BINARY_HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Self::new(rows, kind, values, name)
    }

    fn decode_tsv(text: &str, default_name: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let body = header
            .strip_prefix('#')
            .map(str::trim_start)
            .ok_or_else(|| Error::BadMagic {
                found: header.bytes().take(4).collect(),
            })?;
        let body = body.strip_prefix("fsm").map(str::trim_start).unwrap_or(body);

        let mut n = None;
        let mut kind = None;
        let mut name = default_name.to_string();
        for field in body.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("malformed header field {field:?}"),
            })?;
            match key {
                "n" => {
                    n = Some(value.parse::<usize>().map_err(|e| Error::Parse {
                        line: 1,
                        msg: format!("n: {e}"),
                    })?)
                }
                "kind" => {
                    kind = Some(
                        value
                            .parse::<MatrixKind>()
                            .map_err(|msg| Error::Parse { line: 1, msg })?,
                    )
                }
                "name" => name = value.to_string(),
                other => {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unknown header field {other:?}"),
                    })
                }
            }
        }
        let n = n.ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing n=".into(),
        })?;
        let kind = kind.ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing kind=".into(),
        })?;

        let mut values = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 2;
            let mut cols = 0;
            for tok in line.split('\t') {
                let v: f64 = tok.trim().parse().map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("{tok:?}: {e}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: rows, col: cols });
                }
                values.push(T::lit(v));
                cols += 1;
            }
            if cols != n {
                return Err(Error::NonSquare { rows: n, cols });
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Truncated {
                expected: n * n,
                found: values.len(),
            });
        }
        Self::new(n, kind, values, name)
    }
}

fn tsv_name(name: &str) -> String {
    if name.is_empty() {
        "-".to_string()
    } else {
        name.split_whitespace().collect::<Vec<_>>().join("_")
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads a matrix in either supported format.
pub fn load_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureMatrix<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureMatrix::from_bytes(&bytes, &file_stem(path))
}

pub fn save_matrix_binary<T: Scalar>(m: &FeatureMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &m.to_binary())
}

pub fn save_matrix_tsv<T: Scalar>(m: &FeatureMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), m.to_tsv().as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
