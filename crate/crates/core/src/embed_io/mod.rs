//! Embedding matrices: validation, file formats and row-level plumbing.
//!
//! Two on-disk formats are supported:
//!
//! * **npy** version 1.0, C order, 2-D, little-endian `<f4` or `<f8`.
//! * **GMEB rawbin**: a 16-byte little-endian header (`b"GMEB"`, `u32` rows,
//!   `u32` columns, `u32` dtype code where 4 = f32 and 8 = f64) followed by the
//!   row-major payload.
//!
//! Files are always promoted to `f64` on load.

mod npy;
mod rawbin;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{Dtype, Scalar};

pub use npy::NPY_MAGIC;
pub use rawbin::RAWBIN_MAGIC;

/// An immutable N x D matrix of sample embeddings, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet<T> {
    data: Vec<T>,
    n: usize,
    dim: usize,
    label: String,
    dtype_origin: Dtype,
}

impl<T: Scalar> EmbeddingSet<T> {
    /// Builds a validated set from row-major data.
    pub fn new(data: Vec<T>, n: usize, dim: usize, label: impl Into<String>) -> Result<Self> {
        Self::with_origin(data, n, dim, label, T::DTYPE)
    }

    pub(crate) fn with_origin(
        data: Vec<T>,
        n: usize,
        dim: usize,
        label: impl Into<String>,
        dtype_origin: Dtype,
    ) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Empty { n, dim });
        }
        if data.len() != n * dim {
            return Err(Error::LengthMismatch {
                expected: n * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            data,
            n,
            dim,
            label: label.into(),
            dtype_origin,
        })
    }

    /// Builds a set from a slice of equally sized rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R], label: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), dim, label)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dtype_origin(&self) -> Dtype {
        self.dtype_origin
    }

    /// Row-major payload.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Contiguous rows `[start, end)` as one row-major slice.
    pub fn rows(&self, start: usize, end: usize) -> &[T] {
        &self.data[start * self.dim..end * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Checks that `other` lives in the same feature space.
    pub fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Row-stacks `other` under `self`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.ensure_same_dim(other)?;
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Self {
            data,
            n: self.n + other.n,
            dim: self.dim,
            label: self.label.clone(),
            dtype_origin: self.dtype_origin,
        })
    }

    /// Deterministic subsample: the first `n` rows.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n {
            return Err(Error::InvalidParameter(format!(
                "prefix of {n} rows requested from a set of {} rows",
                self.n
            )));
        }
        Ok(Self {
            data: self.data[..n * self.dim].to_vec(),
            n,
            dim: self.dim,
            label: self.label.clone(),
            dtype_origin: self.dtype_origin,
        })
    }

    /// Gathers the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidParameter(format!(
                    "row index {i} out of range for {} rows",
                    self.n
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::with_origin(data, indices.len(), self.dim, self.label.clone(), self.dtype_origin)
    }

    /// Applies `f` to every entry, e.g. a translation or a change of precision.
    pub fn map<U: Scalar>(&self, mut f: impl FnMut(usize, T) -> U) -> Result<EmbeddingSet<U>> {
        let dim = self.dim;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(idx % dim, v))
            .collect();
        EmbeddingSet::with_origin(data, self.n, self.dim, self.label.clone(), self.dtype_origin)
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingSet<U> {
        EmbeddingSet {
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
            n: self.n,
            dim: self.dim,
            label: self.label.clone(),
            dtype_origin: self.dtype_origin,
        }
    }
}

/// On-disk embedding format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Npy,
    RawBin,
}

impl Format {
    /// Sniffs the format from the leading magic bytes.
    pub fn detect(prefix: &[u8]) -> Option<Format> {
        if prefix.starts_with(&NPY_MAGIC) {
            Some(Format::Npy)
        } else if prefix.starts_with(&RAWBIN_MAGIC) {
            Some(Format::RawBin)
        } else {
            None
        }
    }

    /// Guesses from the file extension; anything other than `.npy` is rawbin.
    pub fn from_extension(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("npy") => Format::Npy,
            _ => Format::RawBin,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "npy" => Ok(Format::Npy),
            "rawbin" | "bin" | "gmeb" => Ok(Format::RawBin),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// Decoded payload prior to validation.
pub(crate) struct RawMatrix {
    pub values: Vec<f64>,
    pub n: usize,
    pub dim: usize,
    pub dtype: Dtype,
}

pub(crate) fn decode_payload<R: Read>(
    reader: &mut R,
    n: usize,
    dim: usize,
    dtype: Dtype,
) -> Result<RawMatrix> {
    let len = n
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(dtype.size()))
        .ok_or_else(|| Error::Format(format!("shape ({n}, {dim}) overflows")))?;
    let mut bytes = Vec::new();
    reader.take(len as u64).read_to_end(&mut bytes)?;
    if bytes.len() != len {
        return Err(Error::Format(format!(
            "payload truncated: expected {len} bytes, found {}",
            bytes.len()
        )));
    }
    let values = match dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    Ok(RawMatrix {
        values,
        n,
        dim,
        dtype,
    })
}

pub(crate) fn encode_payload<T: Scalar, W: Write>(writer: &mut W, set: &EmbeddingSet<T>) -> Result<()> {
    for &v in set.as_slice() {
        match T::DTYPE {
            Dtype::F32 => writer.write_all(&(v.as_f64() as f32).to_le_bytes())?,
            Dtype::F64 => writer.write_all(&v.as_f64().to_le_bytes())?,
        }
    }
    Ok(())
}

/// Reads an embedding matrix from a stream, promoting it to `f64`.
pub fn read_embeddings<R: Read>(reader: &mut R, format: Format) -> Result<EmbeddingSet<f64>> {
    let raw = match format {
        Format::Npy => npy::read(reader)?,
        Format::RawBin => rawbin::read(reader)?,
    };
    EmbeddingSet::with_origin(raw.values, raw.n, raw.dim, "", raw.dtype)
}

/// Writes `set` in its own precision (`f32` sets as `<f4`, `f64` as `<f8`).
pub fn write_embeddings<T: Scalar, W: Write>(
    writer: &mut W,
    set: &EmbeddingSet<T>,
    format: Format,
) -> Result<()> {
    match format {
        Format::Npy => npy::write(writer, set),
        Format::RawBin => rawbin::write(writer, set),
    }
}

/// Loads an embedding file. The label defaults to the file stem.
pub fn load_embeddings(path: impl AsRef<Path>, format: Format) -> Result<EmbeddingSet<f64>> {
    let path = path.as_ref();
    let mut reader = BufReader::new(File::open(path)?);
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(read_embeddings(&mut reader, format)?.with_label(label))
}

/// Loads an embedding file, detecting the format from its magic bytes.
pub fn load_embeddings_auto(path: impl AsRef<Path>) -> Result<EmbeddingSet<f64>> {
    let path = path.as_ref();
    let mut head = [0u8; 6];
    let mut file = File::open(path)?;
    let got = file.read(&mut head)?;
    let format = Format::detect(&head[..got]).ok_or_else(|| {
        Error::Format(format!("{}: neither an npy nor a GMEB file", path.display()))
    })?;
    load_embeddings(path, format)
}

pub fn save_embeddings<T: Scalar>(
    set: &EmbeddingSet<T>,
    path: impl AsRef<Path>,
    format: Format,
) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_embeddings(&mut writer, set, format)?;
    writer.flush()?;
    Ok(())
}
