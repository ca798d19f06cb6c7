//! Minimal npy v1.0 codec: 2-D, C order, little-endian `<f4` / `<f8` only.

use std::io::{Read, Write};

use super::{decode_payload, encode_payload, EmbeddingSet, RawMatrix};
use crate::error::{Error, Result};
use crate::scalar::{Dtype, Scalar};

pub const NPY_MAGIC: [u8; 6] = *b"\x93NUMPY";

/// Header plus preamble length is padded to a multiple of this.
const ALIGN: usize = 64;

fn malformed(msg: impl Into<String>) -> Error {
    Error::Format(format!("npy: {}", msg.into()))
}

pub(super) fn read<R: Read>(reader: &mut R) -> Result<RawMatrix> {
    let mut preamble = [0u8; 10];
    reader
        .read_exact(&mut preamble)
        .map_err(|_| malformed("file shorter than the preamble"))?;
    if preamble[..6] != NPY_MAGIC {
        return Err(malformed("bad magic"));
    }
    if (preamble[6], preamble[7]) != (1, 0) {
        return Err(malformed(format!(
            "unsupported version {}.{} (only 1.0)",
            preamble[6], preamble[7]
        )));
    }
    let header_len = u16::from_le_bytes([preamble[8], preamble[9]]) as usize;
    let mut header = vec![0u8; header_len];
    reader
        .read_exact(&mut header)
        .map_err(|_| malformed("truncated header"))?;
    let header = std::str::from_utf8(&header).map_err(|_| malformed("header is not ASCII"))?;
    let (dtype, fortran, shape) = parse_header(header)?;
    if fortran {
        return Err(malformed("fortran_order arrays are not supported"));
    }
    let [n, dim] = shape[..] else {
        return Err(malformed(format!("expected a 2-D array, shape has {} dims", shape.len())));
    };
    decode_payload(reader, n, dim, dtype)
}

pub(super) fn write<T: Scalar, W: Write>(writer: &mut W, set: &EmbeddingSet<T>) -> Result<()> {
    let descr = match T::DTYPE {
        Dtype::F32 => "<f4",
        Dtype::F64 => "<f8",
    };
    let mut header = format!(
        "{{'descr': '{descr}', 'fortran_order': False, 'shape': ({}, {}), }}",
        set.n(),
        set.dim()
    );
    let unpadded = NPY_MAGIC.len() + 4 + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.extend(std::iter::repeat(' ').take(pad));
    header.push('\n');

    writer.write_all(&NPY_MAGIC)?;
    writer.write_all(&[1, 0])?;
    writer.write_all(&(header.len() as u16).to_le_bytes())?;
    writer.write_all(header.as_bytes())?;
    encode_payload(writer, set)
}

/// Extracts `(dtype, fortran_order, shape)` from the Python dict literal.
fn parse_header(header: &str) -> Result<(Dtype, bool, Vec<usize>)> {
    let body = header.trim().trim_end_matches('\n').trim();
    let body = body
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .ok_or_else(|| malformed("header is not a dict literal"))?;

    let descr = value_after(body, "descr")?;
    let descr = descr
        .split(|c| c == ',' || c == '}')
        .next()
        .unwrap_or("")
        .trim()
        .trim_matches(|c| c == '\'' || c == '"');
    let dtype = match descr {
        "<f4" => Dtype::F32,
        "<f8" => Dtype::F64,
        other => return Err(malformed(format!("unsupported dtype {other:?} (need <f4 or <f8)"))),
    };

    let fortran = value_after(body, "fortran_order")?;
    let fortran = if fortran.starts_with("False") {
        false
    } else if fortran.starts_with("True") {
        true
    } else {
        return Err(malformed("fortran_order is not a boolean"));
    };

    let shape = value_after(body, "shape")?;
    let shape = shape
        .strip_prefix('(')
        .and_then(|s| s.split_once(')'))
        .map(|(inner, _)| inner)
        .ok_or_else(|| malformed("shape is not a tuple"))?;
    let shape = shape
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| malformed(format!("bad shape entry {s:?}"))))
        .collect::<Result<Vec<_>>>()?;

    Ok((dtype, fortran, shape))
}

/// Returns the text following `'key':`.
fn value_after<'a>(body: &'a str, key: &str) -> Result<&'a str> {
    for quote in ['\'', '"'] {
        let needle = format!("{quote}{key}{quote}");
        if let Some(pos) = body.find(&needle) {
            let rest = body[pos + needle.len()..].trim_start();
            let rest = rest
                .strip_prefix(':')
                .ok_or_else(|| malformed(format!("missing ':' after {key}")))?;
            return Ok(rest.trim_start());
        }
    }
    Err(malformed(format!("header lacks key {key:?}")))
}
