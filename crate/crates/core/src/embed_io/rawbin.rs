//! GMEB rawbin: `b"GMEB"`, `u32` rows, `u32` columns, `u32` dtype code
//! (4 = f32, 8 = f64), then the little-endian row-major payload.

use std::io::{Read, Write};

use super::{decode_payload, encode_payload, EmbeddingSet, RawMatrix};
use crate::error::{Error, Result};
use crate::scalar::{Dtype, Scalar};

pub const RAWBIN_MAGIC: [u8; 4] = *b"GMEB";

fn dtype_code(dtype: Dtype) -> u32 {
    dtype.size() as u32
}

pub(super) fn read<R: Read>(reader: &mut R) -> Result<RawMatrix> {
    let mut header = [0u8; 16];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::Format("rawbin: file shorter than the 16-byte header".into()))?;
    if header[..4] != RAWBIN_MAGIC {
        return Err(Error::Format("rawbin: bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (n, dim, code) = (word(4) as usize, word(8) as usize, word(12));
    let dtype = match code {
        4 => Dtype::F32,
        8 => Dtype::F64,
        other => return Err(Error::Format(format!("rawbin: unknown dtype code {other}"))),
    };
    decode_payload(reader, n, dim, dtype)
}

pub(super) fn write<T: Scalar, W: Write>(writer: &mut W, set: &EmbeddingSet<T>) -> Result<()> {
    let as_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::Format(format!("rawbin: {v} does not fit in u32")))
    };
    writer.write_all(&RAWBIN_MAGIC)?;
    writer.write_all(&as_u32(set.n())?.to_le_bytes())?;
    writer.write_all(&as_u32(set.dim())?.to_le_bytes())?;
    writer.write_all(&dtype_code(T::DTYPE).to_le_bytes())?;
    encode_payload(writer, set)
}
