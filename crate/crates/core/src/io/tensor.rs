//! `ALTF` binary tensor files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes    | field                                   |
//! |----------|-----------------------------------------|
//! | 4        | magic `b"ALTF"`                         |
//! | 2        | version, `u16` = 1                      |
//! | 1        | rank, `u8` ∈ {2, 3}                     |
//! | 8 × rank | dimensions, `u64` each                  |
//! | 1        | dtype, `u8` (0 = IEEE-754 binary32)     |
//! | ...      | payload, row-major `f32` values         |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, PredictionTensor};

pub const MAGIC: [u8; 4] = *b"ALTF";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 0;

/// Decoded contents of a tensor file.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Matrix(EmbeddingMatrix),
    Predictions(PredictionTensor),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorFileHeader {
    pub dims: Vec<u64>,
    pub dtype: u8,
}

impl TensorFileHeader {
    pub fn encoded_len(&self) -> usize {
        4 + 2 + 1 + 8 * self.dims.len() + 1
    }

    /// Payload size in bytes, `None` on overflow.
    pub fn payload_len(&self) -> Option<u64> {
        self.dims
            .iter()
            .try_fold(4u64, |acc, &d| acc.checked_mul(d))
    }
}

/// Serializes a rank-2 or rank-3 tensor.
pub fn encode(dims: &[usize], values: &[f32]) -> Vec<u8> {
    debug_assert_eq!(dims.iter().product::<usize>(), values.len());
    let mut out = Vec::with_capacity(8 + 8 * dims.len() + 4 * values.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dims.len() as u8);
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.push(DTYPE_F32);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_header(bytes: &[u8]) -> Result<TensorFileHeader> {
    let short = |needed: usize| Error::Truncated {
        expected: needed as u64,
        actual: bytes.len() as u64,
    };
    if bytes.len() < 4 {
        return Err(short(4));
    }
    let found: [u8; 4] = bytes[0..4].try_into().unwrap();
    if found != MAGIC {
        return Err(Error::BadMagic { found });
    }
    if bytes.len() < 7 {
        return Err(short(7));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let rank = bytes[6];
    if !(2..=3).contains(&rank) {
        return Err(Error::UnsupportedRank(rank));
    }
    let header_len = 7 + 8 * rank as usize + 1;
    if bytes.len() < header_len {
        return Err(short(header_len));
    }
    let dims = bytes[7..7 + 8 * rank as usize]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let dtype = bytes[header_len - 1];
    if dtype != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(dtype));
    }
    Ok(TensorFileHeader { dims, dtype })
}

/// Parses a whole file image, then applies the domain validation of the
/// matching type.
pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    let header = decode_header(bytes)?;
    let header_len = header.encoded_len() as u64;
    let expected = header
        .payload_len()
        .and_then(|p| p.checked_add(header_len))
        .unwrap_or(u64::MAX);
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::TrailingData {
            extra: actual - expected,
        });
    }
    let values: Vec<f32> = bytes[header_len as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let dims: Vec<usize> = header.dims.iter().map(|&d| d as usize).collect();
    match dims[..] {
        [n, d] => Ok(Tensor::Matrix(EmbeddingMatrix::new(n, d, values)?)),
        [n, k, c] => Ok(Tensor::Predictions(PredictionTensor::new_allowing_single(
            n, k, c, values,
        )?)),
        _ => unreachable!("rank checked in header"),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode(&read_bytes(path.as_ref())?)
}

/// Reads a rank-2 file.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    match read_tensor(path)? {
        Tensor::Matrix(m) => Ok(m),
        Tensor::Predictions(_) => Err(Error::WrongRank {
            expected: 2,
            actual: 3,
        }),
    }
}

/// Reads a rank-3 file. K = 1 is accepted here; operations that need
/// K ≥ 2 check it themselves.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionTensor> {
    match read_tensor(path)? {
        Tensor::Predictions(p) => Ok(p),
        Tensor::Matrix(_) => Err(Error::WrongRank {
            expected: 3,
            actual: 2,
        }),
    }
}

pub fn write_matrix(path: impl AsRef<Path>, matrix: &EmbeddingMatrix) -> Result<()> {
    write_bytes(
        path.as_ref(),
        &encode(&[matrix.n_samples(), matrix.dim()], matrix.values()),
    )
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &PredictionTensor) -> Result<()> {
    write_bytes(
        path.as_ref(),
        &encode(&predictions.dims(), predictions.values()),
    )
}
