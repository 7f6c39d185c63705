//! File formats: binary tensors, CSV matrices, index lists and JSON documents.

mod tensor;
mod text;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EmbeddingMatrix;

pub use tensor::{
    decode, decode_header, encode, read_matrix, read_predictions, read_tensor, write_matrix,
    write_predictions, Tensor, TensorFileHeader, DTYPE_F32, MAGIC, VERSION,
};
pub use text::{
    format_csv_matrix, format_index_set, parse_csv_matrix, parse_index_set, read_csv_matrix,
    read_index_set, write_csv_matrix, write_index_set,
};

/// Reads an embedding matrix from `.csv` or `ALTF` depending on the extension.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_csv_matrix(path)
    } else {
        read_matrix(path)
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}
