//! Plain-text formats: headerless numeric CSV matrices and newline-separated
//! index lists.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, IndexSet};

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

/// Parses a rectangular, headerless CSV of decimal numbers. Blank lines are
/// skipped; line numbers in errors are 1-based.
pub fn parse_csv_matrix(text: &str) -> Result<EmbeddingMatrix> {
    let mut width = None;
    let mut n_rows = 0;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let start = values.len();
        for token in line.split(',').map(str::trim) {
            let value: f32 = token.parse().map_err(|_| Error::ParseNumber {
                line: lineno,
                token: token.to_owned(),
            })?;
            values.push(value);
        }
        let fields = values.len() - start;
        match width {
            None => width = Some(fields),
            Some(expected) if expected != fields => {
                return Err(Error::RaggedRow {
                    line: lineno,
                    expected,
                    actual: fields,
                })
            }
            Some(_) => {}
        }
        n_rows += 1;
    }
    EmbeddingMatrix::new(n_rows, width.unwrap_or(0), values)
}

/// Formats a matrix as CSV with 9 significant digits per value, which
/// reproduces every `f32` exactly.
pub fn format_csv_matrix(matrix: &EmbeddingMatrix) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:.8e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    parse_csv_matrix(&read_string(path.as_ref())?)
}

pub fn write_csv_matrix(path: impl AsRef<Path>, matrix: &EmbeddingMatrix) -> Result<()> {
    write_string(path.as_ref(), &format_csv_matrix(matrix))
}

/// One non-negative decimal index per line; blank lines are skipped.
pub fn parse_index_set(text: &str) -> Result<IndexSet> {
    let mut set = IndexSet::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        if !line.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::ParseIndex {
                line: lineno,
                token: line.to_owned(),
            });
        }
        let index = line.parse().map_err(|_| Error::ParseIndex {
            line: lineno,
            token: line.to_owned(),
        })?;
        set.push(index)?;
    }
    Ok(set)
}

pub fn format_index_set(set: &IndexSet) -> String {
    set.iter().fold(String::new(), |mut out, i| {
        writeln!(out, "{i}").unwrap();
        out
    })
}

pub fn read_index_set(path: impl AsRef<Path>) -> Result<IndexSet> {
    parse_index_set(&read_string(path.as_ref())?)
}

pub fn write_index_set(path: impl AsRef<Path>, set: &IndexSet) -> Result<()> {
    write_string(path.as_ref(), &format_index_set(set))
}
