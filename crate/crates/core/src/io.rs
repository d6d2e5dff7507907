//! Plain-text matrix files.
//!
//! Dense: a `dense <m> <n>` header, then `m` lines of `n` space-separated
//! values. Sparse: a `sparse <m> <n> <nnz>` header, then `nnz` lines
//! `<i> <j> <v>` with 0-based indices. Values are written in the shortest form
//! that parses back to the same `f64`, so dense files round-trip bitwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixFormat {
    Dense,
    Sparse,
}

/// Shortest of the plain and exponent forms; both parse back to `v` exactly.
pub fn format_value(v: f64) -> String {
    let plain = v.to_string();
    let exp = format!("{v:e}");
    if exp.len() < plain.len() {
        exp
    } else {
        plain
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_matrix(BufReader::new(File::open(path)?))
}

pub fn save_matrix(a: &DenseMatrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_matrix(a, format, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_matrix(a: &DenseMatrix, format: MatrixFormat, out: &mut impl Write) -> Result<()> {
    let (m, n) = a.shape();
    match format {
        MatrixFormat::Dense => {
            writeln!(out, "dense {m} {n}")?;
            for i in 0..m {
                let mut line = String::new();
                for (j, v) in a.row(i).iter().enumerate() {
                    if j > 0 {
                        line.push(' ');
                    }
                    line.push_str(&format_value(*v));
                }
                writeln!(out, "{line}")?;
            }
        }
        MatrixFormat::Sparse => {
            let nnz = a.as_slice().iter().filter(|&&v| v != 0.0).count();
            writeln!(out, "sparse {m} {n} {nnz}")?;
            for i in 0..m {
                for (j, &v) in a.row(i).iter().enumerate() {
                    if v != 0.0 {
                        writeln!(out, "{i} {j} {}", format_value(v))?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn read_matrix(mut input: impl Read) -> Result<DenseMatrix> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData => parse_err(0, "file is not valid UTF-8"),
        _ => Error::Io(e),
    })?;
    parse_matrix(&text)
}

fn field<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = field(tok, line, "value")?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

/// Parses a matrix file held in memory. Line numbers in errors are 1-based.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header = lines.next().unwrap_or("");
    let head: Vec<&str> = header.split_whitespace().collect();
    // a single trailing newline leaves one empty piece at the end
    let mut body: Vec<&str> = lines.collect();
    if body.last() == Some(&"") {
        body.pop();
    }
    match head.as_slice() {
        ["dense", m, n] => {
            let m: usize = field(m, 1, "row count")?;
            let n: usize = field(n, 1, "column count")?;
            parse_dense(m, n, &body)
        }
        ["sparse", m, n, nnz] => {
            let m: usize = field(m, 1, "row count")?;
            let n: usize = field(n, 1, "column count")?;
            let nnz: usize = field(nnz, 1, "entry count")?;
            parse_sparse(m, n, nnz, &body)
        }
        _ => Err(parse_err(1, format!("expected `dense <m> <n>` or `sparse <m> <n> <nnz>`, got `{header}`"))),
    }
}

fn parse_dense(m: usize, n: usize, body: &[&str]) -> Result<DenseMatrix> {
    let mut data = Vec::with_capacity(m.saturating_mul(n).min(1 << 24));
    for i in 0..m {
        let line_no = i + 2;
        let Some(line) = body.get(i) else {
            return Err(parse_err(line_no, format!("expected {m} rows, file ends after {i}")));
        };
        let start = data.len();
        for tok in line.split_whitespace() {
            if data.len() - start == n {
                return Err(parse_err(line_no, format!("more than {n} values")));
            }
            data.push(value(tok, line_no)?);
        }
        if data.len() - start != n {
            return Err(parse_err(line_no, format!("expected {n} values, found {}", data.len() - start)));
        }
    }
    if body.len() > m {
        return Err(parse_err(m + 2, "unexpected content after the last row"));
    }
    DenseMatrix::new(m, n, data)
}

fn parse_sparse(m: usize, n: usize, nnz: usize, body: &[&str]) -> Result<DenseMatrix> {
    let mut data = vec![0.0; m.checked_mul(n).ok_or_else(|| parse_err(1, "matrix too large"))?];
    let mut seen = vec![false; data.len()];
    for k in 0..nnz {
        let line_no = k + 2;
        let Some(line) = body.get(k) else {
            return Err(parse_err(line_no, format!("expected {nnz} entries, file ends after {k}")));
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [i, j, v] = toks.as_slice() else {
            return Err(parse_err(line_no, "expected `<i> <j> <v>`"));
        };
        let i: usize = field(i, line_no, "row index")?;
        let j: usize = field(j, line_no, "column index")?;
        if i >= m || j >= n {
            return Err(parse_err(line_no, format!("index ({i}, {j}) outside {m}×{n}")));
        }
        if seen[i * n + j] {
            return Err(parse_err(line_no, format!("duplicate entry ({i}, {j})")));
        }
        seen[i * n + j] = true;
        data[i * n + j] = value(v, line_no)?;
    }
    if body.len() > nnz {
        return Err(parse_err(nnz + 2, "unexpected content after the last entry"));
    }
    DenseMatrix::new(m, n, data)
}
