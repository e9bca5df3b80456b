//! Matrix Market reader and writer for dense real matrices.
//!
//! Reads `array` and `coordinate` layouts with `real`, `double` or `integer`
//! fields and `general` or `symmetric` symmetry. Symmetric files hold the
//! lower triangle only.

use std::io::Write;
use std::path::Path;

use saatrace::{Matrix, SymMatrix};

use crate::error::FormatError;

/// Row-major dense matrix as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn into_sym(self) -> Result<SymMatrix, FormatError> {
        if self.rows != self.cols {
            return Err(FormatError::Core(saatrace::Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            }));
        }
        Ok(SymMatrix::new(self.rows, self.data)?)
    }

    pub fn into_matrix(self) -> Result<Matrix, FormatError> {
        Ok(Matrix::new(self.rows, self.cols, self.data)?)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    Array,
    Coordinate,
}

fn number<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T, FormatError> {
    let token = token.ok_or_else(|| FormatError::parse(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| FormatError::parse(line, format!("bad {what} '{token}'")))
}

pub fn parse(text: &str) -> Result<Dense, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| FormatError::parse(1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let unsupported = || FormatError::Unsupported(header.trim().to_string());
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(unsupported());
    }
    let layout = match tokens[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        _ => return Err(unsupported()),
    };
    if !matches!(tokens[3].as_str(), "real" | "double" | "integer") {
        return Err(unsupported());
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        _ => return Err(unsupported()),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| FormatError::parse(1, "missing size line"))?;
    let mut it = size.split_whitespace();
    let rows: usize = number(it.next(), size_line, "row count")?;
    let cols: usize = number(it.next(), size_line, "column count")?;
    if symmetric && rows != cols {
        return Err(FormatError::parse(size_line, "symmetric matrix must be square"));
    }
    let mut data = vec![0.0; rows * cols];
    let mut put = |i: usize, j: usize, v: f64| {
        data[i * cols + j] = v;
        if symmetric {
            data[j * cols + i] = v;
        }
    };

    match layout {
        Layout::Array => {
            let order: Vec<(usize, usize)> = if symmetric {
                (0..cols).flat_map(|j| (j..rows).map(move |i| (i, j))).collect()
            } else {
                (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect()
            };
            let mut slots = order.into_iter();
            for (line, l) in body {
                for tok in l.split_whitespace() {
                    let (i, j) = slots
                        .next()
                        .ok_or_else(|| FormatError::parse(line, "more entries than the size line allows"))?;
                    put(i, j, number(Some(tok), line, "value")?);
                }
            }
            if slots.next().is_some() {
                return Err(FormatError::parse(size_line, "fewer entries than the size line declares"));
            }
        }
        Layout::Coordinate => {
            let nnz: usize = number(it.next(), size_line, "entry count")?;
            let mut seen = vec![false; rows * cols];
            let mut count = 0;
            for (line, l) in body {
                let mut t = l.split_whitespace();
                let i: usize = number(t.next(), line, "row index")?;
                let j: usize = number(t.next(), line, "column index")?;
                let v: f64 = number(t.next(), line, "value")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(FormatError::parse(line, format!("index ({i}, {j}) out of range")));
                }
                let (i, j) = (i - 1, j - 1);
                if symmetric && j > i {
                    return Err(FormatError::parse(line, "symmetric files store the lower triangle only"));
                }
                if std::mem::replace(&mut seen[i * cols + j], true) {
                    return Err(FormatError::parse(line, format!("duplicate entry ({}, {})", i + 1, j + 1)));
                }
                put(i, j, v);
                count += 1;
            }
            if count != nnz {
                return Err(FormatError::parse(
                    size_line,
                    format!("declared {nnz} entries, found {count}"),
                ));
            }
        }
    }
    Ok(Dense { rows, cols, data })
}

pub fn read(path: &Path) -> Result<Dense, FormatError> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn read_sym(path: &Path) -> Result<SymMatrix, FormatError> {
    read(path)?.into_sym()
}

pub fn read_matrix(path: &Path) -> Result<Matrix, FormatError> {
    read(path)?.into_matrix()
}

/// Coordinate symmetric layout, every lower-triangle entry written.
pub fn write_sym<W: Write>(mut w: W, a: &SymMatrix) -> Result<(), FormatError> {
    let m = a.dim();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{m} {m} {}", m * (m + 1) / 2)?;
    for j in 0..m {
        for i in j..m {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, a.get(i, j))?;
        }
    }
    Ok(())
}

/// Array general layout, column-major.
pub fn write_matrix<W: Write>(mut w: W, a: &Matrix) -> Result<(), FormatError> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{:e}", a.get(i, j))?;
        }
    }
    Ok(())
}
