//! Text formats for matrix stages and MTF curves.
//!
//! Pure parsers on strings; reading files is the CLI crate's business.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Parse the plain-text array format: first line `N M`, then N rows of M
/// whitespace-separated decimals.
pub fn parse_matrix_text(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Input("matrix text is empty".into()))?;
    let mut parts = header.split_whitespace();
    let rows = parse_dim(parts.next(), "row count")?;
    let cols = parse_dim(parts.next(), "column count")?;
    if parts.next().is_some() {
        return Err(Error::Input(
            "matrix header must be exactly `N M`".into(),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(Error::Input(format!(
                "matrix text has more than the declared {rows} rows"
            )));
        }
        let mut count = 0;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::Input(format!("matrix row {}: bad number `{tok}`", i + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Input(format!(
                    "matrix row {}: non-finite entry {v}",
                    i + 1
                )));
            }
            data.push(v);
            count += 1;
        }
        if count != cols {
            return Err(Error::Input(format!(
                "matrix row {} has {count} entries, expected {cols}",
                i + 1
            )));
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Input(format!(
            "matrix text has {} rows, expected {rows}",
            data.len() / cols
        )));
    }
    Matrix::from_rows(rows, cols, data)
}

fn parse_dim(tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Input(format!("matrix header is missing the {what}")))?;
    let n: usize = tok
        .parse()
        .map_err(|_| Error::Input(format!("matrix header: bad {what} `{tok}`")))?;
    if n == 0 {
        return Err(Error::EmptyOperator);
    }
    Ok(n)
}

/// Render a matrix in the plain-text array format.
pub fn matrix_to_text(matrix: &Matrix) -> alloc::string::String {
    use core::fmt::Write;
    let mut out = alloc::string::String::new();
    let _ = writeln!(out, "{} {}", matrix.rows(), matrix.cols());
    for i in 0..matrix.rows() {
        let row = matrix.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.17e}");
        }
        out.push('\n');
    }
    out
}

/// Parse an MTF curve from CSV with header `frequency,magnitude`.
pub fn parse_mtf_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Input("mtf csv is empty".into()))?;
    let normalized: alloc::string::String =
        header.chars().filter(|c| !c.is_whitespace()).collect();
    if normalized != "frequency,magnitude" {
        return Err(Error::Input(format!(
            "mtf csv must start with header `frequency,magnitude`, got `{header}`"
        )));
    }
    let mut curve = Vec::new();
    for (lineno, line) in lines {
        let mut cells = line.split(',');
        let f = parse_cell(cells.next(), lineno + 1, "frequency")?;
        let m = parse_cell(cells.next(), lineno + 1, "magnitude")?;
        if cells.next().is_some() {
            return Err(Error::Input(format!(
                "mtf csv line {}: expected two columns",
                lineno + 1
            )));
        }
        curve.push((f, m));
    }
    if curve.is_empty() {
        return Err(Error::Input("mtf csv has no data rows".into()));
    }
    Ok(curve)
}

fn parse_cell(cell: Option<&str>, lineno: usize, what: &str) -> Result<f64> {
    let cell = cell
        .ok_or_else(|| Error::Input(format!("mtf csv line {lineno}: missing {what}")))?
        .trim();
    cell.parse()
        .map_err(|_| Error::Input(format!("mtf csv line {lineno}: bad {what} `{cell}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_text_round_trips() {
        let m = Matrix::from_fn(3, 3, |i, j| (i as f64 + 1.0) / (j as f64 + 2.0));
        let text = matrix_to_text(&m);
        let back = parse_matrix_text(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn matrix_text_diagnoses_row_length() {
        let err = parse_matrix_text("2 2\n1 2\n3\n").unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn mtf_csv_parses_and_validates_header() {
        let curve = parse_mtf_csv("frequency,magnitude\n0.0,1.0\n3.14,0.5\n").unwrap();
        assert_eq!(curve, alloc::vec![(0.0, 1.0), (3.14, 0.5)]);
        assert!(parse_mtf_csv("freq,mag\n0,1\n").is_err());
    }
}
