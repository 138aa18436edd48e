//! Matrix text format.
//!
//! Line 1: `n d` (two base-10 integers). Lines 2..n+1: `d` decimal floats,
//! space-separated. Floats are written with 17 significant digits so parsing
//! a written file and re-emitting it is byte-identical.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Formats one f64 with 17 significant digits (full round-trip).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a matrix in the text format.
pub fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format_f64(m[(i, j)]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads a matrix in the text format.
pub fn read_matrix<R: BufRead>(r: &mut R) -> Result<DMatrix<f64>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?
        .map_err(Error::Io)?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "expected row count".into(),
        })?;
    let d: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "expected column count".into(),
        })?;
    if parts.next().is_some() {
        return Err(Error::Parse {
            line: 1,
            msg: "trailing tokens after `n d`".into(),
        });
    }
    if n == 0 || d == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("dimensions must be positive, got {n} {d}"),
        });
    }
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let line_no = i + 2;
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected {n} data rows, found {i}"),
            })?
            .map_err(Error::Io)?;
        let mut count = 0;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid float `{tok}`"),
            })?;
            data.push(v);
            count += 1;
        }
        if count != d {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {d} values, found {count}"),
            });
        }
    }
    Ok(DMatrix::from_row_slice(n, d, &data))
}

/// Convenience wrapper reading from a file path.
pub fn read_matrix_file(path: &std::path::Path) -> Result<DMatrix<f64>> {
    let file = std::fs::File::open(path)?;
    read_matrix(&mut std::io::BufReader::new(file))
}

/// Convenience wrapper writing to a file path.
pub fn write_matrix_file(path: &std::path::Path, m: &DMatrix<f64>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_matrix(&mut file, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn round_trip_is_byte_identical() {
        let m = dmatrix![1.0, -0.5, 3.25e-17; 0.1 + 0.2, 1e300, -7.0];
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let parsed = read_matrix(&mut buf.as_slice()).unwrap();
        assert_eq!(parsed, m);
        let mut buf2 = Vec::new();
        write_matrix(&mut buf2, &parsed).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rejects_bad_header() {
        let input = b"2\n1 2\n3 4\n";
        assert!(matches!(
            read_matrix(&mut input.as_slice()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_short_row() {
        let input = b"2 2\n1.0 2.0\n3.0\n";
        assert!(matches!(
            read_matrix(&mut input.as_slice()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn rejects_bad_float() {
        let input = b"1 2\n1.0 abc\n";
        let err = read_matrix(&mut input.as_slice()).unwrap_err();
        assert!(err.to_string().contains("abc"));
    }
}
