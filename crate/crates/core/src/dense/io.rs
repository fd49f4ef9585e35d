//! Matrix and vector file formats.
//!
//! CSV: one matrix row per line, `,` separated, `.` decimal, no header.
//! Binary (`DMAT`): magic `"DMAT"`, little-endian u64 row count, u64
//! column count, then the column-major f64 payload, little-endian.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::Error;
use crate::Result;

const DMAT_MAGIC: &[u8; 4] = b"DMAT";

/// Parses a CSV matrix from a reader.
pub fn read_csv<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("cannot parse {:?} as a number", field.trim()),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, message: "empty matrix file".into() });
    }
    DenseMatrix::from_rows(&rows)
}

/// Writes a matrix as CSV, one row per line.
pub fn write_csv<W: Write>(writer: &mut W, a: &DenseMatrix) -> Result<()> {
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if j > 0 {
                write!(writer, ",")?;
            }
            write!(writer, "{}", fmt_f64(a.get(i, j)))?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Reads a DMAT binary matrix.
pub fn read_dmat<R: Read>(mut reader: R) -> Result<DenseMatrix> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != DMAT_MAGIC {
        return Err(Error::Parse { line: 0, message: "bad magic, expected DMAT".into() });
    }
    let rows = read_u64(&mut reader)? as usize;
    let cols = read_u64(&mut reader)? as usize;
    let count = rows.checked_mul(cols).ok_or_else(|| Error::Parse {
        line: 0,
        message: "dimension overflow".into(),
    })?;
    let mut data = vec![0.0; count];
    let mut buf = [0u8; 8];
    for v in data.iter_mut() {
        reader.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    DenseMatrix::from_column_major(rows, cols, data)
}

/// Writes a matrix in the DMAT binary format.
pub fn write_dmat<W: Write>(writer: &mut W, a: &DenseMatrix) -> Result<()> {
    writer.write_all(DMAT_MAGIC)?;
    writer.write_all(&(a.rows() as u64).to_le_bytes())?;
    writer.write_all(&(a.cols() as u64).to_le_bytes())?;
    for &v in a.data() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Loads a matrix from a path, picking the format by content: DMAT if the
/// file starts with the magic bytes, CSV otherwise.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let bytes = std::fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == DMAT_MAGIC {
        read_dmat(&bytes[..])
    } else {
        read_csv(&bytes[..])
    }
}

/// Loads a vector: a single-column (or single-row) matrix file.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let a = read_matrix(path)?;
    if a.cols() == 1 {
        Ok(a.column(0).to_vec())
    } else if a.rows() == 1 {
        Ok((0..a.cols()).map(|j| a.get(0, j)).collect())
    } else {
        Err(Error::DimensionMismatch(format!(
            "expected a vector file, got a {}x{} matrix",
            a.rows(),
            a.cols()
        )))
    }
}

/// Writes a vector as single-column CSV.
pub fn write_vector<W: Write>(writer: &mut W, v: &[f64]) -> Result<()> {
    for &x in v {
        writeln!(writer, "{}", fmt_f64(x))?;
    }
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips.
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn read_u64<R: Read>(reader: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    reader.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_golden() {
        let a = read_csv("1,2.5\n-3,4e-2\n".as_bytes()).unwrap();
        assert_eq!(a.rows(), 2);
        assert_eq!(a.cols(), 2);
        assert_eq!(a.get(0, 1), 2.5);
        assert_eq!(a.get(1, 1), 0.04);

        let mut out = Vec::new();
        write_csv(&mut out, &a).unwrap();
        let b = read_csv(&out[..]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(matches!(
            read_csv("1,2\n3,abc\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(read_csv("".as_bytes()), Err(Error::Parse { .. })));
        assert!(read_csv("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn dmat_rejects_bad_magic() {
        assert!(matches!(
            read_dmat(&b"XMAT\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0"[..]),
            Err(Error::Parse { .. })
        ));
    }

    proptest! {
        #[test]
        fn dmat_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            let data: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
            let a = DenseMatrix::from_column_major(rows, cols, data).unwrap();
            let mut buf = Vec::new();
            write_dmat(&mut buf, &a).unwrap();
            let b = read_dmat(&buf[..]).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
