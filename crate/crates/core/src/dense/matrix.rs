use crate::error::Error;
use crate::Result;

/// Dense real matrix in column-major storage.
///
/// Construction rejects empty dimensions and non-finite entries; a value
/// that exists is always safe to feed to the factorization machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major data.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: k % rows, col: k / rows });
            }
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from row slices (each inner slice is one row).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch("empty row list".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
        }
        let mut data = vec![0.0; m * n];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                data[j * m + i] = v;
            }
        }
        Self::from_column_major(m, n, data)
    }

    pub(crate) fn from_raw_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    /// Replaces column `j`; the new column must be finite.
    pub fn set_column(&mut self, j: usize, col: &[f64]) -> Result<()> {
        if col.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "column length {} does not match row count {}",
                col.len(),
                self.rows
            )));
        }
        for (i, &v) in col.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
        self.data[j * self.rows..(j + 1) * self.rows].copy_from_slice(col);
        Ok(())
    }

    /// Copies the listed columns (in the given order) into a new matrix.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::DimensionMismatch("empty column selection".into()));
        }
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for &j in indices {
            if j >= self.cols {
                return Err(Error::DimensionMismatch(format!(
                    "column index {j} out of range for {} columns",
                    self.cols
                )));
            }
            data.extend_from_slice(self.column(j));
        }
        Ok(DenseMatrix { rows: self.rows, cols: indices.len(), data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match column count {}",
                x.len(),
                self.cols
            )));
        }
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (yi, &aij) in y.iter_mut().zip(self.column(j)) {
                *yi += aij * xj;
            }
        }
        Ok(y)
    }

    /// `Aᵀ y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match row count {}",
                y.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (j, oj) in out.iter_mut().enumerate() {
            *oj = dot(self.column(j), y);
        }
        Ok(out)
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols).map(|j| norm2(self.column(j))).collect()
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            DenseMatrix::from_column_major(0, 2, vec![]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            DenseMatrix::from_column_major(2, 2, vec![1.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let err = DenseMatrix::from_column_major(2, 2, vec![1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(err, Err(Error::NonFiniteEntry { row: 1, col: 0 })));
        let err = DenseMatrix::from_column_major(2, 1, vec![1.0, f64::INFINITY]);
        assert!(matches!(err, Err(Error::NonFiniteEntry { row: 1, col: 0 })));
    }

    #[test]
    fn column_major_layout() {
        // [[1, 3], [2, 4]] stored as columns (1,2), (3,4)
        let a = DenseMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(a.column(0), &[1.0, 2.0]);
        assert_eq!(a.column(1), &[3.0, 4.0]);
        assert_eq!(a.get(0, 1), 3.0);
    }

    #[test]
    fn column_norms_identity() {
        let a = DenseMatrix::identity(3);
        assert_eq!(a.column_norms(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn column_norm_345() {
        let a = DenseMatrix::from_column_major(2, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(a.column_norms(), vec![5.0]);
    }

    #[test]
    fn matvec_and_transpose() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(a.mul_vec(&[1.0, -1.0]).unwrap(), vec![-1.0, -1.0, -1.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 1.0, 1.0]).unwrap(), vec![9.0, 12.0]);
        assert!(a.mul_vec(&[1.0]).is_err());
    }
}
