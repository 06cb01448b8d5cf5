use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix with finite entries.
///
/// Storage is column-major (nalgebra), but constructors accept row-major
/// slices so that `entries[r * cols + c]` is the `(r, c)` entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl Matrix {
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(
                "matrix needs at least one non-empty column".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for (j, column) in columns.iter().enumerate() {
            let column = column.as_ref();
            if column.len() != rows {
                return Err(Error::Shape(format!(
                    "column {j} has length {}, expected {rows}",
                    column.len()
                )));
            }
            data.extend_from_slice(column);
        }
        Self::from_dmatrix(DMatrix::from_vec(rows, cols, data))
    }

    pub fn from_dmatrix(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % inner.nrows(), pos / inner.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite entry {} at ({r}, {c})",
                inner[(r, c)]
            )));
        }
        Ok(Matrix(inner))
    }

    pub fn identity(n: usize) -> Self {
        Matrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        Self::from_dmatrix(m)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let rows = self.rows();
        &self.0.as_slice()[j * rows..(j + 1) * rows]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Matrix {
        Matrix(self.0.transpose())
    }

    pub fn scaled(&self, factor: f64) -> Result<Matrix> {
        Matrix::from_dmatrix(&self.0 * factor)
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Matrix(&self.0 * &rhs.0))
    }

    /// `AᵀA`, the `cols × cols` Gram matrix of the columns.
    pub fn column_gram(&self) -> DMatrix<f64> {
        self.0.tr_mul(&self.0)
    }

    pub fn frobenius_norm_squared(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_slice_is_row_major() {
        let m = Matrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.column(1), &[2.0, 5.0]);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            Matrix::from_row_slice(0, 2, &[]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            Matrix::from_row_slice(2, 2, &[1.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn columns_constructor() {
        let m = Matrix::from_columns(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert!(Matrix::from_columns(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
