//! Compressed sparse row storage for real and complex matrices.

use std::ops::{AddAssign, Mul};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{MorError, Result};

/// Row-compressed sparse matrix.
///
/// Column indices are strictly increasing within each row and no explicit
/// duplicates are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

pub type SparseMatrixReal = CsrMatrix<f64>;
pub type SparseMatrixComplex = CsrMatrix<Complex64>;

impl<T> CsrMatrix<T>
where
    T: Copy + Zero + AddAssign,
{
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(entries: &[(usize, usize, T)], nrows: usize, ncols: usize) -> Result<Self> {
        for &(row, col, _) in entries {
            if row >= nrows || col >= ncols {
                return Err(MorError::InvalidIndex {
                    row,
                    col,
                    nrows,
                    ncols,
                });
            }
        }
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by_key(|&i| (entries[i].0, entries[i].1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for i in order {
            let (row, col, value) = entries[i];
            if last == Some((row, col)) {
                *values.last_mut().unwrap() += value;
            } else {
                col_idx.push(col);
                values.push(value);
                row_ptr[row + 1] += 1;
                last = Some((row, col));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize, one: T) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![one; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Iterates over `(col, value)` of the stored entries in `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterates over all stored `(row, col, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn transpose(&self) -> Self {
        let entries: Vec<(usize, usize, T)> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(&entries, self.ncols, self.nrows).expect("transpose indices in range")
    }

    /// Applies `f` to every stored value.
    pub fn map<U, F>(&self, f: F) -> CsrMatrix<U>
    where
        F: Fn(T) -> U,
    {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `y = A x` for any right-hand scalar that `T` multiplies into.
    pub fn mul_vec<X>(&self, x: &[X]) -> Vec<X>
    where
        T: Mul<X, Output = X>,
        X: Copy + Zero + AddAssign,
    {
        assert_eq!(x.len(), self.ncols, "mul_vec: length mismatch");
        (0..self.nrows)
            .map(|i| {
                let mut acc = X::zero();
                for (j, v) in self.row(i) {
                    acc += v * x[j];
                }
                acc
            })
            .collect()
    }

    /// `y = Aᵀ x`.
    pub fn mul_vec_transpose<X>(&self, x: &[X]) -> Vec<X>
    where
        T: Mul<X, Output = X>,
        X: Copy + Zero + AddAssign,
    {
        assert_eq!(x.len(), self.nrows, "mul_vec_transpose: length mismatch");
        let mut y = vec![X::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }
}

impl SparseMatrixReal {
    pub fn to_complex(&self) -> SparseMatrixComplex {
        self.map(|v| Complex64::new(v, 0.0))
    }

    /// Dense row-major copy, intended for small matrices and tests.
    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols && self.triplets().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Indices of rows holding at least one nonzero value.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        (0..self.nrows)
            .filter(|&i| self.row(i).any(|(_, v)| v != 0.0))
            .collect()
    }
}

impl SparseMatrixComplex {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Forms `Σ cᵢ Aᵢ` over real matrices of identical shape, with the union
/// sparsity pattern.
pub fn linear_combination(terms: &[(Complex64, &SparseMatrixReal)]) -> Result<SparseMatrixComplex> {
    let (nrows, ncols) = match terms.first() {
        Some((_, a)) => a.shape(),
        None => return Err(MorError::ShapeError("empty linear combination".into())),
    };
    for (_, a) in terms {
        if a.shape() != (nrows, ncols) {
            return Err(MorError::ShapeError(format!(
                "expected {}x{}, got {}x{}",
                nrows,
                ncols,
                a.nrows(),
                a.ncols()
            )));
        }
    }
    let entries: Vec<(usize, usize, Complex64)> = terms
        .iter()
        .flat_map(|&(c, a)| a.triplets().map(move |(i, j, v)| (i, j, c * v)))
        .collect();
    CsrMatrix::from_triplets(&entries, nrows, ncols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let a = SparseMatrixReal::from_triplets(&[], 2, 2).unwrap();
        assert_eq!(a.nnz(), 0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.shape(), (2, 2));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrixReal::from_triplets(&[(0, 0, 1.0), (0, 0, 2.0)], 1, 1).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 3.0);
    }

    #[test]
    fn identity_row_sums() {
        let t: Vec<_> = (0..3).map(|i| (i, i, 1.0)).collect();
        let a = SparseMatrixReal::from_triplets(&t, 3, 3).unwrap();
        assert_eq!(a, SparseMatrixReal::identity(3, 1.0));
        let ones = a.mul_vec(&[1.0, 1.0, 1.0]);
        assert_eq!(ones, vec![1.0; 3]);
    }

    #[test]
    fn out_of_range_index() {
        let err = SparseMatrixReal::from_triplets(&[(2, 0, 1.0)], 2, 2).unwrap_err();
        assert!(matches!(err, MorError::InvalidIndex { row: 2, .. }));
    }

    #[test]
    fn columns_sorted_within_rows() {
        let a = SparseMatrixReal::from_triplets(&[(0, 2, 1.0), (0, 0, 2.0), (1, 1, 3.0), (0, 1, 4.0)], 2, 3)
            .unwrap();
        assert_eq!(a.col_indices(), &[0, 1, 2, 1]);
        assert_eq!(a.row_ptr(), &[0, 3, 4]);
    }

    #[test]
    fn transpose_product_matches() {
        let a = SparseMatrixReal::from_triplets(&[(0, 1, 2.0), (1, 0, -1.0), (1, 2, 5.0)], 2, 3).unwrap();
        let x = [1.0, 2.0];
        assert_eq!(a.mul_vec_transpose(&x), a.transpose().mul_vec(&x));
    }

    #[test]
    fn linear_combination_shape_mismatch() {
        let a = SparseMatrixReal::identity(2, 1.0);
        let b = SparseMatrixReal::identity(3, 1.0);
        let one = Complex64::new(1.0, 0.0);
        assert!(matches!(
            linear_combination(&[(one, &a), (one, &b)]),
            Err(MorError::ShapeError(_))
        ));
    }
}
