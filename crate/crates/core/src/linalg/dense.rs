//! Column-major dense complex blocks and a partially pivoted LU.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{MorError, Result};

/// Dense complex matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseComplexBlock {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex64>,
}

impl DenseComplexBlock {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![Complex64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn from_column_major(nrows: usize, ncols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(MorError::ShapeError(format!(
                "{} values for a {}x{} block",
                data.len(),
                nrows,
                ncols
            )));
        }
        Ok(Self { nrows, ncols, data })
    }

    /// Stacks equally long columns side by side.
    pub fn from_columns(nrows: usize, columns: &[Vec<Complex64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != nrows {
                return Err(MorError::ShapeError(format!(
                    "column {j} has length {}, expected {nrows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Self {
            nrows,
            ncols: columns.len(),
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        (0..self.ncols).map(move |j| self.column(j))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for j in 0..self.ncols {
            for i in 0..self.nrows {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.ncols != rhs.nrows {
            return Err(MorError::ShapeError(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let mut out = Self::zeros(self.nrows, rhs.ncols);
        for j in 0..rhs.ncols {
            let dst = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for (l, &b) in rhs.column(j).iter().enumerate() {
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (d, &a) in dst.iter_mut().zip(self.column(l)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            for (yi, &a) in y.iter_mut().zip(self.column(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// Copy of the leading `rows x cols` sub-block.
    pub fn leading(&self, rows: usize, cols: usize) -> Self {
        assert!(rows <= self.nrows && cols <= self.ncols);
        let mut out = Self::zeros(rows, cols);
        for j in 0..cols {
            out.column_mut(j).copy_from_slice(&self.column(j)[..rows]);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise `self - rhs`.
    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if (self.nrows, self.ncols) != (rhs.nrows, rhs.ncols) {
            return Err(MorError::ShapeError("sub: shape mismatch".into()));
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl Index<(usize, usize)> for DenseComplexBlock {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseComplexBlock {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

/// LU decomposition with partial pivoting of a dense square complex matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseComplexBlock,
    pivots: Vec<usize>,
}

impl DenseLu {
    /// Factorizes `a`; pivots below `rel_tol * max|a|` are reported singular.
    pub fn new(a: &DenseComplexBlock, rel_tol: f64) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(MorError::ShapeError(format!(
                "LU needs a square matrix, got {}x{}",
                a.nrows, a.ncols
            )));
        }
        let n = a.nrows;
        let threshold = rel_tol * a.max_abs();
        let mut lu = a.clone();
        let mut pivots = vec![0; n];
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > threshold) {
                return Err(MorError::SingularOperator(format!(
                    "dense pivot {k} has magnitude {pmax:e}"
                )));
            }
            pivots[k] = p;
            if p != k {
                for j in 0..n {
                    let col = lu.column_mut(j);
                    col.swap(k, p);
                }
            }
            let inv = 1.0 / lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] *= inv;
            }
            for j in k + 1..n {
                let akj = lu[(k, j)];
                if akj == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (left, right) = lu.data.split_at_mut(j * n);
                let lcol = &left[k * n..(k + 1) * n];
                let col = &mut right[..n];
                for i in k + 1..n {
                    col[i] -= lcol[i] * akj;
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.pivots[k]);
        }
        for j in 0..n {
            let bj = b[j];
            let col = self.lu.column(j);
            for i in j + 1..n {
                b[i] -= col[i] * bj;
            }
        }
        for j in (0..n).rev() {
            let col = self.lu.column(j);
            b[j] /= col[j];
            let bj = b[j];
            for i in 0..j {
                b[i] -= col[i] * bj;
            }
        }
    }

    pub fn solve_block(&self, b: &DenseComplexBlock) -> Result<DenseComplexBlock> {
        if b.nrows != self.dim() {
            return Err(MorError::ShapeError(format!(
                "right-hand side has {} rows, expected {}",
                b.nrows,
                self.dim()
            )));
        }
        let mut x = b.clone();
        for j in 0..x.ncols {
            self.solve_in_place(x.column_mut(j));
        }
        Ok(x)
    }
}

/// Euclidean inner product `⟨a, b⟩ = aᴴ b`.
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
