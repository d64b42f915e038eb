//! Direct sparse factorization of complex operators.
//!
//! The matrix is reordered with reverse Cuthill–McKee and factorized as a
//! band matrix with partial row pivoting (LAPACK `gbtrf` layout). FEM
//! operators on structured meshes have a narrow profile after reordering, so
//! the band holds all fill.

use num_complex::Complex64;
use rayon::prelude::*;

use super::dense::{norm2, DenseComplexBlock};
use super::ordering::reverse_cuthill_mckee;
use super::sparse::SparseMatrixComplex;
use crate::error::{MorError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative pivot threshold below which an operator is declared singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-14;

/// Which operator a solve applies the inverse of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    NoTranspose,
    Transpose,
    ConjTranspose,
}

/// Reusable LU factorization of a square sparse complex matrix.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    /// new index -> original index
    perm: Vec<usize>,
    kl: usize,
    ku: usize,
    ldab: usize,
    band: Vec<Complex64>,
    ipiv: Vec<usize>,
    norm1: f64,
    cond_estimate: f64,
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ordering applied before factorization (new index -> original index).
    pub fn ordering(&self) -> &[usize] {
        &self.perm
    }

    /// Lower and upper bandwidth of the reordered matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.cond_estimate
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.band[j * self.ldab + self.kl + self.ku + i - j]
    }

    /// Solves `op(A) x = b` for one right-hand side.
    pub fn solve(&self, b: &[Complex64], op: Op) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(MorError::ShapeError(format!(
                "right-hand side length {} does not match operator dimension {}",
                b.len(),
                self.n
            )));
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&old| b[old]).collect();
        match op {
            Op::NoTranspose => self.solve_permuted(&mut x),
            Op::Transpose => self.solve_permuted_transposed(&mut x, false),
            Op::ConjTranspose => self.solve_permuted_transposed(&mut x, true),
        }
        let mut out = vec![ZERO; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        Ok(out)
    }

    fn solve_permuted(&self, b: &mut [Complex64]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != ZERO {
                let km = self.kl.min(n - 1 - j);
                for i in j + 1..=j + km {
                    b[i] -= self.at(i, j) * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            if bj != ZERO {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.at(i, j) * bj;
                }
            }
        }
    }

    fn solve_permuted_transposed(&self, b: &mut [Complex64], conj: bool) {
        let n = self.n;
        let kv = self.kl + self.ku;
        let f = |z: Complex64| if conj { z.conj() } else { z };
        // Uᵀ z = b
        for j in 0..n {
            let mut acc = b[j];
            for i in j.saturating_sub(kv)..j {
                acc -= f(self.at(i, j)) * b[i];
            }
            b[j] = acc / f(self.at(j, j));
        }
        // Lᵀ with interchanges in reverse order
        for j in (0..n).rev() {
            let km = self.kl.min(n - 1 - j);
            let mut acc = b[j];
            for i in j + 1..=j + km {
                acc -= f(self.at(i, j)) * b[i];
            }
            b[j] = acc;
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }

    /// Solves for every column of `rhs`; columns are processed in parallel.
    pub fn solve_block(&self, rhs: &DenseComplexBlock) -> Result<DenseComplexBlock> {
        if rhs.nrows() != self.n {
            return Err(MorError::ShapeError(format!(
                "block has {} rows, operator dimension is {}",
                rhs.nrows(),
                self.n
            )));
        }
        let cols: Vec<Vec<Complex64>> = (0..rhs.ncols())
            .into_par_iter()
            .map(|j| self.solve(rhs.column(j), Op::NoTranspose))
            .collect::<Result<_>>()?;
        DenseComplexBlock::from_columns(self.n, &cols)
    }

    /// Hager–Higham estimate of ‖A⁻¹‖₁.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x, Op::NoTranspose).expect("length checked");
            let y_norm1: f64 = y.iter().map(|v| v.norm()).sum();
            if y_norm1 <= estimate {
                break;
            }
            estimate = y_norm1;
            let xi: Vec<Complex64> = y
                .iter()
                .map(|v| if v.norm() > 0.0 { v / v.norm() } else { Complex64::new(1.0, 0.0) })
                .collect();
            let z = self.solve(&xi, Op::ConjTranspose).expect("length checked");
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![ZERO; n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        estimate
    }

    /// ‖A x − b‖₂ / ‖b‖₂ for a candidate solution.
    pub fn relative_residual(a: &SparseMatrixComplex, x: &[Complex64], b: &[Complex64]) -> f64 {
        let ax = a.mul_vec(x);
        let r: Vec<Complex64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
        let bn = norm2(b);
        if bn == 0.0 {
            norm2(&r)
        } else {
            norm2(&r) / bn
        }
    }
}

/// Factorizes a square sparse complex matrix with a bandwidth-reducing ordering.
pub fn factorize(a: &SparseMatrixComplex) -> Result<Factorization> {
    let (nrows, ncols) = a.shape();
    if nrows != ncols {
        return Err(MorError::ShapeError(format!(
            "factorize needs a square matrix, got {nrows}x{ncols}"
        )));
    }
    let n = nrows;
    let max_abs = a.max_abs();
    if n == 0 {
        return Err(MorError::SingularOperator("empty operator".into()));
    }
    if max_abs == 0.0 {
        return Err(MorError::SingularOperator("zero matrix".into()));
    }

    let mut adjacency = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    for nb in &mut adjacency {
        nb.sort_unstable();
        nb.dedup();
    }
    let perm = reverse_cuthill_mckee(&adjacency);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }

    let (mut kl, mut ku) = (0usize, 0usize);
    for (i, j, _) in a.triplets() {
        let (pi, pj) = (inv[i], inv[j]);
        if pi > pj {
            kl = kl.max(pi - pj);
        } else {
            ku = ku.max(pj - pi);
        }
    }
    let kv = kl + ku;
    let ldab = 2 * kl + ku + 1;
    let mut band = vec![ZERO; ldab * n];
    for (i, j, v) in a.triplets() {
        let (pi, pj) = (inv[i], inv[j]);
        band[pj * ldab + kv + pi - pj] += v;
    }

    let threshold = SINGULAR_PIVOT_TOL * max_abs;
    let mut ipiv = vec![0usize; n];
    let idx = |i: usize, j: usize| j * ldab + kv + i - j;
    let mut ju = 0usize;
    for j in 0..n {
        let km = kl.min(n - 1 - j);
        let mut jp = 0;
        let mut pmax = -1.0;
        for p in 0..=km {
            let v = band[idx(j + p, j)].norm();
            if v > pmax {
                pmax = v;
                jp = p;
            }
        }
        if !(pmax > threshold) {
            return Err(MorError::SingularOperator(format!(
                "pivot {j} has magnitude {pmax:e} (threshold {threshold:e})"
            )));
        }
        ipiv[j] = j + jp;
        ju = ju.max((j + ku + jp).min(n - 1));
        if jp != 0 {
            for c in j..=ju {
                band.swap(idx(j, c), idx(j + jp, c));
            }
        }
        let inv_pivot = 1.0 / band[idx(j, j)];
        for p in 1..=km {
            band[idx(j + p, j)] *= inv_pivot;
        }
        for c in j + 1..=ju {
            let a_jc = band[idx(j, c)];
            if a_jc == ZERO {
                continue;
            }
            for p in 1..=km {
                let l = band[idx(j + p, j)];
                band[idx(j + p, c)] -= l * a_jc;
            }
        }
    }

    let norm1 = {
        let mut cols = vec![0.0; n];
        for (_, j, v) in a.triplets() {
            cols[j] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    };
    let mut f = Factorization {
        n,
        perm,
        kl,
        ku,
        ldab,
        band,
        ipiv,
        norm1,
        cond_estimate: f64::NAN,
    };
    f.cond_estimate = f.norm1 * f.inverse_norm1_estimate();
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::CsrMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = CsrMatrix::identity(4, c(1.0, 0.0));
        let f = factorize(&a).unwrap();
        let b = vec![c(1.0, 2.0), c(-3.0, 0.0), c(0.0, 1.0), c(5.0, -5.0)];
        assert_eq!(f.solve(&b, Op::NoTranspose).unwrap(), b);
    }

    #[test]
    fn diagonal_example() {
        let a = CsrMatrix::from_triplets(&[(0, 0, c(2.0, 0.0)), (1, 1, c(0.0, 4.0))], 2, 2).unwrap();
        let f = factorize(&a).unwrap();
        let x = f.solve(&[c(2.0, 0.0), c(0.0, 4.0)], Op::NoTranspose).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(1.0, 0.0)).norm() < 1e-15);
        let block = DenseComplexBlock::from_columns(2, &[vec![c(2.0, 0.0), c(0.0, 4.0)], vec![c(4.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let xb = f.solve_block(&block).unwrap();
        assert!((xb[(0, 1)] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((xb[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_matrix_is_singular() {
        let a: SparseMatrixComplex = CsrMatrix::zeros(3, 3);
        assert!(matches!(factorize(&a), Err(MorError::SingularOperator(_))));
    }

    #[test]
    fn structurally_singular_is_detected() {
        let a = CsrMatrix::from_triplets(&[(0, 0, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))], 2, 2).unwrap();
        assert!(matches!(factorize(&a), Err(MorError::SingularOperator(_))));
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = CsrMatrix::from_triplets(
            &[(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0)), (1, 2, c(0.0, 2.0)), (2, 1, c(3.0, 0.0)), (2, 2, c(1.0, 0.0))],
            3,
            3,
        )
        .unwrap();
        let f = factorize(&a).unwrap();
        let b = vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)];
        for op in [Op::NoTranspose, Op::Transpose, Op::ConjTranspose] {
            let x = f.solve(&b, op).unwrap();
            let at = match op {
                Op::NoTranspose => a.clone(),
                Op::Transpose => a.transpose(),
                Op::ConjTranspose => a.transpose().map(|v| v.conj()),
            };
            assert!(Factorization::relative_residual(&at, &x, &b) < 1e-14, "{op:?}");
        }
    }

    #[test]
    fn rhs_length_mismatch() {
        let f = factorize(&CsrMatrix::identity(2, c(1.0, 0.0))).unwrap();
        assert!(matches!(f.solve(&[c(1.0, 0.0)], Op::NoTranspose), Err(MorError::ShapeError(_))));
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        let a = CsrMatrix::from_triplets(&[(0, 0, c(1.0, 0.0)), (1, 1, c(0.0, 1e-3))], 2, 2).unwrap();
        let f = factorize(&a).unwrap();
        assert!((f.condition_estimate() - 1e3).abs() < 1e-9);
    }
}
