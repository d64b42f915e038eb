//! Sparse and dense linear algebra used by assembly, reduction and evaluation.

pub mod dense;
pub mod factor;
pub mod gram_schmidt;
pub mod mtx;
pub mod ordering;
pub mod sparse;

pub use dense::{dot_conj, norm2, DenseComplexBlock, DenseLu};
pub use factor::{factorize, Factorization, Op};
pub use gram_schmidt::{orthonormalize_against, DEFAULT_DEFLATION_TOL};
pub use sparse::{linear_combination, CsrMatrix, SparseMatrixComplex, SparseMatrixReal};
