//! The full-order second-order system `(−k²M + ikD + K) p = B u`, `y = C p`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::fem::BoundarySpec;
use crate::linalg::{linear_combination, SparseMatrixComplex, SparseMatrixReal};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemMetadata {
    pub mesh_hash: Option<String>,
    pub subdivisions: Option<usize>,
    pub boundary: Option<BoundarySpec>,
}

/// Sparse real mass, damping and stiffness matrices with input and output maps.
#[derive(Debug, Clone)]
pub struct SecondOrderSystem {
    pub m: SparseMatrixReal,
    pub d: SparseMatrixReal,
    pub k: SparseMatrixReal,
    pub b: SparseMatrixReal,
    pub c: SparseMatrixReal,
    pub metadata: SystemMetadata,
}

impl SecondOrderSystem {
    pub fn new(
        m: SparseMatrixReal,
        d: SparseMatrixReal,
        k: SparseMatrixReal,
        b: SparseMatrixReal,
        c: SparseMatrixReal,
    ) -> Result<Self> {
        let n = m.nrows();
        for (name, a) in [("M", &m), ("D", &d), ("K", &k)] {
            if a.shape() != (n, n) {
                return Err(MorError::ShapeError(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        if b.nrows() != n {
            return Err(MorError::ShapeError(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(MorError::ShapeError(format!("C has {} columns, expected {n}", c.ncols())));
        }
        Ok(Self {
            m,
            d,
            k,
            b,
            c,
            metadata: SystemMetadata::default(),
        })
    }

    /// Dense scalar system, handy for manufactured examples.
    pub fn scalar(m: f64, d: f64, k: f64, b: f64, c: f64) -> Self {
        let one = |v: f64| SparseMatrixReal::from_triplets(&[(0, 0, v)], 1, 1).expect("1x1");
        Self::new(one(m), one(d), one(k), one(b), one(c)).expect("consistent 1x1 shapes")
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `K̃ = s₀²M + s₀D + K`.
    pub fn shifted_stiffness(&self, s0: Complex64) -> Result<SparseMatrixComplex> {
        let one = Complex64::new(1.0, 0.0);
        linear_combination(&[(s0 * s0, &self.m), (s0, &self.d), (one, &self.k)])
    }

    /// `D̃ = 2s₀M + D`.
    pub fn shifted_damping(&self, s0: Complex64) -> Result<SparseMatrixComplex> {
        let one = Complex64::new(1.0, 0.0);
        linear_combination(&[(2.0 * s0, &self.m), (one, &self.d)])
    }

    /// Dynamic stiffness `−k²M + ikD + K` at real wave number `k`.
    pub fn dynamic_stiffness(&self, k: f64) -> Result<SparseMatrixComplex> {
        self.shifted_stiffness(Complex64::new(0.0, k))
    }

    /// Copy with `B` multiplied by `factor`.
    pub fn with_scaled_input(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.b = self.b.map(|v| v * factor);
        out
    }
}
