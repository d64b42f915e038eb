#![allow(dead_code)]

use mor_core::fem::{build_model, BoundarySpec, MeasurementSet};
use mor_core::linalg::SparseMatrixReal;
use mor_core::{Complex64, SecondOrderSystem};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn unit_square(m: usize) -> SecondOrderSystem {
    build_model(m, &BoundarySpec::default(), &MeasurementSet::default_arcs()).unwrap()
}

/// Row-major dense copy of `a·M + b·D + K`-style combinations.
pub fn dense_combo(terms: &[(Complex64, &SparseMatrixReal)]) -> Vec<Vec<Complex64>> {
    let n = terms[0].1.nrows();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for &(w, mat) in terms {
        for (i, j, v) in mat.triplets() {
            out[i][j] += w * v;
        }
    }
    out
}

/// Plain Gaussian elimination with row pivoting on a copy of `a`.
pub fn dense_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut a: Vec<Vec<Complex64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].norm().total_cmp(&a[q][col].norm()))
            .unwrap();
        assert!(a[piv][col].norm() > 0.0, "singular oracle matrix");
        a.swap(col, piv);
        x.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let prow = &top[col];
        for (off, row) in rest.iter_mut().enumerate() {
            let f = row[col] / prow[col];
            if f == c(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                row[j] -= f * prow[j];
            }
            let xc = x[col];
            x[col + 1 + off] -= f * xc;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    x
}

pub fn dense_mul(a: &[Vec<Complex64>], x: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(p, q)| p.conj() * q).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis of the span of `vectors` (Gram–Schmidt applied twice).
pub fn orthonormal_span(vectors: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let mut q: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        let orig = norm(&w);
        for _ in 0..2 {
            for u in &q {
                let h = dot(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= h * ui;
                }
            }
        }
        let nw = norm(&w);
        if nw > 1e-13 * orig {
            q.push(w.iter().map(|z| z / nw).collect());
        }
    }
    q
}

/// Upper bound on the sine of the largest principal angle between span(q)
/// and span(u), both orthonormal: ‖(I − QQᴴ)U‖_F.
pub fn principal_angle_bound(q: &[Vec<Complex64>], u: &[Vec<Complex64>]) -> f64 {
    let mut total = 0.0;
    for v in u {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in q {
                let h = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= h * bi;
                }
            }
        }
        total += norm(&w).powi(2);
    }
    total.sqrt()
}

/// Raw second-order Krylov vectors `X₀ … X_{count−1}` for input column `j`:
/// `X₀ = K̃⁻¹b`, `X_ℓ = −K̃⁻¹(D̃X_{ℓ−1} + MX_{ℓ−2})`, by dense elimination.
pub fn oracle_krylov(sys: &SecondOrderSystem, s0: Complex64, count: usize, j: usize) -> Vec<Vec<Complex64>> {
    let kt = dense_combo(&[(s0 * s0, &sys.m), (s0, &sys.d), (c(1.0, 0.0), &sys.k)]);
    let dt = dense_combo(&[(2.0 * s0, &sys.m), (c(1.0, 0.0), &sys.d)]);
    let mass = dense_combo(&[(c(1.0, 0.0), &sys.m)]);
    let bt = sys.b.to_dense_rows();
    let b: Vec<Complex64> = bt.iter().map(|row| c(row[j], 0.0)).collect();
    let mut out: Vec<Vec<Complex64>> = vec![dense_solve(&kt, &b)];
    while out.len() < count {
        let l = out.len();
        let mut rhs = dense_mul(&dt, &out[l - 1]);
        if l >= 2 {
            for (r, m) in rhs.iter_mut().zip(dense_mul(&mass, &out[l - 2])) {
                *r += m;
            }
        }
        out.push(dense_solve(&kt, &rhs).iter().map(|z| -z).collect());
    }
    out.truncate(count);
    out
}

/// Moments `m_ℓ = −C X_ℓ` as `[ℓ][output][input]`.
pub fn oracle_moments(sys: &SecondOrderSystem, s0: Complex64, count: usize) -> Vec<Vec<Vec<Complex64>>> {
    let ct = sys.c.to_dense_rows();
    let mut out = vec![vec![vec![c(0.0, 0.0); sys.inputs()]; sys.outputs()]; count];
    for j in 0..sys.inputs() {
        for (ell, x) in oracle_krylov(sys, s0, count, j).iter().enumerate() {
            for (o, row) in ct.iter().enumerate() {
                let v: Complex64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
                out[ell][o][j] = -v;
            }
        }
    }
    out
}
