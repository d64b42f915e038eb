//! Reduced systems, transfer functions, moments and error quantities.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MorError, Result};
use crate::linalg::{dot_conj, factorize, DenseComplexBlock, DenseLu, Op, SparseMatrixReal};
use crate::soar::{BasisMode, ProjectionBasis};
use crate::system::SecondOrderSystem;

/// Relative pivot tolerance for dense reduced solves.
const DENSE_PIVOT_TOL: f64 = 1e-14;

/// Dense projected system `Vᴴ{M, D, K}V`, `VᴴB`, `CV`.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub m: DenseComplexBlock,
    pub d: DenseComplexBlock,
    pub k: DenseComplexBlock,
    pub b: DenseComplexBlock,
    pub c: DenseComplexBlock,
    pub mode: BasisMode,
    pub basis_hash: String,
}

impl ReducedSystem {
    pub fn r(&self) -> usize {
        self.m.nrows()
    }

    /// ROM built from the first `r` basis columns of the same projection.
    pub fn leading(&self, r: usize) -> Self {
        assert!(r <= self.r(), "leading({r}) of a {}-dimensional ROM", self.r());
        Self {
            m: self.m.leading(r, r),
            d: self.d.leading(r, r),
            k: self.k.leading(r, r),
            b: self.b.leading(r, self.b.ncols()),
            c: self.c.leading(self.c.nrows(), r),
            mode: self.mode,
            basis_hash: format!("{}[..{r}]", self.basis_hash),
        }
    }

    fn dynamic(&self, s: Complex64) -> DenseComplexBlock {
        let r = self.r();
        let mut a = DenseComplexBlock::zeros(r, r);
        let s2 = s * s;
        for j in 0..r {
            for i in 0..r {
                a[(i, j)] = s2 * self.m[(i, j)] + s * self.d[(i, j)] + self.k[(i, j)];
            }
        }
        a
    }

    /// `max |M_r − M_rᴴ|`.
    pub fn mass_asymmetry(&self) -> f64 {
        let a = self.m.adjoint();
        self.m.sub(&a).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }
}

fn sparse_times_columns(a: &SparseMatrixReal, cols: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    cols.par_iter().map(|v| a.mul_vec(v)).collect()
}

/// `Vᴴ X` for column lists.
fn gram(v: &[Vec<Complex64>], x: &[Vec<Complex64>]) -> DenseComplexBlock {
    let r = v.len();
    let cols: Vec<Vec<Complex64>> = x
        .par_iter()
        .map(|xj| v.iter().map(|vi| dot_conj(vi, xj)).collect())
        .collect();
    DenseComplexBlock::from_columns(r, &cols).expect("r rows per column")
}

fn basis_hash(v: &ProjectionBasis) -> String {
    let mut h = Sha256::new();
    for col in v.columns() {
        for z in col {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// One-sided Galerkin projection onto `V` (`W = V`).
pub fn project(sys: &SecondOrderSystem, v: &ProjectionBasis) -> Result<ReducedSystem> {
    if v.nrows() != sys.n() {
        return Err(MorError::ShapeError(format!(
            "basis has {} rows, system dimension is {}",
            v.nrows(),
            sys.n()
        )));
    }
    let cols = v.columns();
    let mv = sparse_times_columns(&sys.m, cols);
    let dv = sparse_times_columns(&sys.d, cols);
    let kv = sparse_times_columns(&sys.k, cols);
    let b_cols: Vec<Vec<Complex64>> = (0..sys.inputs())
        .map(|j| (0..sys.n()).map(|i| Complex64::new(sys.b.get(i, j), 0.0)).collect())
        .collect();
    let c_cols: Vec<Vec<Complex64>> = cols.par_iter().map(|vj| sys.c.mul_vec(vj)).collect();
    Ok(ReducedSystem {
        m: gram(cols, &mv),
        d: gram(cols, &dv),
        k: gram(cols, &kv),
        b: gram(cols, &b_cols),
        c: DenseComplexBlock::from_columns(sys.outputs(), &c_cols)?,
        mode: v.mode(),
        basis_hash: basis_hash(v),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Fom,
    Rom(usize),
}

/// Transfer function value at one wave number.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSample {
    pub k: f64,
    /// `p_o x p_i` block.
    pub value: DenseComplexBlock,
    pub source: Source,
}

/// Negated Taylor coefficients of the transfer function about `s₀`.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    pub s0: Complex64,
    pub moments: Vec<DenseComplexBlock>,
}

impl MomentSequence {
    /// `‖m_ℓ − other_ℓ‖_F / ‖m_ℓ‖_F` per index.
    pub fn relative_mismatch(&self, other: &MomentSequence) -> Vec<f64> {
        self.moments
            .iter()
            .zip(&other.moments)
            .map(|(a, b)| a.sub(b).expect("same shapes").frobenius_norm() / a.frobenius_norm())
            .collect()
    }
}

/// Anything with a second-order transfer function `C(s²M + sD + K)⁻¹B`.
pub trait TransferModel {
    /// Transfer value at complex frequency `s`.
    fn transfer_at(&self, s: Complex64) -> Result<DenseComplexBlock>;

    /// Moments `m₀ … m_{count−1}` about `s₀`.
    fn moments(&self, s0: Complex64, count: usize) -> Result<MomentSequence>;

    fn source(&self) -> Source;

    /// Transfer value at wave number `k`, i.e. `s = ik`.
    fn eval(&self, k: f64) -> Result<TransferSample> {
        let value = self.transfer_at(Complex64::new(0.0, k))?;
        Ok(TransferSample {
            k,
            value,
            source: self.source(),
        })
    }
}

impl TransferModel for SecondOrderSystem {
    fn transfer_at(&self, s: Complex64) -> Result<DenseComplexBlock> {
        let f = factorize(&self.shifted_stiffness(s)?)?;
        let mut out = DenseComplexBlock::zeros(self.outputs(), self.inputs());
        for j in 0..self.inputs() {
            let rhs: Vec<Complex64> = (0..self.n()).map(|i| Complex64::new(self.b.get(i, j), 0.0)).collect();
            let x = f.solve(&rhs, Op::NoTranspose)?;
            out.column_mut(j).copy_from_slice(&self.c.mul_vec(&x));
        }
        Ok(out)
    }

    fn moments(&self, s0: Complex64, count: usize) -> Result<MomentSequence> {
        let f = factorize(&self.shifted_stiffness(s0)?)?;
        let dt = self.shifted_damping(s0)?;
        let mut moments = vec![DenseComplexBlock::zeros(self.outputs(), self.inputs()); count];
        for j in 0..self.inputs() {
            let mut prev2: Option<Vec<Complex64>> = None;
            let mut prev: Option<Vec<Complex64>> = None;
            for (l, moment) in moments.iter_mut().enumerate() {
                let x = if l == 0 {
                    let rhs: Vec<Complex64> =
                        (0..self.n()).map(|i| Complex64::new(self.b.get(i, j), 0.0)).collect();
                    f.solve(&rhs, Op::NoTranspose)?
                } else {
                    let mut rhs = dt.mul_vec(prev.as_ref().unwrap());
                    if let Some(p2) = &prev2 {
                        let mp = self.m.mul_vec(p2);
                        rhs.iter_mut().zip(&mp).for_each(|(a, b)| *a += b);
                    }
                    rhs.iter_mut().for_each(|z| *z = -*z);
                    f.solve(&rhs, Op::NoTranspose)?
                };
                let g = self.c.mul_vec(&x);
                for (dst, gi) in moment.column_mut(j).iter_mut().zip(g) {
                    *dst = -gi;
                }
                prev2 = prev.take();
                prev = Some(x);
            }
        }
        Ok(MomentSequence { s0, moments })
    }

    fn source(&self) -> Source {
        Source::Fom
    }
}

impl TransferModel for ReducedSystem {
    fn transfer_at(&self, s: Complex64) -> Result<DenseComplexBlock> {
        let lu = DenseLu::new(&self.dynamic(s), DENSE_PIVOT_TOL).map_err(|e| match e {
            MorError::SingularOperator(_) => MorError::SingularReducedOperator { k: s.im, r: self.r() },
            other => other,
        })?;
        let x = lu.solve_block(&self.b)?;
        self.c.matmul(&x)
    }

    fn moments(&self, s0: Complex64, count: usize) -> Result<MomentSequence> {
        let r = self.r();
        let kt = self.dynamic(s0);
        let mut dt = DenseComplexBlock::zeros(r, r);
        for j in 0..r {
            for i in 0..r {
                dt[(i, j)] = 2.0 * s0 * self.m[(i, j)] + self.d[(i, j)];
            }
        }
        let lu = DenseLu::new(&kt, DENSE_PIVOT_TOL).map_err(|e| match e {
            MorError::SingularOperator(_) => MorError::SingularReducedOperator { k: s0.im, r },
            other => other,
        })?;
        let mut moments = Vec::with_capacity(count);
        let mut prev2: Option<DenseComplexBlock> = None;
        let mut prev: Option<DenseComplexBlock> = None;
        for l in 0..count {
            let x = if l == 0 {
                lu.solve_block(&self.b)?
            } else {
                let mut rhs = dt.matmul(prev.as_ref().unwrap())?;
                if let Some(p2) = &prev2 {
                    let mp = self.m.matmul(p2)?;
                    rhs = rhs.scale(Complex64::new(-1.0, 0.0)).sub(&mp)?;
                } else {
                    rhs = rhs.scale(Complex64::new(-1.0, 0.0));
                }
                lu.solve_block(&rhs)?
            };
            moments.push(self.c.matmul(&x)?.scale(Complex64::new(-1.0, 0.0)));
            prev2 = prev.take();
            prev = Some(x);
        }
        Ok(MomentSequence { s0, moments })
    }

    fn source(&self) -> Source {
        Source::Rom(self.r())
    }
}

/// FOM transfer value at wave number `k`.
pub fn eval_fom(sys: &SecondOrderSystem, k: f64) -> Result<TransferSample> {
    sys.eval(k)
}

/// ROM transfer value at wave number `k`.
pub fn eval_rom(rom: &ReducedSystem, k: f64) -> Result<TransferSample> {
    rom.eval(k)
}

/// Norm applied to transfer blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    /// Vector 2-norm over all outputs (Frobenius for blocks).
    Two,
    /// Largest entry magnitude.
    Sup,
}

impl NormTag {
    pub fn apply(self, g: &DenseComplexBlock) -> f64 {
        match self {
            NormTag::Two => g.frobenius_norm(),
            NormTag::Sup => g.max_abs(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormTag::Two => "two",
            NormTag::Sup => "sup",
        }
    }
}

impl std::str::FromStr for NormTag {
    type Err = MorError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two" | "2" => Ok(NormTag::Two),
            "sup" | "inf" => Ok(NormTag::Sup),
            other => Err(MorError::InvalidConfig(format!("unknown norm '{other}'"))),
        }
    }
}

/// True and estimated errors at one wave number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSample {
    pub k: f64,
    /// `‖G − G_r‖ / ‖G‖`
    pub e_true: f64,
    /// `‖G_{r+1} − G_r‖ / ‖G_r‖`
    pub e_hat: f64,
    /// `‖G_{r+1} − G_r‖ / ‖G_{r+1}‖`
    pub e_tilde: f64,
    /// `‖G_{r+1} − G_r‖`
    pub abs_est: f64,
    /// `‖G − G_r‖`
    pub abs_true: f64,
    /// `‖G‖`, `‖G_r‖`, `‖G_{r+1}‖`
    pub g_norm: f64,
    pub g_r_norm: f64,
    pub g_r1_norm: f64,
    pub norm: NormTag,
}

/// Error quantities from the FOM and two consecutive ROM values.
pub fn error_sample(
    g: &TransferSample,
    g_r: &TransferSample,
    g_r1: &TransferSample,
    norm: NormTag,
) -> Result<ErrorSample> {
    if g.k != g_r.k || g.k != g_r1.k {
        return Err(MorError::ShapeError(format!(
            "samples at different wave numbers: {}, {}, {}",
            g.k, g_r.k, g_r1.k
        )));
    }
    let k = g.k;
    let n_g = norm.apply(&g.value);
    let n_r = norm.apply(&g_r.value);
    let n_r1 = norm.apply(&g_r1.value);
    if n_g == 0.0 {
        return Err(MorError::DegenerateDenominator { k, what: "G" });
    }
    if n_r == 0.0 {
        return Err(MorError::DegenerateDenominator { k, what: "G_r" });
    }
    if n_r1 == 0.0 {
        return Err(MorError::DegenerateDenominator { k, what: "G_{r+1}" });
    }
    let abs_true = norm.apply(&g.value.sub(&g_r.value)?);
    let abs_est = norm.apply(&g_r1.value.sub(&g_r.value)?);
    Ok(ErrorSample {
        k,
        e_true: abs_true / n_g,
        e_hat: abs_est / n_r,
        e_tilde: abs_est / n_r1,
        abs_est,
        abs_true,
        g_norm: n_g,
        g_r_norm: n_r,
        g_r1_norm: n_r1,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(k: f64, vals: &[Complex64]) -> TransferSample {
        TransferSample {
            k,
            value: DenseComplexBlock::from_column_major(vals.len(), 1, vals.to_vec()).unwrap(),
            source: Source::Fom,
        }
    }

    #[test]
    fn scalar_transfer_values() {
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 2.0, 1.0, 1.0);
        assert!((eval_fom(&sys, 1.0).unwrap().value[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let sys = SecondOrderSystem::scalar(1.0, 1.0, 2.0, 1.0, 1.0);
        assert!((eval_fom(&sys, 1.0).unwrap().value[(0, 0)] - c(0.5, -0.5)).norm() < 1e-15);
        let rom = project(&sys, &ProjectionBasis::identity(1)).unwrap();
        assert!((eval_rom(&rom, 1.0).unwrap().value[(0, 0)] - c(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn scalar_moments_by_hand() {
        // 1/(2 + s²) = 1/2 − s²/4 + …
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 2.0, 1.0, 1.0);
        let m = sys.moments(c(0.0, 0.0), 3).unwrap();
        let g: Vec<Complex64> = m.moments.iter().map(|b| -b[(0, 0)]).collect();
        assert!((g[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(g[1].norm() < 1e-15);
        assert!((g[2] - c(-0.25, 0.0)).norm() < 1e-15);
        let rom = project(&sys, &ProjectionBasis::identity(1)).unwrap();
        let mr = rom.moments(c(0.0, 0.0), 3).unwrap();
        assert!(m.relative_mismatch(&mr).iter().take(1).all(|&e| e < 1e-15));
    }

    #[test]
    fn zeroth_moment_is_negated_transfer() {
        let sys = SecondOrderSystem::scalar(1.0, 0.3, 2.0, 1.0, 1.0);
        let s0 = c(0.0, 0.7);
        let m = sys.moments(s0, 1).unwrap();
        let g = sys.transfer_at(s0).unwrap();
        assert!((m.moments[0][(0, 0)] + g[(0, 0)]).norm() < 1e-14);
    }

    #[test]
    fn singular_reduced_operator() {
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 4.0, 1.0, 1.0);
        let rom = project(&sys, &ProjectionBasis::identity(1)).unwrap();
        assert!(matches!(eval_rom(&rom, 2.0), Err(MorError::SingularReducedOperator { r: 1, .. })));
    }

    #[test]
    fn error_sample_identities() {
        let g = sample(3.0, &[c(1.0, 1.0), c(0.0, 2.0)]);
        let gr = sample(3.0, &[c(1.0, 0.9), c(0.1, 2.0)]);
        let gr1 = sample(3.0, &[c(1.0, 0.95), c(0.05, 2.0)]);
        let e = error_sample(&g, &g, &gr1, NormTag::Two).unwrap();
        assert_eq!(e.e_true, 0.0);
        let e = error_sample(&g, &gr, &gr, NormTag::Sup).unwrap();
        assert_eq!((e.e_hat, e.e_tilde, e.abs_est), (0.0, 0.0, 0.0));
        let e = error_sample(&g, &gr, &gr1, NormTag::Two).unwrap();
        let ratio = NormTag::Two.apply(&gr.value) / NormTag::Two.apply(&gr1.value);
        assert!((e.e_tilde / e.e_hat - ratio).abs() < 1e-15);
        assert!((e.abs_true - e.e_true * NormTag::Two.apply(&g.value)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_denominators() {
        let z = sample(1.0, &[c(0.0, 0.0)]);
        let o = sample(1.0, &[c(1.0, 0.0)]);
        assert!(matches!(
            error_sample(&z, &o, &o, NormTag::Two),
            Err(MorError::DegenerateDenominator { what: "G", .. })
        ));
        assert!(matches!(
            error_sample(&o, &z, &o, NormTag::Two),
            Err(MorError::DegenerateDenominator { what: "G_r", .. })
        ));
    }

    #[test]
    fn mismatched_wave_numbers() {
        let a = sample(1.0, &[c(1.0, 0.0)]);
        let b = sample(2.0, &[c(1.0, 0.0)]);
        assert!(error_sample(&a, &b, &a, NormTag::Two).is_err());
    }

    #[test]
    fn projection_shape_mismatch() {
        let sys = SecondOrderSystem::scalar(1.0, 0.0, 2.0, 1.0, 1.0);
        assert!(matches!(project(&sys, &ProjectionBasis::identity(2)), Err(MorError::ShapeError(_))));
    }
}
