use num_complex::Complex64;

use super::dense::{dot_conj, norm2};

/// Default relative deflation tolerance.
pub const DEFAULT_DEFLATION_TOL: f64 = 1e-10;

/// Outcome of orthonormalizing one candidate against a basis.
#[derive(Debug, Clone)]
pub struct Orthonormalized {
    /// Unit column, or `None` when the candidate deflated.
    pub column: Option<Vec<Complex64>>,
    /// Projection coefficients `⟨vᵢ, candidate⟩` accumulated over both passes.
    pub coefficients: Vec<Complex64>,
    /// Residual norm after projection, before normalization.
    pub residual_norm: f64,
    pub original_norm: f64,
}

/// Modified Gram–Schmidt with one full re-orthogonalization pass.
///
/// The candidate deflates (`column == None`) when its residual after
/// projection is below `deflation_tol` times its original norm, or when it
/// is zero to begin with.
pub fn orthonormalize_full(
    basis: &[Vec<Complex64>],
    candidate: &[Complex64],
    deflation_tol: f64,
) -> Orthonormalized {
    let original_norm = norm2(candidate);
    let mut w = candidate.to_vec();
    let mut coefficients = vec![Complex64::new(0.0, 0.0); basis.len()];
    if original_norm == 0.0 || !original_norm.is_finite() {
        return Orthonormalized {
            column: None,
            coefficients,
            residual_norm: 0.0,
            original_norm,
        };
    }
    for _pass in 0..2 {
        for (v, c) in basis.iter().zip(coefficients.iter_mut()) {
            let h = dot_conj(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= vi * h;
            }
            *c += h;
        }
    }
    let residual_norm = norm2(&w);
    let column = if residual_norm < deflation_tol * original_norm {
        None
    } else {
        let inv = 1.0 / residual_norm;
        w.iter_mut().for_each(|x| *x *= inv);
        Some(w)
    };
    Orthonormalized {
        column,
        coefficients,
        residual_norm,
        original_norm,
    }
}

/// Returns the normalized component of `candidate` orthogonal to `basis`,
/// or `None` if it deflates.
pub fn orthonormalize_against(
    basis: &[Vec<Complex64>],
    candidate: &[Complex64],
    deflation_tol: f64,
) -> Option<Vec<Complex64>> {
    orthonormalize_full(basis, candidate, deflation_tol).column
}
