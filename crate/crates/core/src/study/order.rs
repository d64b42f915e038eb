//! Empirical convergence order of `|E_r − Ê_r|` and `|E_r − Ẽ_r|` near `s₀`.

use serde::Serialize;

use crate::error::{MorError, Result};
use crate::rom::{error_sample, project, NormTag, TransferModel};
use crate::soar::{init_state, ExpansionPlan};
use crate::system::SecondOrderSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Normalized by `‖G_r‖`.
    Hat,
    /// Normalized by `‖G_{r+1}‖`.
    Tilde,
}

/// Least-squares slope of log discrepancy against log offset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    pub r: usize,
    pub estimator: Estimator,
    /// `(offset, discrepancy)` pairs with strictly decreasing offsets.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Fits `log y = a + slope · log x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 4 {
        return Err(MorError::InsufficientData(format!(
            "{} usable points, at least 4 needed",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok((slope, (rss / n).sqrt()))
}

/// For each `r`, samples the estimator discrepancies at `k = k₀ + δ` for each
/// offset `δ` and fits their order. Returns one fit per `(r, estimator)`.
pub fn verify_order(
    sys: &SecondOrderSystem,
    k0: f64,
    r_values: &[usize],
    offsets: &[f64],
    norm: NormTag,
) -> Result<Vec<OrderFit>> {
    if offsets.len() < 4 {
        return Err(MorError::InsufficientData(format!("{} offsets given", offsets.len())));
    }
    if offsets.windows(2).any(|w| !(w[1] < w[0])) || offsets.iter().any(|&d| !(d > 0.0)) {
        return Err(MorError::InvalidConfig("offsets must be positive and strictly decreasing".into()));
    }
    if offsets[0] > 0.1 * k0 * (1.0 + 1e-12) {
        log::warn!("largest offset {} exceeds 0.1·k0 = {}", offsets[0], 0.1 * k0);
    }
    let r_max = *r_values
        .iter()
        .max()
        .ok_or_else(|| MorError::InsufficientData("no r values".into()))?;

    let mut state = init_state(sys, &ExpansionPlan::single(k0))?;
    state.extend_to(r_max + 1)?;
    let full = project(sys, state.basis())?;
    let fom: Vec<_> = offsets.iter().map(|&d| sys.eval(k0 + d)).collect::<Result<_>>()?;

    let mut fits = Vec::new();
    for &r in r_values {
        let rom = full.leading(r);
        let rom1 = full.leading(r + 1);
        let mut hat = Vec::new();
        let mut tilde = Vec::new();
        for (&d, g) in offsets.iter().zip(&fom) {
            let k = k0 + d;
            let sample = rom
                .eval(k)
                .and_then(|gr| rom1.eval(k).map(|gr1| (gr, gr1)))
                .and_then(|(gr, gr1)| error_sample(g, &gr, &gr1, norm));
            match sample {
                Ok(e) => {
                    let dh = (e.e_true - e.e_hat).abs();
                    let dt = (e.e_true - e.e_tilde).abs();
                    if dh > 0.0 {
                        hat.push((d, dh));
                    }
                    if dt > 0.0 {
                        tilde.push((d, dt));
                    }
                }
                Err(e @ (MorError::DegenerateDenominator { .. } | MorError::SingularReducedOperator { .. })) => {
                    log::warn!("order fit r = {r}: excluding offset {d}: {e}");
                }
                Err(e) => return Err(e),
            }
        }
        for (estimator, points) in [(Estimator::Hat, hat), (Estimator::Tilde, tilde)] {
            let (slope, residual) = fit_loglog(&points)?;
            fits.push(OrderFit {
                r,
                estimator,
                points,
                slope,
                residual,
            });
        }
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_fit() {
        let pts: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125].iter().map(|&x| (x, 3.0 * x * x * x)).collect();
        let (slope, res) = fit_loglog(&pts).unwrap();
        assert!((slope - 3.0).abs() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(fit_loglog(&[(1.0, 1.0), (0.5, 0.2)]), Err(MorError::InsufficientData(_))));
    }

    #[test]
    fn offsets_must_decrease() {
        let sys = SecondOrderSystem::scalar(1.0, 0.1, 2.0, 1.0, 1.0);
        let err = verify_order(&sys, 1.0, &[1], &[0.1, 0.05, 0.06, 0.01], NormTag::Two).unwrap_err();
        assert!(matches!(err, MorError::InvalidConfig(_)));
    }
}
