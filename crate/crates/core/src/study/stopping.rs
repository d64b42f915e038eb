//! Moving-average stopping rule on the consecutive-ROM estimator.

use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingRule {
    /// Width of the trailing moving average, in checkpoints.
    pub window: usize,
    /// Relative change of the smoothed estimator below which it has settled.
    pub tol: f64,
    /// Absolute level below which any increase counts as a plateau.
    pub floor: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            window: 3,
            tol: 0.5,
            floor: 1e-9,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(MorError::InvalidConfig("stopping window must be at least 1".into()));
        }
        if !(self.tol >= 0.0) || !(self.floor >= 0.0) {
            return Err(MorError::InvalidConfig("stopping tol and floor must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Continue,
    /// Smoothed estimator changed by less than `tol` over the window.
    StopSettled,
    /// Smoothed estimator rose while below the floor.
    StopPlateau,
}

impl Decision {
    pub fn is_stop(self) -> bool {
        !matches!(self, Decision::Continue)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Continue => "continue",
            Decision::StopSettled => "stop_settled",
            Decision::StopPlateau => "stop_plateau",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub value: f64,
    pub smoothed: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingTrace {
    pub entries: Vec<TraceEntry>,
    /// Index of the first stopping checkpoint.
    pub stop_index: Option<usize>,
}

/// Applies the rule to a per-checkpoint estimator history.
///
/// The smoothed value at index `i` is the mean of the last `window` raw
/// values; it is defined once a full window is available (`i ≥ window − 1`).
/// A stop is signalled at the first `i` where `s_i` and `s_{i−window}` are
/// both defined and `|s_i − s_{i−window}| < tol · s_{i−window}`, or where
/// `s_i > s_{i−1}` while `s_i < floor`. Decisions after the first stop are
/// still reported. Entries before the first full window carry a partial mean.
pub fn stopping_decision(history: &[f64], rule: &StoppingRule) -> StoppingTrace {
    let w = rule.window.max(1);
    let smoothed: Vec<f64> = (0..history.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            history[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect();
    let entries: Vec<TraceEntry> = (0..history.len())
        .map(|i| {
            let s = smoothed[i];
            let decision = if i >= w && s > smoothed[i - 1] && s < rule.floor {
                Decision::StopPlateau
            } else if i + 1 >= 2 * w && (s - smoothed[i - w]).abs() < rule.tol * smoothed[i - w] {
                Decision::StopSettled
            } else {
                Decision::Continue
            };
            TraceEntry {
                value: history[i],
                smoothed: s,
                decision,
            }
        })
        .collect();
    let stop_index = entries.iter().position(|e| e.decision.is_stop());
    StoppingTrace { entries, stop_index }
}
