//! Convergence studies of the consecutive-ROM error estimators.
//!
//! A study builds the unit-square model once, grows a SOAR basis through a
//! list of checkpoints and, at each checkpoint `r`, compares ROM(r) and
//! ROM(r+1) against the full model over a wave-number grid.

mod order;
mod report;
mod stopping;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use order::{fit_loglog, verify_order, Estimator, OrderFit};
pub use report::{emit_csv, emit_stopping_csv, emit_summary_csv, emit_svg, format_csv, format_stopping_csv, format_svg, CSV_HEADER};
pub use stopping::{stopping_decision, Decision, StoppingRule, StoppingTrace, TraceEntry};

use crate::error::{MorError, Result};
use crate::fem::{build_model, BoundarySpec, MeasurementSet};
use crate::rom::{error_sample, project, ErrorSample, NormTag, TransferModel, TransferSample};
use crate::soar::{init_state, ExpansionPlan};
use crate::system::SecondOrderSystem;

/// Ratio `abs_est / abs_true` below which a sample counts as underestimated.
pub const UNDERESTIMATION_RATIO: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// Grid subdivisions per side; `h = 1/m`.
    pub subdivisions: usize,
    pub boundary: BoundarySpec,
    /// Measurement points (m); the two default arcs when absent.
    pub probes: Option<Vec<[f64; 2]>>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            subdivisions: 64,
            boundary: BoundarySpec::default(),
            probes: None,
        }
    }
}

impl ModelSpec {
    pub fn probes(&self) -> MeasurementSet {
        match &self.probes {
            Some(points) => MeasurementSet { points: points.clone() },
            None => MeasurementSet::default_arcs(),
        }
    }

    pub fn build(&self) -> Result<SecondOrderSystem> {
        build_model(self.subdivisions, &self.boundary, &self.probes())
    }
}

/// Uniform wave-number grid (1/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl KGrid {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(MorError::InvalidConfig("wave-number grid is empty".into()));
        }
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite()) {
            return Err(MorError::InvalidConfig(format!(
                "wave-number grid [{}, {}] must lie in (0, inf) with min <= max",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub model: ModelSpec,
    pub plan: ExpansionPlan,
    pub k_grid: KGrid,
    /// Reduced dimensions at which errors are evaluated, strictly increasing.
    pub checkpoints: Vec<usize>,
    /// Norms to report; the first one drives the stopping rule.
    pub norms: Vec<NormTag>,
    pub stopping: StoppingRule,
}

impl StudyConfig {
    /// The unit-square experiment at desk scale: `m = 64`, points
    /// {20, 60, 100} interleaved, checkpoints every 50 up to 300, 60 wave
    /// numbers in [1, 120].
    pub fn desk_scale() -> Self {
        Self {
            model: ModelSpec::default(),
            plan: ExpansionPlan::interleaved(vec![20.0, 60.0, 100.0]),
            k_grid: KGrid {
                min: 1.0,
                max: 120.0,
                count: 60,
            },
            checkpoints: (1..=6).map(|i| 50 * i).collect(),
            norms: vec![NormTag::Sup, NormTag::Two],
            stopping: StoppingRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        self.k_grid.validate()?;
        self.stopping.validate()?;
        self.model.boundary.validate()?;
        if self.checkpoints.is_empty() {
            return Err(MorError::InvalidConfig("no checkpoints".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) || self.checkpoints[0] == 0 {
            return Err(MorError::InvalidConfig("checkpoints must be positive and strictly increasing".into()));
        }
        if let Some(total) = self.plan.budget_total() {
            if *self.checkpoints.last().unwrap() >= total {
                return Err(MorError::InvalidConfig(format!(
                    "last checkpoint must stay below the sequential budget total {total} (ROM(r+1) is needed)"
                )));
            }
        }
        if self.norms.is_empty() {
            return Err(MorError::InvalidConfig("no norms selected".into()));
        }
        Ok(())
    }

    /// Hex digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

/// Short SHA-256 digest of any serializable configuration.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("configuration serializes");
    Sha256::digest(json.as_bytes())
        .iter()
        .take(16)
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub r: usize,
    pub sample: ErrorSample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedRow {
    pub r: usize,
    pub k: f64,
    pub norm: NormTag,
    pub reason: String,
}

/// Sup over the wave-number grid of each error column at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub r: usize,
    pub norm: NormTag,
    pub sup_e_true: f64,
    pub sup_e_hat: f64,
    pub sup_e_tilde: f64,
    pub sup_abs_est: f64,
    pub sup_abs_true: f64,
    /// Samples with `abs_est < 1e-2 · abs_true`.
    pub underestimated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointInfo {
    pub r: usize,
    pub orthogonality_error: f64,
    pub columns_per_point: Vec<usize>,
    pub deflated: usize,
    /// False when the basis was full at `r`, so ROM(r) stands in for ROM(r+1).
    pub successor_available: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub config_hash: String,
    pub n: usize,
    pub rows: Vec<ErrorRow>,
    pub skipped: Vec<SkippedRow>,
    pub summaries: Vec<CheckpointSummary>,
    pub checkpoints: Vec<CheckpointInfo>,
    pub stopping_norm: NormTag,
    pub stopping: StoppingTrace,
    #[serde(skip)]
    pub fom: Vec<Option<TransferSample>>,
    pub seconds: f64,
}

impl StudyResult {
    pub fn summaries_for(&self, norm: NormTag) -> Vec<&CheckpointSummary> {
        self.summaries.iter().filter(|s| s.norm == norm).collect()
    }

    /// Checkpoint chosen by the stopping rule, or the last one when it never fired.
    pub fn stopping_r(&self) -> Option<usize> {
        let idx = self.stopping.stop_index.unwrap_or(self.checkpoints.len().checked_sub(1)?);
        self.checkpoints.get(idx).map(|c| c.r)
    }

    /// Violations of the properties every study is expected to satisfy.
    pub fn property_failures(&self) -> Vec<String> {
        let mut failures = Vec::new();
        for info in &self.checkpoints {
            if info.orthogonality_error > 1e-10 {
                failures.push(format!(
                    "r = {}: orthogonality error {:e} > 1e-10",
                    info.r, info.orthogonality_error
                ));
            }
        }
        for row in &self.rows {
            let e = &row.sample;
            let lhs = e.e_tilde * e.g_r1_norm;
            let rhs = e.e_hat * e.g_r_norm;
            if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()) {
                failures.push(format!(
                    "r = {}, k = {}: E_tilde·‖G_(r+1)‖ = {:e} but E_hat·‖G_r‖ = {:e}",
                    row.r, e.k, lhs, rhs
                ));
            }
        }
        let mut norms: Vec<NormTag> = self.summaries.iter().map(|s| s.norm).collect();
        norms.sort();
        norms.dedup();
        for norm in norms {
            let sums = self.summaries_for(norm);
            let mut best = f64::INFINITY;
            for s in &sums {
                if s.sup_e_true > 10.0 * best {
                    failures.push(format!(
                        "{} norm: sup E_true rose to {:e} at r = {} (earlier minimum {:e})",
                        norm.as_str(),
                        s.sup_e_true,
                        s.r,
                        best
                    ));
                }
                best = best.min(s.sup_e_true);
                if s.sup_e_true > 1e-9 {
                    let ratio = s.sup_e_hat / s.sup_e_true;
                    if !(1e-2..=1e2).contains(&ratio) {
                        failures.push(format!(
                            "{} norm: at r = {} sup E_hat / sup E_true = {:e} outside [1e-2, 1e2]",
                            norm.as_str(),
                            s.r,
                            ratio
                        ));
                    }
                }
            }
        }
        failures
    }
}

fn summarize(r: usize, norm: NormTag, rows: &[ErrorRow]) -> CheckpointSummary {
    let mut s = CheckpointSummary {
        r,
        norm,
        sup_e_true: 0.0,
        sup_e_hat: 0.0,
        sup_e_tilde: 0.0,
        sup_abs_est: 0.0,
        sup_abs_true: 0.0,
        underestimated: 0,
    };
    for row in rows.iter().filter(|row| row.r == r && row.sample.norm == norm) {
        let e = &row.sample;
        s.sup_e_true = s.sup_e_true.max(e.e_true);
        s.sup_e_hat = s.sup_e_hat.max(e.e_hat);
        s.sup_e_tilde = s.sup_e_tilde.max(e.e_tilde);
        s.sup_abs_est = s.sup_abs_est.max(e.abs_est);
        s.sup_abs_true = s.sup_abs_true.max(e.abs_true);
        if e.abs_est < UNDERESTIMATION_RATIO * e.abs_true {
            s.underestimated += 1;
        }
    }
    s
}

/// Runs a study on the model described by `cfg.model`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let sys = cfg.model.build()?;
    run_study_on(&sys, cfg)
}

/// Runs a study on an already assembled system.
pub fn run_study_on(sys: &SecondOrderSystem, cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let started = Instant::now();
    let n = sys.n();
    if let Some(&last) = cfg.checkpoints.last() {
        if last > n {
            return Err(MorError::InvalidConfig(format!("checkpoint {last} exceeds system dimension {n}")));
        }
    }
    let ks = cfg.k_grid.points();

    let fom: Vec<Option<TransferSample>> = ks
        .par_iter()
        .map(|&k| match sys.eval(k) {
            Ok(s) => Ok(Some(s)),
            Err(MorError::SingularOperator(msg)) => {
                log::warn!("FOM singular at k = {k}: {msg}");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut state = init_state(sys, &cfg.plan)?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut infos = Vec::new();
    for &r in &cfg.checkpoints {
        state.extend_to(r).map_err(|e| MorError::AtSample {
            r,
            k: f64::NAN,
            source: Box::new(e),
        })?;
        let successor_available = if r < n {
            match state.extend_to(r + 1) {
                Ok(_) => true,
                Err(MorError::BasisFull(_)) | Err(MorError::BudgetExhausted(_)) => false,
                Err(e) => return Err(e),
            }
        } else {
            false
        };
        let rom_full = project(sys, &state.basis().truncated(if successor_available { r + 1 } else { r }))?;
        let rom_r = rom_full.leading(r);
        let counters = state.counters();
        infos.push(CheckpointInfo {
            r,
            orthogonality_error: state.basis().truncated(r + successor_available as usize).orthogonality_error(),
            columns_per_point: state.basis().truncated(r).columns_per_point(cfg.plan.points.len()),
            deflated: counters.iter().map(|c| c.deflated).sum(),
            successor_available,
        });

        let evaluated: Vec<Result<(Option<TransferSample>, Option<TransferSample>)>> = ks
            .par_iter()
            .map(|&k| {
                let a = match rom_r.eval(k) {
                    Ok(s) => Some(s),
                    Err(MorError::SingularReducedOperator { .. }) => None,
                    Err(e) => return Err(e),
                };
                let b = if successor_available {
                    match rom_full.eval(k) {
                        Ok(s) => Some(s),
                        Err(MorError::SingularReducedOperator { .. }) => None,
                        Err(e) => return Err(e),
                    }
                } else {
                    a.clone()
                };
                Ok((a, b))
            })
            .collect();

        for (i, res) in evaluated.into_iter().enumerate() {
            let k = ks[i];
            let (g_r, g_r1) = res.map_err(|e| MorError::AtSample {
                r,
                k,
                source: Box::new(e),
            })?;
            for &norm in &cfg.norms {
                let skip = |reason: &str| SkippedRow {
                    r,
                    k,
                    norm,
                    reason: reason.to_string(),
                };
                let (Some(g), Some(a), Some(b)) = (&fom[i], &g_r, &g_r1) else {
                    let reason = if fom[i].is_none() { "fom_singular" } else { "rom_singular" };
                    log::info!("skipping r = {r}, k = {k}: {reason}");
                    skipped.push(skip(reason));
                    continue;
                };
                match error_sample(g, a, b, norm) {
                    Ok(sample) => rows.push(ErrorRow { r, sample }),
                    Err(MorError::DegenerateDenominator { what, .. }) => {
                        log::info!("skipping r = {r}, k = {k}: zero {what}");
                        skipped.push(skip("degenerate_denominator"));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let summaries: Vec<CheckpointSummary> = cfg
        .checkpoints
        .iter()
        .flat_map(|&r| cfg.norms.iter().map(move |&norm| (r, norm)))
        .map(|(r, norm)| summarize(r, norm, &rows))
        .collect();
    let stopping_norm = cfg.norms[0];
    let history: Vec<f64> = summaries
        .iter()
        .filter(|s| s.norm == stopping_norm)
        .map(|s| s.sup_e_hat)
        .collect();
    let stopping = stopping_decision(&history, &cfg.stopping);

    Ok(StudyResult {
        config_hash: cfg.hash(),
        n,
        rows,
        skipped,
        summaries,
        checkpoints: infos,
        stopping_norm,
        stopping,
        fom,
        seconds: started.elapsed().as_secs_f64(),
    })
}
