//! Run configuration read from a TOML file.
//!
//! Wave numbers are in 1/m, lengths in m.

use std::path::{Path, PathBuf};

use mor_core::fem::BoundarySpec;
use mor_core::rom::NormTag;
use mor_core::soar::{BasisMode, ExpansionPlan, KrylovSide, Schedule};
use mor_core::study::{KGrid, ModelSpec, StoppingRule, StudyConfig};
use mor_core::{MorError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Output directory; `--out` takes precedence.
    pub out: Option<PathBuf>,
    /// Log level when `RUST_LOG` is unset.
    pub verbosity: Option<String>,
    /// Seed for randomized checks; the deterministic commands ignore it.
    pub seed: u64,
    pub model: ModelSection,
    pub plan: Option<PlanSection>,
    pub reduce: Option<ReduceSection>,
    pub sweep: Option<SweepSection>,
    pub study: Option<StudySection>,
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub subdivisions: usize,
    pub boundary: BoundarySpec,
    /// Measurement points `[x, y]`; the default arcs when absent.
    pub probes: Option<Vec<[f64; 2]>>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let spec = ModelSpec::default();
        Self {
            subdivisions: spec.subdivisions,
            boundary: spec.boundary,
            probes: spec.probes,
        }
    }
}

impl ModelSection {
    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            subdivisions: self.subdivisions,
            boundary: self.boundary.clone(),
            probes: self.probes.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Interleaved,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    /// Expansion wave numbers `k₀`.
    pub points: Vec<f64>,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    /// Per-point column budgets, sequential schedule only.
    #[serde(default)]
    pub budgets: Option<Vec<usize>>,
    #[serde(default = "default_mode")]
    pub mode: BasisMode,
    #[serde(default = "default_side")]
    pub side: KrylovSide,
    #[serde(default = "default_deflation_tol")]
    pub deflation_tol: f64,
}

fn default_schedule() -> ScheduleKind {
    ScheduleKind::Interleaved
}

fn default_mode() -> BasisMode {
    BasisMode::Complex
}

fn default_side() -> KrylovSide {
    KrylovSide::Input
}

fn default_deflation_tol() -> f64 {
    mor_core::linalg::DEFAULT_DEFLATION_TOL
}

impl PlanSection {
    pub fn plan(&self) -> Result<ExpansionPlan> {
        let schedule = match (self.schedule, &self.budgets) {
            (ScheduleKind::Interleaved, None) => Schedule::Interleaved,
            (ScheduleKind::Interleaved, Some(_)) => {
                return Err(MorError::InvalidConfig("budgets given for an interleaved schedule".into()))
            }
            (ScheduleKind::Sequential, Some(b)) => Schedule::Sequential { budgets: b.clone() },
            (ScheduleKind::Sequential, None) => {
                return Err(MorError::InvalidConfig("sequential schedule needs budgets".into()))
            }
        };
        let plan = ExpansionPlan {
            points: self.points.clone(),
            schedule,
            mode: self.mode,
            deflation_tol: self.deflation_tol,
            side: self.side,
        };
        plan.validate().map_err(|e| MorError::InvalidConfig(e.to_string()))?;
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSection {
    /// Reduced dimension.
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
    /// Also evaluate ROM(r) built from `[plan]`.
    #[serde(default)]
    pub rom_r: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub k_grid: KGrid,
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormTag>,
    #[serde(default)]
    pub stopping: StoppingRule,
}

fn default_norms() -> Vec<NormTag> {
    vec![NormTag::Sup, NormTag::Two]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub k0: f64,
    pub r_values: Vec<usize>,
    /// Absolute wave-number offsets, strictly decreasing.
    pub offsets: Vec<f64>,
    #[serde(default = "default_norm")]
    pub norm: NormTag,
}

fn default_norm() -> NormTag {
    NormTag::Two
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MorError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            MorError::Parse {
                path: path.to_path_buf(),
                line,
                msg: e.message().to_string(),
            }
        })
    }

    pub fn plan(&self) -> Result<ExpansionPlan> {
        self.plan
            .as_ref()
            .ok_or_else(|| MorError::InvalidConfig("missing [plan] section".into()))?
            .plan()
    }

    pub fn study_config(&self, norm: Option<NormTag>) -> Result<StudyConfig> {
        let study = self
            .study
            .as_ref()
            .ok_or_else(|| MorError::InvalidConfig("missing [study] section".into()))?;
        let norms = match norm {
            Some(n) => vec![n],
            None => study.norms.clone(),
        };
        let cfg = StudyConfig {
            model: self.model.spec(),
            plan: self.plan()?,
            k_grid: study.k_grid,
            checkpoints: study.checkpoints.clone(),
            norms,
            stopping: study.stopping,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Largest wave number any section asks for.
    pub fn max_wave_number(&self) -> Option<f64> {
        let mut ks = Vec::new();
        if let Some(p) = &self.plan {
            ks.extend(p.points.iter().copied());
        }
        if let Some(s) = &self.sweep {
            ks.push(s.k_max);
        }
        if let Some(s) = &self.study {
            ks.push(s.k_grid.max);
        }
        if let Some(v) = &self.verify {
            ks.push(v.k0 + v.offsets.first().copied().unwrap_or(0.0));
        }
        ks.into_iter().filter(|k| k.is_finite()).reduce(f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let text = "seed = 1\n[model]\nsubdivisions = 4\nmesh_size = 3\n";
        match RunConfig::parse(text, Path::new("x.toml")) {
            Err(MorError::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("mesh_size"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sequential_plan_needs_budgets() {
        let text = "[plan]\npoints = [20.0, 60.0]\nschedule = \"sequential\"\n";
        let cfg = RunConfig::parse(text, Path::new("x.toml")).unwrap();
        assert!(matches!(cfg.plan(), Err(MorError::InvalidConfig(_))));
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
out = "runs/a"
[model]
subdivisions = 16
[model.boundary]
neumann_y_min = 0.75
[plan]
points = [20.0, 60.0]
schedule = "sequential"
budgets = [10, 5]
mode = "real_split"
[study]
checkpoints = [4, 8]
norms = ["two"]
[study.k_grid]
min = 1.0
max = 30.0
count = 4
[study.stopping]
window = 2
"#;
        let cfg = RunConfig::parse(text, Path::new("x.toml")).unwrap();
        let study = cfg.study_config(None).unwrap();
        assert_eq!(study.plan.budget_total(), Some(15));
        assert_eq!(study.stopping.window, 2);
        assert_eq!(cfg.max_wave_number(), Some(60.0));
    }
}
