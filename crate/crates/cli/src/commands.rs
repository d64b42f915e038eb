use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mor_core::fem::{assemble_with_probes, build_unit_square_mesh, classify_boundary, points_per_wavelength};
use mor_core::linalg::mtx::{write_dense, write_sparse_real};
use mor_core::rom::{project, NormTag, TransferModel, TransferSample};
use mor_core::soar::{init_state, Schedule};
use mor_core::study::{
    config_hash, emit_csv, emit_stopping_csv, emit_summary_csv, emit_svg, verify_order, Estimator,
};
use mor_core::{MorError, Result, SecondOrderSystem};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// Minimum points per wavelength before the resolution warning fires.
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 10.0;

pub enum Outcome {
    Success,
    PropertyFailure(Vec<String>),
}

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub norm: Option<NormTag>,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest(&self, command: &str, mut body: Value) -> Result<()> {
        let obj = body.as_object_mut().expect("manifest body is an object");
        obj.insert("command".into(), json!(command));
        obj.insert("config_hash".into(), json!(config_hash(&self.config)));
        obj.insert("resolution".into(), self.resolution());
        let path = self.path("manifest.json");
        let text = serde_json::to_string_pretty(&body).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| MorError::io(&path, e))
    }

    fn resolution(&self) -> Value {
        let m = self.config.model.subdivisions;
        match self.config.max_wave_number() {
            Some(k) => {
                let ppw = points_per_wavelength(k, m);
                json!({
                    "k_max": k,
                    "points_per_wavelength": ppw,
                    "warning": ppw < MIN_POINTS_PER_WAVELENGTH,
                })
            }
            None => json!({ "k_max": null, "points_per_wavelength": null, "warning": false }),
        }
    }

    pub fn warn_resolution(&self) {
        if let Some(k) = self.config.max_wave_number() {
            let ppw = points_per_wavelength(k, self.config.model.subdivisions);
            if ppw < MIN_POINTS_PER_WAVELENGTH {
                log::warn!(
                    "mesh under-resolves k = {k}: lambda/h = {ppw:.2} < {MIN_POINTS_PER_WAVELENGTH}"
                );
            }
        }
    }

    fn build(&self) -> Result<SecondOrderSystem> {
        self.config.model.spec().build()
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| MorError::io(path, e))
}

pub fn assemble(ctx: &Context) -> Result<Outcome> {
    let model = &ctx.config.model;
    let mesh = classify_boundary(build_unit_square_mesh(model.subdivisions)?, &model.boundary)?;
    let sys = assemble_with_probes(&mesh, &model.spec().probes())?;
    for (name, mat) in [("M", &sys.m), ("D", &sys.d), ("K", &sys.k), ("B", &sys.b), ("C", &sys.c)] {
        write_sparse_real(&ctx.path(&format!("{name}.mtx")), mat)?;
    }
    write_text(&ctx.path("mesh.txt"), &mesh.to_listing())?;
    ctx.manifest(
        "assemble",
        json!({
            "n": sys.n(),
            "inputs": sys.inputs(),
            "outputs": sys.outputs(),
            "subdivisions": model.subdivisions,
            "mesh_hash": mesh.hash(),
            "nnz": { "M": sys.m.nnz(), "D": sys.d.nnz(), "K": sys.k.nnz() },
        }),
    )?;
    Ok(Outcome::Success)
}

pub fn reduce(ctx: &Context) -> Result<Outcome> {
    let r = ctx
        .config
        .reduce
        .as_ref()
        .ok_or_else(|| MorError::InvalidConfig("missing [reduce] section".into()))?
        .r;
    if r == 0 {
        return Err(MorError::InvalidConfig("reduced dimension r must be at least 1".into()));
    }
    let plan = ctx.config.plan()?;
    let sys = ctx.build()?;
    let mut state = init_state(&sys, &plan)?;
    state.extend_to(r)?;
    let basis = state.basis();
    let rom = project(&sys, basis)?;

    write_dense(&ctx.path("basis.mtx"), &basis.to_dense())?;
    write_text(&ctx.path("basis_provenance.csv"), &basis.provenance_listing())?;
    for (name, mat) in [("M", &rom.m), ("D", &rom.d), ("K", &rom.k), ("B", &rom.b), ("C", &rom.c)] {
        write_dense(&ctx.path(&format!("rom_{name}.mtx")), mat)?;
    }
    let budgets = match &plan.schedule {
        Schedule::Sequential { budgets } => Some(budgets.clone()),
        Schedule::Interleaved => None,
    };
    let points: Vec<Value> = plan
        .points
        .iter()
        .zip(state.counters())
        .zip(state.condition_estimates())
        .enumerate()
        .map(|(i, ((k0, c), cond))| {
            json!({
                "k0": k0,
                "slots": c.slots,
                "columns": c.columns,
                "deflated": c.deflated,
                "budget": budgets.as_ref().map(|b| b[i]),
                "condition_estimate": cond,
            })
        })
        .collect();
    ctx.manifest(
        "reduce",
        json!({
            "n": sys.n(),
            "r": rom.r(),
            "schedule": plan.schedule,
            "mode": plan.mode,
            "side": plan.side,
            "budgets": budgets,
            "points": points,
            "orthogonality_error": basis.orthogonality_error(),
            "basis_hash": rom.basis_hash,
        }),
    )?;
    Ok(Outcome::Success)
}

fn sweep_grid(ctx: &Context) -> Result<Vec<f64>> {
    let s = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| MorError::InvalidConfig("missing [sweep] section".into()))?;
    let grid = mor_core::study::KGrid {
        min: s.k_min,
        max: s.k_max,
        count: s.count,
    };
    grid.validate()?;
    Ok(grid.points())
}

fn push_rows(out: &mut String, sample: &TransferSample, label: &str) {
    for (o, z) in sample.value.column(0).iter().enumerate() {
        let _ = writeln!(out, "{:?},{label},{o},{:?},{:?}", sample.k, z.re, z.im);
    }
}

pub fn sweep(ctx: &Context) -> Result<Outcome> {
    let ks = sweep_grid(ctx)?;
    let sys = ctx.build()?;
    let rom = match ctx.config.sweep.as_ref().and_then(|s| s.rom_r) {
        Some(r) => {
            let plan = ctx.config.plan()?;
            let mut state = init_state(&sys, &plan)?;
            state.extend_to(r)?;
            Some(project(&sys, state.basis())?)
        }
        None => None,
    };
    let fom: Vec<Option<TransferSample>> = ks
        .par_iter()
        .map(|&k| match sys.eval(k) {
            Ok(s) => Ok(Some(s)),
            Err(MorError::SingularOperator(msg)) => {
                log::warn!("skipping k = {k}: {msg}");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let reduced: Vec<Option<TransferSample>> = match &rom {
        Some(rom) => ks
            .par_iter()
            .map(|&k| match rom.eval(k) {
                Ok(s) => Ok(Some(s)),
                Err(e @ MorError::SingularReducedOperator { .. }) => {
                    log::warn!("skipping ROM at k = {k}: {e}");
                    Ok(None)
                }
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?,
        None => vec![None; ks.len()],
    };
    let mut csv = String::from("k,source,output,re,im\n");
    let rom_label = rom.as_ref().map(|r| format!("rom{}", r.r()));
    for (f, r) in fom.iter().zip(&reduced) {
        if let Some(f) = f {
            push_rows(&mut csv, f, "fom");
        }
        if let (Some(r), Some(label)) = (r, &rom_label) {
            push_rows(&mut csv, r, label);
        }
    }
    write_text(&ctx.path("transfer.csv"), &csv)?;
    ctx.manifest(
        "sweep",
        json!({
            "n": sys.n(),
            "k_count": ks.len(),
            "fom_skipped": fom.iter().filter(|f| f.is_none()).count(),
            "rom_r": rom.as_ref().map(|r| r.r()),
        }),
    )?;
    Ok(Outcome::Success)
}

pub fn study(ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.config.study_config(ctx.norm)?;
    let result = mor_core::study::run_study(&cfg)?;
    emit_csv(&result, &ctx.path("errors.csv"))?;
    emit_stopping_csv(&result, &ctx.path("stopping.csv"))?;
    emit_summary_csv(&result, &ctx.path("summary.csv"))?;
    let svgs = emit_svg(&result, &ctx.out, "errors")?;
    let failures = result.property_failures();
    for f in &failures {
        log::error!("property failure: {f}");
    }
    ctx.manifest(
        "study",
        json!({
            "study_hash": result.config_hash,
            "n": result.n,
            "rows": result.rows.len(),
            "skipped": result.skipped.len(),
            "checkpoints": result.checkpoints,
            "stopping_norm": result.stopping_norm,
            "stopping_index": result.stopping.stop_index,
            "stopping_r": result.stopping_r(),
            "svg": svgs.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
            "property_failures": failures,
            "seconds": result.seconds,
        }),
    )?;
    Ok(if failures.is_empty() {
        Outcome::Success
    } else {
        Outcome::PropertyFailure(failures)
    })
}

pub fn verify(ctx: &Context) -> Result<Outcome> {
    let v = ctx
        .config
        .verify
        .as_ref()
        .ok_or_else(|| MorError::InvalidConfig("missing [verify] section".into()))?;
    let norm = ctx.norm.unwrap_or(v.norm);
    let sys = ctx.build()?;
    let fits = verify_order(&sys, v.k0, &v.r_values, &v.offsets, norm)?;
    let mut csv = String::from("r,estimator,offset,discrepancy\n");
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for f in &fits {
        let name = match f.estimator {
            Estimator::Hat => "hat",
            Estimator::Tilde => "tilde",
        };
        for (d, e) in &f.points {
            let _ = writeln!(csv, "{},{name},{d:?},{e:?}", f.r);
        }
        let required = f.r as f64 + 0.5;
        if f.slope < required {
            failures.push(format!("r = {}, {name}: slope {:.3} < {required}", f.r, f.slope));
        }
        summary.push(json!({ "r": f.r, "estimator": name, "slope": f.slope, "residual": f.residual }));
    }
    write_text(&ctx.path("order.csv"), &csv)?;
    for f in &failures {
        log::error!("property failure: {f}");
    }
    ctx.manifest(
        "verify-order",
        json!({
            "k0": v.k0,
            "norm": norm,
            "fits": summary,
            "property_failures": failures,
        }),
    )?;
    Ok(if failures.is_empty() {
        Outcome::Success
    } else {
        Outcome::PropertyFailure(failures)
    })
}
