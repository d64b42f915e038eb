use std::path::Path;
use std::process::{Command, Output};

use mor_core::fem::{build_model, BoundarySpec, MeasurementSet};
use mor_core::rom::TransferModel;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_soar-mor"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("out/manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn assemble_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["assemble"], "[model]\nsubdivisions = 1\n[model.boundary]\nneumann_y_min = 0.0\n");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["n"], 4);
    assert_eq!(m["command"], "assemble");
    assert!(m["config_hash"].as_str().unwrap().len() == 32);
    for name in ["M", "D", "K", "B", "C"] {
        assert!(dir.path().join(format!("out/{name}.mtx")).exists());
    }
    assert!(dir.path().join("out/mesh.txt").exists());
}

#[test]
fn assemble_desk_scale_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["assemble"], "[model]\nsubdivisions = 64\n");
    assert_eq!(code(&out), 0);
    assert_eq!(manifest(dir.path())["n"], 4225);
}

#[test]
fn missing_neumann_boundary_is_a_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["assemble"], "[model]\nsubdivisions = 2\n");
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Neumann"));
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["assemble"], "[model]\nsubdivisions = 4\ncolour = 3\n");
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("line 3"), "{err}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_soar-mor"))
        .args(["assemble", "--config"])
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.toml"));
}

#[test]
fn reduce_reports_interleaved_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nsubdivisions = 16\n[plan]\npoints = [20.0, 60.0, 100.0]\n[reduce]\nr = 40\n";
    let out = run(dir.path(), &["reduce"], cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    let cols: Vec<u64> = m["points"].as_array().unwrap().iter().map(|p| p["columns"].as_u64().unwrap()).collect();
    assert_eq!(cols, [14, 13, 13]);
    let prov = std::fs::read_to_string(dir.path().join("out/basis_provenance.csv")).unwrap();
    let mut counts = [0; 3];
    for line in prov.lines().skip(1) {
        let point: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        counts[point] += 1;
    }
    assert_eq!(counts, [14, 13, 13]);
    // k = 100 on a 16-cell mesh is under-resolved.
    assert_eq!(m["resolution"]["warning"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("under-resolves"));
}

#[test]
fn reduce_to_one_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["reduce"], "[model]\nsubdivisions = 8\n[plan]\npoints = [10.0]\n[reduce]\nr = 1\n");
    assert_eq!(code(&out), 0);
    let rom_m = std::fs::read_to_string(dir.path().join("out/rom_M.mtx")).unwrap();
    let dims = rom_m.lines().find(|l| !l.starts_with('%')).unwrap();
    assert_eq!(dims.trim(), "1 1");
}

#[test]
fn reduce_echoes_sequential_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nsubdivisions = 16\n[plan]\npoints = [20.0, 40.0]\nschedule = \"sequential\"\nbudgets = [12, 8]\n[reduce]\nr = 20\n";
    let out = run(dir.path(), &["reduce"], cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["budgets"], serde_json::json!([12, 8]));
    let cols: Vec<u64> = m["points"].as_array().unwrap().iter().map(|p| p["columns"].as_u64().unwrap()).collect();
    assert_eq!(cols, [12, 8]);
}

fn parse_transfer(path: &Path) -> Vec<(f64, String, usize, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,source,output,re,im"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].to_string(), f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn single_point_sweep_matches_library_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nsubdivisions = 8\n[sweep]\nk_min = 7.0\nk_max = 7.0\ncount = 1\n";
    let out = run(dir.path(), &["sweep"], cfg);
    assert_eq!(code(&out), 0);
    let rows = parse_transfer(&dir.path().join("out/transfer.csv"));
    let sys = build_model(8, &BoundarySpec::default(), &MeasurementSet::default_arcs()).unwrap();
    let g = sys.eval(7.0).unwrap();
    assert_eq!(rows.len(), sys.outputs());
    for (k, src, o, re, im) in rows {
        assert_eq!((k, src.as_str()), (7.0, "fom"));
        assert_eq!((re, im), (g.value[(o, 0)].re, g.value[(o, 0)].im));
    }
}

#[test]
fn rom_sweep_agrees_with_fom_at_expansion_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nsubdivisions = 16\n[plan]\npoints = [25.0]\n[sweep]\nk_min = 25.0\nk_max = 25.0\ncount = 1\nrom_r = 6\n";
    let out = run(dir.path(), &["sweep"], cfg);
    assert_eq!(code(&out), 0);
    let rows = parse_transfer(&dir.path().join("out/transfer.csv"));
    let fom: Vec<_> = rows.iter().filter(|r| r.1 == "fom").collect();
    let rom: Vec<_> = rows.iter().filter(|r| r.1 == "rom6").collect();
    assert_eq!(fom.len(), rom.len());
    let num: f64 = fom.iter().zip(&rom).map(|(a, b)| (a.3 - b.3).powi(2) + (a.4 - b.4).powi(2)).sum();
    let den: f64 = fom.iter().map(|a| a.3.powi(2) + a.4.powi(2)).sum();
    assert!((num / den).sqrt() <= 1e-8);
}

#[test]
fn empty_sweep_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["sweep"], "[model]\nsubdivisions = 8\n[sweep]\nk_min = 1.0\nk_max = 2.0\ncount = 0\n");
    assert_eq!(code(&out), 1);
}

const STUDY: &str = r#"
[model]
subdivisions = 8
[plan]
points = [5.0, 15.0]
[study]
checkpoints = [4, 8, 12]
[study.k_grid]
min = 2.0
max = 18.0
count = 6
"#;

#[test]
fn study_writes_all_artifacts_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["study"], STUDY);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read_to_string(dir.path().join("out/errors.csv")).unwrap();
    assert!(first.starts_with("r,k,norm,E_true,E_hat,E_tilde,abs_est,abs_true,skipped_reason\n"));
    for f in ["stopping.csv", "summary.csv", "errors_two.svg", "errors_sup.svg", "manifest.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let m = manifest(dir.path());
    assert_eq!(m["property_failures"].as_array().unwrap().len(), 0);
    let hash = m["config_hash"].clone();

    let again = run(dir.path(), &["study"], STUDY);
    assert_eq!(code(&again), 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("out/errors.csv")).unwrap(), first);
    assert_eq!(manifest(dir.path())["config_hash"], hash);
}

#[test]
fn norm_flag_restricts_study_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["study", "--norm", "sup", "--workers", "1"], STUDY);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("out/errors.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(2) == Some("sup")));
    assert!(!dir.path().join("out/errors_two.svg").exists());
}

#[test]
fn bad_norm_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["study", "--norm", "one"], STUDY);
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_order_passes_for_low_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nsubdivisions = 8\n[verify]\nk0 = 20.0\nr_values = [1, 2]\noffsets = [2.0, 0.6324555320336759, 0.2, 0.06324555320336758, 0.02]\n";
    let out = run(dir.path(), &["verify-order"], cfg);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["fits"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(dir.path().join("out/order.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 5);
}

#[test]
fn verify_order_flags_roundoff_dominated_fit() {
    // At r = 9 the discrepancy sits at roundoff for every offset, so no order emerges.
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[model]\nsubdivisions = 8\n[verify]\nk0 = 20.0\nr_values = [9]\noffsets = [0.02, 0.01, 0.005, 0.0025, 0.00125]\n";
    let out = run(dir.path(), &["verify-order"], cfg);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!manifest(dir.path())["property_failures"].as_array().unwrap().is_empty());
}
