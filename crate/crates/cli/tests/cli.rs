use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MATERIAL: &str = "material.mu = 1\nmaterial.lambda_lame = 1\nmaterial.lambda_res = 1\nmaterial.dt = 0.01\n";

fn multifsi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multifsi")).args(args).output().expect("binary runs")
}

fn run_with(dir: &Path, command: &str, config: &str, out: &str) -> Output {
    let cfg = dir.join(format!("{out}.conf"));
    fs::write(&cfg, config).unwrap();
    let out_dir = dir.join(out);
    multifsi(&[command, "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
}

fn report_value(text: &str, name: &str) -> (f64, String) {
    let line = text.lines().find(|l| l.starts_with(name)).unwrap_or_else(|| panic!("{name} missing from\n{text}"));
    let cols: Vec<&str> = line.split_whitespace().collect();
    (cols[1].parse().unwrap(), cols[3].to_string())
}

#[test]
fn verify_defaults_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "verify", MATERIAL, "verify");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("verify/verify_report.txt")).unwrap();
    for name in [
        "route_equivalence",
        "dissipation_identity",
        "resolvent_contraction",
        "zero_flux",
        "trace_exactness",
        "pressure_consistency",
        "semigroup_contraction",
        "inf_sup_positive",
    ] {
        let (_, verdict) = report_value(&report, name);
        assert_eq!(verdict, "PASS", "{name}");
    }
    // values fixed by the first green run at refinement 0
    let (beta, _) = report_value(&report, "inf_sup_positive");
    assert!((beta - 7.848914e-1).abs() < 1e-6, "{beta}");
    let (ratio, _) = report_value(&report, "pressure_consistency");
    assert!((ratio - 3.854915e-1).abs() < 1e-6, "{ratio}");
    let (gap, _) = report_value(&report, "trace_exactness");
    assert_eq!(gap, 0.0);
    let manifest = fs::read_to_string(dir.path().join("verify/manifest.txt")).unwrap();
    assert!(manifest.contains("status = ok") && manifest.contains("mesh.vertices = 49"));
}

#[test]
fn resolvent_with_zero_datum_has_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "resolvent", &format!("{MATERIAL}run.datum = zero\nrun.export_fields = true\n"), "res");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("res/resolvent_report.txt")).unwrap();
    for key in ["residual.s1_momentum", "residual.s1_continuity", "residual.s2_interface", "residual.s3_thick", "interface_flux"] {
        let line = report.lines().find(|l| l.starts_with(key)).unwrap();
        let v: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
        assert_eq!(v, 0.0, "{key}");
    }
    let vtk = fs::read_to_string(dir.path().join("res/resolvent.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 2.0\n"));
}

#[test]
fn state_file_feeds_back_as_datum() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_with(dir.path(), "resolvent", &format!("{MATERIAL}run.datum = fluid_vortex\n"), "a");
    assert_eq!(first.status.code(), Some(0));
    let state = dir.path().join("a/solution.state");
    let second = run_with(dir.path(), "resolvent", &format!("{MATERIAL}run.datum_file = {}\n", state.display()), "b");
    assert_eq!(second.status.code(), Some(0), "{}", String::from_utf8_lossy(&second.stderr));
    let report = fs::read_to_string(dir.path().join("b/resolvent_report.txt")).unwrap();
    assert!(report.contains(&format!("datum = {}", state.display())));
}

#[test]
fn missing_mu_exits_two_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "verify", &MATERIAL.replace("material.mu = 1\n", ""), "bad");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("material.mu"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for (i, extra) in ["run.colour = red\n", "run.datum = swirl\n", "geometry.inner_box = 0 4 1 2\n"].iter().enumerate() {
        let out = run_with(dir.path(), "resolvent", &format!("{MATERIAL}{extra}"), &format!("bad{i}"));
        assert_eq!(out.status.code(), Some(2), "{extra}");
    }
    let out = multifsi(&["resolvent", "--config", "/nonexistent/multifsi.conf"]);
    assert_eq!(out.status.code(), Some(2));
    let out = multifsi(&["frobnicate", "--config", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_state_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("broken.state");
    fs::write(&state, "multifsi-state v1\nu 1 0\n").unwrap();
    let out = run_with(dir.path(), "resolvent", &format!("{MATERIAL}run.datum_file = {}\n", state.display()), "broken");
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("broken/manifest.txt").exists());
}

#[test]
fn evolve_is_deterministic_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{MATERIAL}run.datum = interface_mode\nrun.steps = 5\n");
    let a = run_with(dir.path(), "evolve", &cfg, "ev1");
    let b = run_with(dir.path(), "evolve", &cfg, "ev2");
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    let ca = fs::read(dir.path().join("ev1/energy.csv")).unwrap();
    let cb = fs::read(dir.path().join("ev2/energy.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with(
        "step,t,E_total,E_fluid,E_thin_grad,E_thin_kin,E_thick_elastic,E_thick_mass,E_thick_kin,dissipation_residual,contraction_ratio\n"
    ));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn infsup_table_and_refine_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "infsup", &format!("{MATERIAL}run.levels = 0 1\n"), "inf");
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("inf/infsup.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("level,h,beta_h,beta_a,constructive,z_h1\n"));

    let cfg = dir.path().join("r.conf");
    fs::write(&cfg, format!("{MATERIAL}run.datum = zero\n")).unwrap();
    let out_dir = dir.path().join("refined");
    let out = multifsi(&["resolvent", "--config", cfg.to_str().unwrap(), "--refine", "1", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("geometry.refinement_level = 1"));
}
