//! Subcommand orchestration and file output.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use multifsi_core::checks::{check_resolvent, pressure_consistency, route_equivalence};
use multifsi_core::datum::{make_initial_datum, random_datum, InitialDatum};
use multifsi_core::fem::{h_norm, FemOperators, HProjector, StateVector};
use multifsi_core::infsup::estimate_inf_sup;
use multifsi_core::monolithic::MonolithicSolver;
use multifsi_core::resolvent::{check_domain_membership, ResolventSolver};
use multifsi_core::semigroup::{check_trajectory, write_energy_csv, Evolution};
use multifsi_core::state_io::{read_state, write_state};
use multifsi_core::vtk::write_vtk;
use multifsi_core::FsiError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{echo, Command, RunConfig};

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Solver(String),
    Invariant(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Invariant(_) => 4,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Solver(m) => write!(f, "solver failure: {m}"),
            RunError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

impl From<FsiError> for RunError {
    fn from(e: FsiError) -> Self {
        match e {
            FsiError::Config(_)
            | FsiError::Usage(_)
            | FsiError::Geometry(_)
            | FsiError::Resolution(_)
            | FsiError::Topology(_)
            | FsiError::Dimension(_)
            | FsiError::ConstraintViolation(_) => RunError::Config(e.to_string()),
            _ => RunError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Solver(format!("i/o: {e}"))
    }
}

/// Thresholds of the `verify` suite, echoed in the manifest. Every measured
/// value must be at most its threshold, except `inf_sup_positive`, which must
/// exceed it, and `pressure_consistency`, the fine/coarse ratio, which must be
/// strictly below it.
pub const TOLERANCES: [(&str, f64); 8] = [
    ("route_equivalence", 1e-8),
    ("dissipation_identity", 1e-7),
    ("resolvent_contraction", 1.0 + 1e-9),
    ("zero_flux", 1e-10),
    ("trace_exactness", 0.0),
    ("pressure_consistency", 1.0),
    ("semigroup_contraction", 1e-10),
    ("inf_sup_positive", 0.0),
];

const VERIFY_LAMBDAS: [f64; 4] = [0.5, 1.0, 2.0, 10.0];
const VERIFY_SAMPLES: usize = 3;
const VERIFY_STEPS: usize = 20;

pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_data(cfg: &RunConfig, ops: &FemOperators<f64>, projector: &HProjector<f64>) -> Result<StateVector<f64>, RunError> {
    match &cfg.datum_file {
        Some(path) => {
            let f = File::open(path).map_err(|e| RunError::Config(format!("cannot open {}: {e}", path.display())))?;
            Ok(read_state(BufReader::new(f), &ops.spaces)?)
        }
        None => Ok(make_initial_datum(cfg.datum, ops, projector)?),
    }
}

fn mesh_stats(ops: &FemOperators<f64>) -> String {
    let sp = &ops.spaces;
    format!(
        "mesh.vertices = {}\nmesh.triangles = {}\nmesh.interface_edges = {}\ndofs.fluid_velocity = {}\ndofs.pressure = {}\ndofs.interface = {}\ndofs.solid = {}\n",
        sp.mesh.num_vertices(),
        sp.mesh.num_triangles(),
        sp.mesh.interface_chain.len(),
        sp.n_fluid(),
        sp.n_pressure(),
        sp.n_gamma(),
        sp.n_solid()
    )
}

fn write_manifest(cfg: &RunConfig, command: Command, ops: Option<&FemOperators<f64>>, status: &str, files: &[PathBuf]) -> Result<(), RunError> {
    let mut s = format!("multifsi {}\ncommand = {command}\nstatus = {status}\n\n[config]\n", env!("CARGO_PKG_VERSION"));
    s.push_str(&echo(cfg));
    if let Some(ops) = ops {
        s.push_str("\n[mesh]\n");
        s.push_str(&mesh_stats(ops));
    }
    s.push_str("\n[tolerances]\n");
    for (k, v) in TOLERANCES {
        let _ = writeln!(s, "{k} = {v:e}");
    }
    s.push_str("\n[outputs]\n");
    for f in files {
        let _ = writeln!(s, "{}", f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned()));
    }
    fs::write(cfg.output_dir.join("manifest.txt"), s)?;
    Ok(())
}

/// Runs one command. The manifest is written whatever the outcome, as long
/// as the output directory can be created.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, RunError> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| RunError::Config(format!("cannot create output directory {}: {e}", cfg.output_dir.display())))?;
    let ops = match FemOperators::build(&cfg.geometry, cfg.material.clone()) {
        Ok(o) => o,
        Err(e) => {
            let err = RunError::from(e);
            write_manifest(cfg, command, None, &format!("error (exit {})", err.exit_code()), &[])?;
            return Err(err);
        }
    };
    let result = match command {
        Command::Resolvent => run_resolvent(cfg, &ops),
        Command::Evolve => run_evolve(cfg, &ops),
        Command::InfSup => run_infsup(cfg),
        Command::Verify => run_verify(cfg, &ops),
    };
    match &result {
        Ok(out) => write_manifest(cfg, command, Some(&ops), "ok", &out.files)?,
        Err(e) => write_manifest(cfg, command, Some(&ops), &format!("error (exit {})", e.exit_code()), &[])?,
    }
    result
}

fn run_resolvent(cfg: &RunConfig, ops: &FemOperators<f64>) -> Result<Outcome, RunError> {
    let projector = HProjector::new(ops)?;
    let data = load_data(cfg, ops, &projector)?;
    let lambda = cfg.material.lambda_res;
    let solver = ResolventSolver::new(ops, lambda)?;
    let (sol, check) = check_resolvent(&solver, &data)?;
    let dom = check_domain_membership(&sol, ops);
    let mut r = String::new();
    let source = cfg.datum_file.as_ref().map_or_else(|| cfg.datum.to_string(), |p| p.display().to_string());
    let _ = writeln!(r, "datum = {source}");
    let _ = writeln!(r, "lambda = {lambda:e}");
    let _ = writeln!(r, "norm_h.data = {:e}", h_norm(&data, ops)?);
    let _ = writeln!(r, "norm_h.solution = {:e}", h_norm(&sol.state, ops)?);
    let _ = writeln!(r, "c0 = {:e}", sol.c0);
    let _ = writeln!(r, "interface_flux = {:e}", sol.flux);
    let _ = writeln!(r, "residual.s1_momentum = {:e}", sol.residuals.s1_momentum);
    let _ = writeln!(r, "residual.s1_continuity = {:e}", sol.residuals.s1_continuity);
    let _ = writeln!(r, "residual.s2_interface = {:e}", sol.residuals.s2_interface);
    let _ = writeln!(r, "residual.s3_thick = {:e}", sol.residuals.s3_thick);
    let _ = writeln!(r, "dissipation_residual = {:e}", check.dissipation);
    let _ = writeln!(r, "contraction = {:e}", check.contraction);
    let _ = writeln!(r, "trace_gap.fluid = {:e}", dom.fluid_trace_gap);
    let _ = writeln!(r, "trace_gap.structure = {:e}", dom.structure_trace_gap);
    let _ = writeln!(r, "wall_trace = {:e}", dom.wall_trace);
    let mut files = vec![cfg.output_dir.join("resolvent_report.txt"), cfg.output_dir.join("solution.state")];
    fs::write(&files[0], &r)?;
    write_state(create(&files[1])?, &sol.state)?;
    if cfg.export_fields {
        let path = cfg.output_dir.join("resolvent.vtk");
        write_vtk(create(&path)?, &ops.spaces, &sol.state, Some(&sol.pressure), "multifsi resolvent")?;
        files.push(path);
    }
    Ok(Outcome { files, summary: r })
}

fn run_evolve(cfg: &RunConfig, ops: &FemOperators<f64>) -> Result<Outcome, RunError> {
    let projector = HProjector::new(ops)?;
    let phi0 = load_data(cfg, ops, &projector)?;
    let evolution = Evolution::new(ops, cfg.material.dt)?;
    let mut files = Vec::new();
    let snapshot_every = (cfg.steps / 10).max(1);
    let dir = cfg.output_dir.clone();
    let export = cfg.export_fields;
    if export {
        let path = dir.join("snapshot_0000.vtk");
        write_vtk(create(&path)?, &ops.spaces, &phi0, None, "multifsi step 0")?;
        files.push(path);
    }
    let (last, reports) = evolution.evolve(&phi0, cfg.steps, |rep, sol| {
        if export && (rep.step % snapshot_every == 0 || rep.step == cfg.steps) {
            let path = dir.join(format!("snapshot_{:04}.vtk", rep.step));
            write_vtk(create(&path).map_err(|e| FsiError::Usage(e.to_string()))?, &ops.spaces, &sol.state, Some(&sol.pressure), &format!("multifsi step {}", rep.step))?;
            files.push(path);
        }
        Ok(())
    })?;
    let csv_path = dir.join("energy.csv");
    write_energy_csv(create(&csv_path)?, &reports)?;
    let state_path = dir.join("final.state");
    write_state(create(&state_path)?, &last)?;
    files.insert(0, csv_path);
    files.insert(1, state_path);
    let check = check_trajectory(&reports, cfg.material.dt);
    let e0 = reports[0].e_total;
    let en = reports.last().map_or(e0, |r| r.e_total);
    let summary = format!(
        "steps = {}\ndt = {:e}\nenergy.initial = {e0:e}\nenergy.final = {en:e}\nenergy.ratio = {:e}\nworst_energy_increase = {:e}\nworst_balance_violation = {:e}\nmax_contraction_ratio = {:e}\nmax_dissipation_residual = {:e}\n",
        cfg.steps,
        cfg.material.dt,
        if e0 > 0.0 { en / e0 } else { 0.0 },
        check.worst_increase,
        check.worst_balance_violation,
        check.max_contraction_ratio,
        check.max_dissipation_residual
    );
    Ok(Outcome { files, summary })
}

fn run_infsup(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let path = cfg.output_dir.join("infsup.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["level", "h", "beta_h", "beta_a", "constructive", "z_h1"]).map_err(FsiError::from)?;
    let mut summary = String::new();
    for &level in &cfg.levels {
        let geo = cfg.geometry.with_refinement(level);
        let ops = FemOperators::build(&geo, cfg.material.clone())?;
        let e = estimate_inf_sup(&ops)?;
        let h = geo.base_h / f64::from(1u32 << level);
        w.write_record([level.to_string(), h.to_string(), e.beta.to_string(), e.beta_a.to_string(), e.constructive.to_string(), e.z_h1.to_string()])
            .map_err(FsiError::from)?;
        let _ = writeln!(summary, "level {level}: beta_h = {:e}, beta_a = {:e}, constructive = {:e}", e.beta, e.beta_a, e.constructive);
    }
    w.flush()?;
    Ok(Outcome { files: vec![path], summary })
}

struct Line {
    name: &'static str,
    measured: f64,
    tolerance: f64,
    pass: bool,
}

fn run_verify(cfg: &RunConfig, ops: &FemOperators<f64>) -> Result<Outcome, RunError> {
    let projector = HProjector::new(ops)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data: Vec<StateVector<f64>> = (0..VERIFY_SAMPLES)
        .map(|_| random_datum(ops, &projector, &mut rng))
        .collect::<Result<_, _>>()?;
    let tol = |name: &str| TOLERANCES.iter().find(|(k, _)| *k == name).map_or(0.0, |(_, v)| *v);
    let mut lines = Vec::new();
    let mut at_most = |name: &'static str, measured: f64| {
        let tolerance = tol(name);
        lines.push(Line { name, measured, tolerance, pass: measured <= tolerance });
    };

    let lambda = cfg.material.lambda_res;
    let schur = ResolventSolver::new(ops, lambda)?;
    let mono = MonolithicSolver::new(ops, lambda)?;
    let mut route = 0.0f64;
    for d in &data {
        route = route.max(route_equivalence(&schur, &mono, d)?);
    }
    at_most("route_equivalence", route);

    let (mut diss, mut contr, mut flux, mut gap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for lam in VERIFY_LAMBDAS {
        let solver = ResolventSolver::new(ops, lam)?;
        for d in &data {
            let (_, c) = check_resolvent(&solver, d)?;
            diss = diss.max(c.dissipation);
            contr = contr.max(c.contraction);
            flux = flux.max(c.flux_ratio);
            gap = gap.max(c.fluid_trace_gap).max(c.structure_trace_gap);
        }
    }
    at_most("dissipation_identity", diss);
    at_most("resolvent_contraction", contr);
    at_most("zero_flux", flux);
    at_most("trace_exactness", gap);

    // pressure reconstruction must improve from this level to the next
    let fine = FemOperators::build(&cfg.geometry.with_refinement(cfg.geometry.refinement_level + 1), cfg.material.clone())?;
    let (pc, pf) = (pressure_consistency(ops, lambda)?, pressure_consistency(&fine, lambda)?);
    let ratio = pf / pc;
    lines.push(Line { name: "pressure_consistency", measured: ratio, tolerance: tol("pressure_consistency"), pass: ratio < tol("pressure_consistency") });

    let evolution = Evolution::new(ops, cfg.material.dt)?;
    let mut worst = f64::NEG_INFINITY;
    let mut semigroup_ok = true;
    for datum in InitialDatum::ALL {
        let phi0 = make_initial_datum(datum, ops, &projector)?;
        let (_, reports) = evolution.evolve(&phi0, VERIFY_STEPS, |_, _| Ok(()))?;
        let c = check_trajectory(&reports, cfg.material.dt);
        worst = worst.max(c.worst_increase);
        semigroup_ok &= c.passes();
    }
    lines.push(Line { name: "semigroup_contraction", measured: worst, tolerance: tol("semigroup_contraction"), pass: semigroup_ok });

    let inf = estimate_inf_sup(ops)?;
    let pass = inf.beta > tol("inf_sup_positive") && inf.constructive <= inf.beta * (1.0 + 1e-12);
    lines.push(Line { name: "inf_sup_positive", measured: inf.beta, tolerance: tol("inf_sup_positive"), pass });

    let mut report = format!("{:<24} {:>14} {:>22}  verdict\n", "invariant", "measured", "threshold");
    for l in &lines {
        let _ = writeln!(report, "{:<24} {:>14.6e} {:>22e}  {}", l.name, l.measured, l.tolerance, if l.pass { "PASS" } else { "FAIL" });
    }
    let path = cfg.output_dir.join("verify_report.txt");
    fs::write(&path, &report)?;
    let failed: Vec<&str> = lines.iter().filter(|l| !l.pass).map(|l| l.name).collect();
    if failed.is_empty() {
        Ok(Outcome { files: vec![path], summary: report })
    } else {
        Err(RunError::Invariant(format!("{} (see {})\n{report}", failed.join(", "), path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(RunError::from(FsiError::Config("x".into())).exit_code(), 2);
        assert_eq!(RunError::from(FsiError::Usage("x".into())).exit_code(), 2);
        assert_eq!(RunError::from(FsiError::ConstraintViolation("x".into())).exit_code(), 2);
        let solver = FsiError::SolverFailure { message: "x".into(), residual: 1.0 };
        assert_eq!(RunError::from(solver).exit_code(), 3);
        assert_eq!(RunError::from(FsiError::Compatibility { flux: 1.0, tol: 0.0 }).exit_code(), 3);
        assert_eq!(RunError::Invariant("x".into()).exit_code(), 4);
    }
}
