//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary so the lines always show.

use std::process::ExitCode;
use std::time::Instant;

use multifsi_core::checks::{check_resolvent, interface_l2, pressure_consistency, route_equivalence, ResolventCheck};
use multifsi_core::datum::{make_initial_datum, random_datum, InitialDatum};
use multifsi_core::fem::{FemOperators, HProjector, MaterialParams, StateVector};
use multifsi_core::geometry::GeometryConfig;
use multifsi_core::infsup::estimate_inf_sup;
use multifsi_core::manufactured::stokes_convergence;
use multifsi_core::monolithic::MonolithicSolver;
use multifsi_core::resolvent::{check_domain_membership, ResolventSolver};
use multifsi_core::scalar::least_squares_rate;
use multifsi_core::semigroup::{check_trajectory, Evolution};
use multifsi_core::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240917;

fn ops(level: u32) -> Result<FemOperators<f64>> {
    FemOperators::build(&GeometryConfig::default().with_refinement(level), MaterialParams::default())
}

fn random_batch(o: &FemOperators<f64>, n: usize, seed: u64) -> Result<Vec<StateVector<f64>>> {
    let p = HProjector::new(o)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_datum(o, &p, &mut rng)).collect()
}

/// Worst flux ratio and trace gaps over every resolvent solve of the suite.
#[derive(Default)]
struct SolveLedger {
    solves: usize,
    flux: f64,
    trace_gap: f64,
}

impl SolveLedger {
    fn record(&mut self, c: &ResolventCheck) {
        self.solves += 1;
        self.flux = self.flux.max(c.flux_ratio);
        self.trace_gap = self.trace_gap.max(c.fluid_trace_gap).max(c.structure_trace_gap);
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

/// Criteria 1 and 2 share one sweep.
fn dissipativity_and_contraction(ledger: &mut SolveLedger) -> Result<(Verdict, Verdict)> {
    let o = ops(1)?;
    let data = random_batch(&o, 20, SEED)?;
    let (mut diss, mut contr) = (0.0f64, 0.0f64);
    for lambda in [0.5, 1.0, 2.0, 10.0] {
        let solver = ResolventSolver::new(&o, lambda)?;
        for d in &data {
            let (_, c) = check_resolvent(&solver, d)?;
            diss = diss.max(c.dissipation);
            contr = contr.max(c.contraction);
            ledger.record(&c);
        }
    }
    Ok((
        Verdict {
            pass: diss <= 1e-7,
            detail: format!("max |<AΦ,Φ> + ½‖∇u+∇ᵀu‖²| / (1 + ‖Φ*‖²) = {diss:.3e} (≤ 1e-7), 80 solves"),
        },
        Verdict {
            pass: contr <= 1.0 + 1e-9,
            detail: format!("max λ‖Φ‖/‖Φ*‖ = {contr:.12} (≤ 1 + 1e-9)"),
        },
    ))
}

fn route_equivalence_levels(ledger: &mut SolveLedger) -> Result<Verdict> {
    let mut worst = 0.0f64;
    let mut per_level = Vec::new();
    for level in 0..=2 {
        let o = ops(level)?;
        let lambda = o.params.lambda_res;
        let schur = ResolventSolver::new(&o, lambda)?;
        let mono = MonolithicSolver::new(&o, lambda)?;
        let mut lw = 0.0f64;
        for d in random_batch(&o, 5, SEED + u64::from(level))? {
            lw = lw.max(route_equivalence(&schur, &mono, &d)?);
            let (_, c) = check_resolvent(&schur, &d)?;
            ledger.record(&c);
        }
        per_level.push(format!("L{level} {lw:.2e}"));
        worst = worst.max(lw);
    }
    verdict(worst <= 1e-8, format!("‖Φ_schur − Φ_mono‖/‖Φ*‖: {} (≤ 1e-8)", per_level.join(", ")))
}

fn pressure_elimination() -> Result<Verdict> {
    let (mut hs, mut ds) = (Vec::new(), Vec::new());
    for level in 0..=2 {
        let o = ops(level)?;
        hs.push(o.spaces.mesh.config.base_h / f64::from(1u32 << level));
        ds.push(pressure_consistency(&o, o.params.lambda_res)?);
    }
    let rate = least_squares_rate(&hs, &ds);
    let decreasing = ds.windows(2).all(|w| w[1] < w[0]);
    verdict(
        decreasing && rate >= 0.8,
        format!("relative L² distance {:.3e} → {:.3e} → {:.3e}, rate {rate:.2} (≥ 0.8)", ds[0], ds[1], ds[2]),
    )
}

fn semigroup_contraction(ledger: &mut SolveLedger) -> Result<Verdict> {
    let o = ops(1)?;
    let p = HProjector::new(&o)?;
    let dt = 0.01;
    let evolution = Evolution::new(&o, dt)?;
    let (mut ok, mut parts) = (true, Vec::new());
    for datum in InitialDatum::ALL {
        let phi0 = make_initial_datum(datum, &o, &p)?;
        let (_, reports) = evolution.evolve(&phi0, 100, |_, sol| {
            let h1 = interface_l2(&o, &sol.state.h_t);
            let dom = check_domain_membership(sol, &o);
            ledger.solves += 1;
            if h1 > 0.0 {
                ledger.flux = ledger.flux.max(sol.flux.abs() / h1);
            }
            ledger.trace_gap = ledger.trace_gap.max(dom.fluid_trace_gap).max(dom.structure_trace_gap);
            Ok(())
        })?;
        let c = check_trajectory(&reports, dt);
        ok &= c.passes();
        let ratio = reports.last().unwrap().e_total / reports[0].e_total.max(f64::MIN_POSITIVE);
        parts.push(format!("{datum}: rise {:.1e}, balance {:.1e}, E100/E0 {ratio:.4}", c.worst_increase, c.worst_balance_violation));
    }
    verdict(ok, parts.join("; "))
}

fn inf_sup() -> Result<Verdict> {
    let mut betas = Vec::new();
    let mut below = true;
    for level in 0..=2 {
        let e = estimate_inf_sup(&ops(level)?)?;
        below &= e.constructive <= e.beta * (1.0 + 1e-12);
        betas.push(e.beta);
    }
    let (lo, hi) = betas.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &b| (l.min(b), h.max(b)));
    let spread = (hi - lo) / hi;
    verdict(
        lo > 0.0 && spread <= 0.2 && below,
        format!("β_h = {:.6} / {:.6} / {:.6}, spread {:.2}% (≤ 20%), constructive ≤ β_h: {below}", betas[0], betas[1], betas[2], 100.0 * spread),
    )
}

fn stokes_rates() -> Result<Verdict> {
    let s = stokes_convergence(&GeometryConfig::default(), &[0, 1, 2], 1.0)?;
    verdict(
        s.l2_rate >= 2.5 && s.h1_rate >= 1.7,
        format!("L² rate {:.3} (≥ 2.5), H¹ rate {:.3} (≥ 1.7)", s.l2_rate, s.h1_rate),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut ledger = SolveLedger::default();
    let mut results: Vec<(u32, &str, Result<Verdict>)> = Vec::new();
    match dissipativity_and_contraction(&mut ledger) {
        Ok((a, b)) => {
            results.push((1, "dissipativity identity", Ok(a)));
            results.push((2, "resolvent contraction", Ok(b)));
        }
        Err(e) => {
            let msg = e.to_string();
            results.push((1, "dissipativity identity", Err(e)));
            results.push((2, "resolvent contraction", Err(multifsi_core::FsiError::Usage(msg))));
        }
    }
    results.push((3, "route equivalence", route_equivalence_levels(&mut ledger)));
    results.push((5, "pressure elimination consistency", pressure_elimination()));
    results.push((6, "semigroup contraction", semigroup_contraction(&mut ledger)));
    results.push((7, "discrete inf-sup stability", inf_sup()));
    results.push((8, "manufactured Stokes convergence", stokes_rates()));
    results.push((
        4,
        "zero-flux constraint",
        verdict(ledger.flux <= 1e-10, format!("max |<ν,h₁>|/‖h₁‖ = {:.3e} over {} saddle solves (≤ 1e-10)", ledger.flux, ledger.solves)),
    ));
    results.push((
        9,
        "trace exactness",
        verdict(ledger.trace_gap == 0.0, format!("max trace gap = {:e} over {} solves (= 0)", ledger.trace_gap, ledger.solves)),
    ));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    println!("acceptance suite");
    for (n, name, r) in &results {
        match r {
            Ok(v) => {
                println!("criterion {n} [{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
                failed += usize::from(!v.pass);
            }
            Err(e) => {
                println!("criterion {n} [FAIL] {name}: error: {e}");
                failed += 1;
            }
        }
    }
    println!("{} of {} criteria passed in {:.1}s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
