//! Implicit Euler evolution: each step solves `(λI − A)Φⁿ⁺¹ = λΦⁿ` with
//! `λ = 1/dt`, so one factorization serves the whole trajectory.

use std::io::Write;

use crate::error::{FsiError, Result};
use crate::fem::{check_trace_constraint, h_inner_components, h_inner_product, FemOperators, StateVector};
use crate::resolvent::{generator_action, ResolventSolution, ResolventSolver};
use crate::scalar::Real;

pub const CSV_HEADER: [&str; 11] = [
    "step",
    "t",
    "E_total",
    "E_fluid",
    "E_thin_grad",
    "E_thin_kin",
    "E_thick_elastic",
    "E_thick_mass",
    "E_thick_kin",
    "dissipation_residual",
    "contraction_ratio",
];

#[derive(Clone, Debug)]
pub struct EnergyReport<T> {
    pub step: usize,
    pub t: T,
    /// `½⟨Φ, Φ⟩_H`.
    pub e_total: T,
    /// The six unhalved terms of `⟨Φ, Φ⟩_H`.
    pub components: [T; 6],
    /// `|⟨AΦ, Φ⟩_H + ½‖∇u+∇ᵀu‖²|` for the step's resolvent output.
    pub dissipation_residual: T,
    /// `½‖∇u+∇ᵀu‖²_{Ωf}` of the new state.
    pub viscous_dissipation: T,
    /// `‖Φⁿ⁺¹‖_H / ‖Φⁿ‖_H`, zero when `Φⁿ = 0`.
    pub contraction_ratio: T,
}

impl<T: Real> EnergyReport<T> {
    pub fn new(ops: &FemOperators<T>, step: usize, t: T, phi: &StateVector<T>) -> Self {
        let components = h_inner_components(phi, phi, ops);
        let e_total = components.iter().copied().sum::<T>() * T::lit(0.5);
        Self {
            step,
            t,
            e_total,
            components,
            dissipation_residual: T::zero(),
            viscous_dissipation: viscous_dissipation(ops, &phi.u),
            contraction_ratio: T::one(),
        }
    }
}

/// `½‖∇u+∇ᵀu‖²_{Ωf}`.
pub fn viscous_dissipation<T: Real>(ops: &FemOperators<T>, u: &[T]) -> T {
    T::lit(0.5) * ops.fluid.sym_grad.bilinear(u, u)
}

/// `|⟨AΦ, Φ⟩_H + ½‖∇u+∇ᵀu‖²|` with `AΦ = λΦ − Φ*`.
pub fn dissipation_residual<T: Real>(ops: &FemOperators<T>, phi: &StateVector<T>, data: &StateVector<T>, lambda: T) -> Result<T> {
    let a_phi = generator_action(phi, data, lambda);
    let pairing = h_inner_product(&a_phi, phi, ops)?;
    Ok((pairing + viscous_dissipation(ops, &phi.u)).abs())
}

pub struct Evolution<'a, T> {
    resolvent: ResolventSolver<'a, T>,
    dt: T,
}

impl<'a, T: Real> Evolution<'a, T> {
    pub fn new(ops: &'a FemOperators<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(FsiError::Config(format!("dt must be positive, got {}", dt.to_f64_lossy())));
        }
        Ok(Self {
            resolvent: ResolventSolver::new(ops, T::one() / dt)?,
            dt,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn resolvent(&self) -> &ResolventSolver<'a, T> {
        &self.resolvent
    }

    /// One implicit Euler step; the report carries the index `step + 1`.
    pub fn step_full(&self, phi: &StateVector<T>, step: usize) -> Result<(ResolventSolution<T>, EnergyReport<T>)> {
        let ops = self.resolvent.ops();
        let lambda = self.resolvent.lambda();
        let data = phi.scaled(lambda);
        let sol = self.resolvent.apply(&data)?;
        let t = T::lit((step + 1) as f64) * self.dt;
        let mut report = EnergyReport::new(ops, step + 1, t, &sol.state);
        report.dissipation_residual = dissipation_residual(ops, &sol.state, &data, lambda)?;
        let before = h_inner_product(phi, phi, ops)?;
        report.contraction_ratio = if before > T::zero() {
            (report.e_total * T::lit(2.0) / before).max(T::zero()).sqrt()
        } else {
            T::zero()
        };
        Ok((sol, report))
    }

    pub fn step(&self, phi: &StateVector<T>) -> Result<(StateVector<T>, EnergyReport<T>)> {
        let (sol, report) = self.step_full(phi, 0)?;
        Ok((sol.state, report))
    }

    /// Runs `n_steps` steps from `phi0`. The trajectory starts with the
    /// report of the initial state; `on_step` sees every new state.
    pub fn evolve(
        &self,
        phi0: &StateVector<T>,
        n_steps: usize,
        mut on_step: impl FnMut(&EnergyReport<T>, &ResolventSolution<T>) -> Result<()>,
    ) -> Result<(StateVector<T>, Vec<EnergyReport<T>>)> {
        let ops = self.resolvent.ops();
        check_trace_constraint(phi0, &ops.spaces)?;
        let mut reports = vec![EnergyReport::new(ops, 0, T::zero(), phi0)];
        let mut phi = phi0.clone();
        for n in 0..n_steps {
            let (sol, report) = self.step_full(&phi, n)?;
            on_step(&report, &sol)?;
            reports.push(report);
            phi = sol.state;
        }
        Ok((phi, reports))
    }
}

/// Per-step verdicts on a trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryCheck {
    /// Largest `(Eⁿ⁺¹ − Eⁿ)/E⁰` (should be `≤ 1e−10`).
    pub worst_increase: f64,
    /// Largest violation of `Eⁿ − Eⁿ⁺¹ ≥ dt·½‖∇u+∇ᵀu‖² − 1e−8·Eⁿ`, relative to `Eⁿ`.
    pub worst_balance_violation: f64,
    pub max_contraction_ratio: f64,
    pub max_dissipation_residual: f64,
}

impl TrajectoryCheck {
    pub fn passes(&self) -> bool {
        self.worst_increase <= 1e-10 && self.worst_balance_violation <= 0.0 && self.max_contraction_ratio <= 1.0 + 1e-10
    }
}

pub fn check_trajectory<T: Real>(reports: &[EnergyReport<T>], dt: T) -> TrajectoryCheck {
    let e0 = reports.first().map_or(0.0, |r| r.e_total.to_f64_lossy());
    let dt = dt.to_f64_lossy();
    let mut check = TrajectoryCheck {
        worst_increase: f64::NEG_INFINITY,
        worst_balance_violation: f64::NEG_INFINITY,
        max_contraction_ratio: 0.0,
        max_dissipation_residual: 0.0,
    };
    for pair in reports.windows(2) {
        let (en, en1) = (pair[0].e_total.to_f64_lossy(), pair[1].e_total.to_f64_lossy());
        let rise = if e0 > 0.0 { (en1 - en) / e0 } else { en1 - en };
        check.worst_increase = check.worst_increase.max(rise);
        let slack = (en - en1) - dt * pair[1].viscous_dissipation.to_f64_lossy() + 1e-8 * en;
        let violation = if en > 0.0 { -slack / en } else { -slack };
        check.worst_balance_violation = check.worst_balance_violation.max(violation);
        check.max_contraction_ratio = check.max_contraction_ratio.max(pair[1].contraction_ratio.to_f64_lossy());
        check.max_dissipation_residual = check.max_dissipation_residual.max(pair[1].dissipation_residual.to_f64_lossy());
    }
    if reports.len() < 2 {
        check.worst_increase = 0.0;
        check.worst_balance_violation = 0.0;
    }
    check
}

/// Writes the energy trace as RFC-4180 CSV.
pub fn write_energy_csv<T: Real, W: Write>(out: W, reports: &[EnergyReport<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        let mut row = vec![r.step.to_string(), r.t.to_f64_lossy().to_string(), r.e_total.to_f64_lossy().to_string()];
        row.extend(r.components.iter().map(|c| c.to_f64_lossy().to_string()));
        row.push(r.dissipation_residual.to_f64_lossy().to_string());
        row.push(r.contraction_ratio.to_f64_lossy().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::{make_initial_datum, InitialDatum};
    use crate::fem::{h_norm, HProjector, MaterialParams};
    use crate::geometry::GeometryConfig;

    fn ops() -> FemOperators<f64> {
        FemOperators::build(&GeometryConfig::default(), MaterialParams::default()).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let o = ops();
        let ev = Evolution::new(&o, 0.1).unwrap();
        let (phi, reports) = ev.evolve(&StateVector::zeros(&o.spaces), 3, |_, _| Ok(())).unwrap();
        assert!(phi.is_zero());
        assert!(reports.iter().all(|r| r.e_total == 0.0 && r.contraction_ratio <= 1.0));
    }

    #[test]
    fn structure_probe_loses_energy_and_balances() {
        let o = ops();
        let p = HProjector::new(&o).unwrap();
        let phi0 = make_initial_datum(InitialDatum::InterfaceMode, &o, &p).unwrap();
        let dt = 0.05;
        let ev = Evolution::new(&o, dt).unwrap();
        let (_, reports) = ev.evolve(&phi0, 10, |_, _| Ok(())).unwrap();
        let c = check_trajectory(&reports, dt);
        assert!(c.passes(), "{c:?}");
        assert!(reports.last().unwrap().e_total < reports[0].e_total);
        for r in &reports {
            let sum: f64 = r.components.iter().sum();
            assert!((0.5 * sum - r.e_total).abs() <= 1e-13 * r.e_total.max(1e-300));
            assert!(r.dissipation_residual <= 1e-7 * (1.0 + 2.0 * reports[0].e_total));
        }
    }

    #[test]
    fn step_doubling_local_error_is_second_order() {
        let o = ops();
        let p = HProjector::new(&o).unwrap();
        // smoothed by resolvent applications so that A²Φ₀ stays moderate
        let r = ResolventSolver::new(&o, 1.0).unwrap();
        let mut phi0 = make_initial_datum(InitialDatum::StructureBump, &o, &p).unwrap();
        for _ in 0..3 {
            phi0 = r.apply(&phi0).unwrap().state;
        }
        let mut errs = Vec::new();
        let dts = [0.1, 0.05, 0.025];
        for dt in dts {
            let (full, _) = Evolution::new(&o, dt).unwrap().step(&phi0).unwrap();
            let half = Evolution::new(&o, dt / 2.0).unwrap();
            let (mid, _) = half.step(&phi0).unwrap();
            let (two, _) = half.step(&mid).unwrap();
            errs.push(h_norm(&StateVector::lin_comb(1.0, &full, -1.0, &two), &o).unwrap());
        }
        let rate = crate::scalar::least_squares_rate(&dts, &errs);
        assert!(rate >= 1.8, "{errs:?} rate {rate}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let o = ops();
        let ev = Evolution::new(&o, 0.1).unwrap();
        let (_, reports) = ev.evolve(&StateVector::zeros(&o.spaces), 2, |_, _| Ok(())).unwrap();
        let mut buf = Vec::new();
        write_energy_csv(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 4);
    }
}
