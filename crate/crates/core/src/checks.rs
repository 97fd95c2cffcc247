//! Measured invariants of a resolvent solve, shared by the CLI `verify`
//! command and the acceptance suite. Each check returns the measured
//! quantity; callers compare against their own thresholds.

use crate::datum::consistent_pressure_datum;
use crate::error::Result;
use crate::fem::{h_norm, FemOperators, StateVector};
use crate::monolithic::MonolithicSolver;
use crate::pressure::PressureEliminator;
use crate::resolvent::{check_domain_membership, ResolventSolution, ResolventSolver};
use crate::semigroup::dissipation_residual;

#[derive(Clone, Debug)]
pub struct ResolventCheck {
    /// `|⟨AΦ,Φ⟩ + ½‖∇u+∇ᵀu‖²| / (1 + ‖Φ*‖²)`.
    pub dissipation: f64,
    /// `λ‖Φ‖ / ‖Φ*‖` (zero for zero data); at most `1` for a contraction.
    pub contraction: f64,
    /// `|⟨ν, h₁⟩| / ‖h₁‖_{Γs}` (zero when `h₁ = 0`).
    pub flux_ratio: f64,
    /// `max |u₀|Γs − h₁|`.
    pub fluid_trace_gap: f64,
    /// `max |h₁ − w₁|Γs|`.
    pub structure_trace_gap: f64,
    /// Largest relative residual of the weak resolvent equations.
    pub residual: f64,
}

/// `‖g‖_{L²(Γs)}`.
pub fn interface_l2(ops: &FemOperators<f64>, g: &[f64]) -> f64 {
    ops.m_gamma.bilinear(g, g).max(0.0).sqrt()
}

pub fn check_solution(ops: &FemOperators<f64>, lambda: f64, data: &StateVector<f64>, sol: &ResolventSolution<f64>) -> Result<ResolventCheck> {
    let norm_data = h_norm(data, ops)?;
    let norm_sol = h_norm(&sol.state, ops)?;
    let h1 = interface_l2(ops, &sol.state.h_t);
    let dom = check_domain_membership(sol, ops);
    Ok(ResolventCheck {
        dissipation: dissipation_residual(ops, &sol.state, data, lambda)? / (1.0 + norm_data * norm_data),
        contraction: if norm_data > 0.0 { lambda * norm_sol / norm_data } else { 0.0 },
        flux_ratio: if h1 > 0.0 { sol.flux.abs() / h1 } else { 0.0 },
        fluid_trace_gap: dom.fluid_trace_gap,
        structure_trace_gap: dom.structure_trace_gap,
        residual: sol.residuals.max(),
    })
}

pub fn check_resolvent(solver: &ResolventSolver<'_, f64>, data: &StateVector<f64>) -> Result<(ResolventSolution<f64>, ResolventCheck)> {
    let sol = solver.apply(data)?;
    let check = check_solution(solver.ops(), solver.lambda(), data, &sol)?;
    Ok((sol, check))
}

/// `‖Φ_schur − Φ_mono‖_H / ‖Φ*‖_H`.
pub fn route_equivalence(
    schur: &ResolventSolver<'_, f64>,
    mono: &MonolithicSolver<'_, f64>,
    data: &StateVector<f64>,
) -> Result<f64> {
    let ops = schur.ops();
    let a = schur.apply(data)?.state;
    let b = mono.solve(data)?.state;
    let diff = h_norm(&StateVector::lin_comb(1.0, &a, -1.0, &b), ops)?;
    let scale = h_norm(data, ops)?;
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Relative `L²(Ωf)` distance between the resolvent pressure `p₁ + p₂ + c₀`
/// and the harmonic reconstruction `P₁(u₀) + P₂(h₀) + P₃(w₀)` for the
/// manufactured datum whose exact solution has zero velocities.
pub fn pressure_consistency(ops: &FemOperators<f64>, lambda: f64) -> Result<f64> {
    let pe = PressureEliminator::new(ops)?;
    let datum = consistent_pressure_datum(ops, &pe, lambda, [1.0, 0.5])?;
    let sol = ResolventSolver::new(ops, lambda)?.apply(&datum.data)?;
    let st = &sol.state;
    let recon = pe.reconstruct_pressure(&st.u, &st.h, &st.w)?;
    Ok(pe.relative_l2_distance(&sol.pressure, &recon))
}
