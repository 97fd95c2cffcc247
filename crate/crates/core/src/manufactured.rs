//! Manufactured Stokes problem used to calibrate the fluid solver.
//!
//! `u = curl ψ` with `ψ = sin²(πx) sin²(πy)`. Both `ψ` and `∇ψ` vanish on
//! every grid line `x, y ∈ ℤ`, so `u` satisfies no-slip on both the outer and
//! the interface boundary of the default geometry. The pressure
//! `cos(πx) cos(πy)` has zero mean on that fluid domain.

use std::f64::consts::PI;

use crate::element::p2_values;
use crate::error::Result;
use crate::fem::{integrate_vector_field, FemOperators, MaterialParams};
use crate::geometry::{GeometryConfig, Subdomain};
use crate::quadrature::triangle_deg8;
use crate::scalar::least_squares_rate;
use crate::stokes::StokesSolver;

/// `a(s) = sin²(πs)` and its first three derivatives.
fn a_derivs(s: f64) -> [f64; 4] {
    let sin = (PI * s).sin();
    let (s2, c2) = (2.0 * PI * s).sin_cos();
    [sin * sin, PI * s2, 2.0 * PI * PI * c2, -4.0 * PI.powi(3) * s2]
}

/// Exact velocity, its gradient `g[c][j] = ∂_j u_c`, and its Laplacian.
pub fn exact_velocity(p: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2], [f64; 2]) {
    let (ax, ay) = (a_derivs(p[0]), a_derivs(p[1]));
    let u = [ax[0] * ay[1], -ax[1] * ay[0]];
    let g = [[ax[1] * ay[1], ax[0] * ay[2]], [-ax[2] * ay[0], -ax[1] * ay[1]]];
    let lap = [ax[2] * ay[1] + ax[0] * ay[3], -(ax[3] * ay[0] + ax[1] * ay[2])];
    (u, g, lap)
}

pub fn exact_pressure(p: [f64; 2]) -> f64 {
    (PI * p[0]).cos() * (PI * p[1]).cos()
}

fn exact_pressure_gradient(p: [f64; 2]) -> [f64; 2] {
    let (sx, cx) = (PI * p[0]).sin_cos();
    let (sy, cy) = (PI * p[1]).sin_cos();
    [-PI * sx * cy, -PI * cx * sy]
}

/// `f = λu − Δu + ∇p`.
pub fn forcing(p: [f64; 2], lambda: f64) -> [f64; 2] {
    let (u, _, lap) = exact_velocity(p);
    let gp = exact_pressure_gradient(p);
    [lambda * u[0] - lap[0] + gp[0], lambda * u[1] - lap[1] + gp[1]]
}

/// `∫ f · φ_i` for every fluid velocity dof, degree-8 quadrature.
pub fn load_vector(ops: &FemOperators<f64>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let sp = &ops.spaces;
    let rule = triangle_deg8::<f64>();
    let mut load = vec![0.0; sp.n_fluid()];
    for t in sp.mesh.triangles_in(Subdomain::Fluid) {
        let g = sp.mesh.triangle_geometry(t);
        let dofs = sp.vector_dofs(t, &sp.fluid_local);
        for (r, &w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(g.map(*r));
            let phi = p2_values(*r);
            let jw = w * g.area * 2.0;
            for a in 0..6 {
                for c in 0..2 {
                    load[dofs[2 * a + c]] += jw * phi[a] * fx[c];
                }
            }
        }
    }
    load
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub velocity_l2: f64,
    pub velocity_h1: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub l2_rate: f64,
    pub h1_rate: f64,
}

/// Solves the manufactured problem at each level and fits log-log rates.
pub fn stokes_convergence(geometry: &GeometryConfig, levels: &[u32], lambda: f64) -> Result<ConvergenceStudy> {
    let mut rows = Vec::new();
    for &level in levels {
        let ops = FemOperators::build(&geometry.with_refinement(level), MaterialParams::default())?;
        let solver = StokesSolver::new(&ops, lambda)?;
        let load = load_vector(&ops, |p| forcing(p, lambda));
        let sol = solver.solve_forced(&load)?;
        let l2 = integrate_vector_field(&ops.spaces, Subdomain::Fluid, &sol.velocity, |x, v, _| {
            let (u, _, _) = exact_velocity(x);
            (v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2)
        });
        let h1 = integrate_vector_field(&ops.spaces, Subdomain::Fluid, &sol.velocity, |x, _, gr| {
            let (_, g, _) = exact_velocity(x);
            (0..2).flat_map(|c| (0..2).map(move |j| (c, j))).map(|(c, j)| (gr[c][j] - g[c][j]).powi(2)).sum()
        });
        rows.push(ConvergenceRow {
            level,
            h: geometry.base_h / f64::from(1u32 << level),
            velocity_l2: l2.sqrt(),
            velocity_h1: h1.sqrt(),
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.velocity_l2).collect();
    let h1: Vec<f64> = rows.iter().map(|r| r.velocity_h1).collect();
    Ok(ConvergenceStudy {
        l2_rate: least_squares_rate(&hs, &l2),
        h1_rate: least_squares_rate(&hs, &h1),
        rows,
    })
}
