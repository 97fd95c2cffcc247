//! Built-in initial data, random data for property sweeps, and a
//! manufactured resolvent datum with a known pressure.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{FsiError, Result};
use crate::fem::{FemOperators, HProjector, StateVector};
use crate::geometry::Subdomain;
use crate::infsup::elastic_extension;
use crate::pressure::PressureEliminator;
use crate::quadrature::segment_deg5;
use crate::scalar::Real;
use crate::sparse::{LdlFactor, LdlOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialDatum {
    Zero,
    StructureBump,
    InterfaceMode,
    FluidVortex,
}

impl InitialDatum {
    pub const ALL: [InitialDatum; 4] = [
        InitialDatum::Zero,
        InitialDatum::StructureBump,
        InitialDatum::InterfaceMode,
        InitialDatum::FluidVortex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitialDatum::Zero => "zero",
            InitialDatum::StructureBump => "structure_bump",
            InitialDatum::InterfaceMode => "interface_mode",
            InitialDatum::FluidVortex => "fluid_vortex",
        }
    }
}

impl fmt::Display for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitialDatum {
    type Err = FsiError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| FsiError::Usage(format!("unknown datum '{s}' (expected zero, structure_bump, interface_mode or fluid_vortex)")))
    }
}

/// `((x−x0)(x1−x)(y−y0)(y1−y))` normalized to 1 at the box center.
fn box_bubble<T: Real>(p: [T; 2], r: &crate::geometry::Rect) -> (T, [T; 2], [[T; 2]; 2]) {
    let (x0, x1, y0, y1) = (T::lit(r.x0), T::lit(r.x1), T::lit(r.y0), T::lit(r.y1));
    let scale = T::lit(16.0 / (r.width() * r.width() * r.height() * r.height()));
    let (a, da) = ((p[0] - x0) * (x1 - p[0]), x0 + x1 - T::lit(2.0) * p[0]);
    let (b, db) = ((p[1] - y0) * (y1 - p[1]), y0 + y1 - T::lit(2.0) * p[1]);
    let dd = -T::lit(2.0);
    (
        scale * a * b,
        [scale * da * b, scale * a * db],
        [[scale * dd * b, scale * da * db], [scale * da * db, scale * a * dd]],
    )
}

pub fn make_initial_datum<T: Real>(name: InitialDatum, ops: &FemOperators<T>, projector: &HProjector<T>) -> Result<StateVector<T>> {
    let sp = &ops.spaces;
    let mut raw = StateVector::zeros(sp);
    let cfg = &sp.mesh.config;
    match name {
        InitialDatum::Zero => {}
        InitialDatum::StructureBump => {
            let amp = T::lit(0.1);
            raw.w = sp.interpolate_vector(Subdomain::Solid, |p| {
                let (b, _, _) = box_bubble(p, &cfg.inner_box);
                let b2 = b * b;
                [amp * b2, T::lit(0.5) * amp * b2]
            });
        }
        InitialDatum::InterfaceMode => {
            let perimeter = T::lit(cfg.inner_box.perimeter());
            let amp = T::lit(0.05);
            let two_pi = T::lit(2.0 * std::f64::consts::PI);
            let h = sp.interpolate_gamma(|_, s| [amp * (two_pi * T::lit(2.0) * s / perimeter).cos(), T::zero()]);
            raw.w = elastic_extension(ops, &h)?;
        }
        InitialDatum::FluidVortex => {
            // u = curl ψ with ψ = (x(3−x) y(3−y))² scaled to the outer box
            let amp = T::lit(0.5);
            raw.u = sp.interpolate_vector(Subdomain::Fluid, |p| {
                let (b, db, _) = box_bubble(p, &cfg.outer_box);
                let two_b = T::lit(2.0) * b;
                [amp * two_b * db[1], -amp * two_b * db[0]]
            });
        }
    }
    projector.project(&raw, ops)
}

/// Uniform random coefficients in `[−1, 1]`, projected to the discrete H.
pub fn random_datum<T: Real, R: Rng>(ops: &FemOperators<T>, projector: &HProjector<T>, rng: &mut R) -> Result<StateVector<T>> {
    let mut raw = StateVector::zeros(&ops.spaces);
    for v in [&mut raw.u, &mut raw.h_t, &mut raw.w, &mut raw.w_t] {
        for x in v.iter_mut() {
            *x = T::lit(rng.gen_range(-1.0..1.0));
        }
    }
    projector.project(&raw, ops)
}

/// A resolvent datum whose exact solution has zero velocities, a bubble
/// displacement `w₀ = b·c` vanishing on `Γs`, and pressure `P₃(w₀)`.
///
/// Data: `u* = ∇p` (L²-projected), `h₀* = 0`, `h₁*` = minus the tangential
/// traction of `w₀`, `w₀* = λw₀`, `w₁* = w₀ − div σ(w₀)`.
pub struct ConsistentDatum<T> {
    pub data: StateVector<T>,
    /// The pressure the resolvent should reproduce.
    pub pressure: Vec<T>,
}

pub fn consistent_pressure_datum<T: Real>(
    ops: &FemOperators<T>,
    eliminator: &PressureEliminator<'_, T>,
    lambda: T,
    c: [T; 2],
) -> Result<ConsistentDatum<T>> {
    let sp = &ops.spaces;
    let inner = &sp.mesh.config.inner_box;
    let (mu, lam) = (ops.params.mu, ops.params.lambda_lame);
    let w0 = sp.interpolate_vector(Subdomain::Solid, |p| {
        let (b, _, _) = box_bubble(p, inner);
        [b * c[0], b * c[1]]
    });
    let pressure = eliminator.solve_p3(&w0)?.values;

    // u* = M_f⁻¹ ∫ ∇p_h · φ over the full fluid space
    let mut load = vec![T::zero(); sp.n_fluid()];
    for t in sp.mesh.triangles_in(Subdomain::Fluid) {
        let g = sp.mesh.triangle_geometry(t);
        let tri = sp.mesh.triangles[t];
        let mut grad = [T::zero(); 2];
        for i in 0..3 {
            let pv = pressure[sp.pressure_local[tri[i]]];
            grad[0] += pv * g.grad_bary[i][0];
            grad[1] += pv * g.grad_bary[i][1];
        }
        // ∫ of P2 vertex functions is 0, of edge functions area/3
        for &n in &sp.p2_triangles[t][3..] {
            let l = sp.fluid_local[n];
            load[2 * l] += grad[0] * g.area / T::lit(3.0);
            load[2 * l + 1] += grad[1] * g.area / T::lit(3.0);
        }
    }
    let mf = LdlFactor::new(
        &ops.fluid.mass,
        &LdlOptions {
            coords: Some(sp.dof_coords(Subdomain::Fluid).into_iter().map(Some).collect()),
            ..Default::default()
        },
    )?;
    let u_star = mf.solve(&load)?;

    // σ(w₀) for w₀ = b c
    let sigma = |p: [T; 2]| -> [[T; 2]; 2] {
        let (_, db, _) = box_bubble(p, inner);
        let g = [[c[0] * db[0], c[0] * db[1]], [c[1] * db[0], c[1] * db[1]]];
        let div = g[0][0] + g[1][1];
        let mut s = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] = mu * (g[i][j] + g[j][i]);
            }
            s[i][i] += lam * div;
        }
        s
    };
    // h₁* = −(σν − ((σν)·ν)ν), L²-projected onto V_γ edge by edge
    let chain = &sp.mesh.interface_chain;
    let npos = 2 * chain.len();
    let rule = segment_deg5::<T>();
    let mut hl = vec![T::zero(); sp.n_gamma()];
    for (k, ie) in chain.iter().enumerate() {
        let pa = sp.mesh.vertices[ie.vertices[0]];
        let pb = sp.mesh.vertices[ie.vertices[1]];
        let nu = ie.normal;
        let pos = [2 * k, 2 * k + 1, (2 * k + 2) % npos];
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let s = sigma(x);
            let sn = [s[0][0] * nu[0] + s[0][1] * nu[1], s[1][0] * nu[0] + s[1][1] * nu[1]];
            let nn = sn[0] * nu[0] + sn[1] * nu[1];
            let tang = [sn[0] - nn * nu[0], sn[1] - nn * nu[1]];
            let phi = crate::element::segment_p2_values(t);
            for i in 0..3 {
                for cc in 0..2 {
                    hl[2 * pos[i] + cc] -= w * ie.length * phi[i] * tang[cc];
                }
            }
        }
    }
    let mg = LdlFactor::new(&ops.m_gamma, &LdlOptions::default())?;
    let h_t = mg.solve(&hl)?;

    // w₁* = w₀ − div σ(w₀); div σ = μΔw + (μ + λ)∇ div w
    let w_t = sp.interpolate_vector(Subdomain::Solid, |p| {
        let (b, _, h) = box_bubble(p, inner);
        let lap = h[0][0] + h[1][1];
        let grad_div = [
            c[0] * h[0][0] + c[1] * h[0][1],
            c[0] * h[1][0] + c[1] * h[1][1],
        ];
        let mut out = [T::zero(); 2];
        for i in 0..2 {
            out[i] = b * c[i] - (mu * lap * c[i] + (mu + lam) * grad_div[i]);
        }
        out
    });
    let w: Vec<T> = w0.iter().map(|&v| lambda * v).collect();
    let data = StateVector {
        u: u_star,
        h: sp.trace_of_solid(&w),
        h_t,
        w,
        w_t,
    };
    Ok(ConsistentDatum { data, pressure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{check_trace_constraint, MaterialParams};
    use crate::geometry::GeometryConfig;
    use crate::scalar::norm_inf;

    #[test]
    fn names_round_trip() {
        for d in InitialDatum::ALL {
            assert_eq!(d.name().parse::<InitialDatum>().unwrap(), d);
        }
        assert!(matches!("vortex".parse::<InitialDatum>(), Err(FsiError::Usage(_))));
    }

    #[test]
    fn built_in_data_lie_in_h() {
        let o = FemOperators::<f64>::build(&GeometryConfig::default(), MaterialParams::default()).unwrap();
        let p = HProjector::new(&o).unwrap();
        for d in InitialDatum::ALL {
            let s = make_initial_datum(d, &o, &p).unwrap();
            check_trace_constraint(&s, &o.spaces).unwrap();
            assert!(o.divergence_residual(&s.u) <= 1e-10);
            match d {
                InitialDatum::Zero => assert!(s.is_zero()),
                InitialDatum::FluidVortex => assert!(norm_inf(&s.u) > 0.0),
                InitialDatum::InterfaceMode => {
                    assert_eq!(s.h, o.spaces.trace_of_solid(&s.w));
                    assert!(norm_inf(&s.h) > 0.0);
                }
                InitialDatum::StructureBump => {
                    assert!(norm_inf(&s.h) == 0.0 && norm_inf(&s.w) > 0.0);
                }
            }
        }
    }
}
