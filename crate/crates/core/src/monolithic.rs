//! One-shot coupled discretization of the resolvent equations, used only as
//! an independent oracle for the structure-driven route.
//!
//! A single continuous P2 velocity lives on fluid and solid triangles
//! together (the fluid velocity `u₀` on the fluid, `w₁` on the solid, equal
//! on shared interface nodes), with wall dofs eliminated. The P1 pressure
//! has no mean constraint: testing continuity with `q = 1` already forces
//! zero interface flux, and that same row pins the constant pressure mode.

use crate::error::Result;
use crate::fem::{check_trace_constraint, FemOperators, FluidNodeKind, StateVector};
use crate::resolvent::recover_structure;
use crate::scalar::Real;
use crate::sparse::{Block, LdlFactor, LdlOptions, TripletBuilder};

const ABSENT: usize = usize::MAX;

pub struct MonolithicSolution<T> {
    pub state: StateVector<T>,
    pub pressure: Vec<T>,
}

/// Factorized coupled system for one `λ`.
pub struct MonolithicSolver<'a, T> {
    ops: &'a FemOperators<T>,
    lambda: T,
    fluid_map: Vec<usize>,
    solid_map: Vec<usize>,
    n_vel: usize,
    factor: LdlFactor<T>,
}

impl<'a, T: Real> MonolithicSolver<'a, T> {
    pub fn new(ops: &'a FemOperators<T>, lambda: T) -> Result<Self> {
        let sp = &ops.spaces;
        let n_global = sp.p2_coords.len();
        // unknown index per global P2 node
        let mut node_index = vec![ABSENT; n_global];
        let mut coords = Vec::new();
        let mut next = 0;
        let mut take = |n: usize, node_index: &mut Vec<usize>, coords: &mut Vec<Option<[f64; 2]>>| {
            if node_index[n] == ABSENT {
                node_index[n] = next;
                next += 1;
                let c = sp.p2_coords[n];
                let p = Some([c[0].to_f64_lossy(), c[1].to_f64_lossy()]);
                coords.push(p);
                coords.push(p);
            }
        };
        for (l, &n) in sp.fluid_nodes.iter().enumerate() {
            if sp.fluid_kind[l] != FluidNodeKind::Wall {
                take(n, &mut node_index, &mut coords);
            }
        }
        for &n in &sp.solid_nodes {
            take(n, &mut node_index, &mut coords);
        }
        let n_vel = 2 * next;
        let vec_map = |nodes: &[usize]| -> Vec<usize> {
            nodes
                .iter()
                .flat_map(|&n| {
                    let i = node_index[n];
                    if i == ABSENT {
                        [ABSENT, ABSENT]
                    } else {
                        [2 * i, 2 * i + 1]
                    }
                })
                .collect()
        };
        let fluid_map = vec_map(&sp.fluid_nodes);
        let solid_map = vec_map(&sp.solid_nodes);

        let nq = sp.n_pressure();
        let dim = n_vel + nq;
        let inv = T::one() / lambda;
        let mut b = TripletBuilder::new(dim, dim);
        let a_f = ops.fluid.mass.lin_comb(lambda, &ops.fluid.sym_grad, T::lit(0.5));
        for i in 0..a_f.nrows() {
            if fluid_map[i] == ABSENT {
                continue;
            }
            for (j, v) in a_f.row(i) {
                if fluid_map[j] != ABSENT {
                    b.push(fluid_map[i], fluid_map[j], v);
                }
            }
        }
        let solid = ops.m_s.lin_comb(lambda + inv, &ops.k_s, inv);
        for i in 0..solid.nrows() {
            for (j, v) in solid.row(i) {
                b.push(solid_map[i], solid_map[j], v);
            }
        }
        let thin = ops.m_gamma.lin_comb(lambda, &ops.l_gamma, inv);
        for k in 0..thin.nrows() {
            let gi = solid_map[sp.trace_solid[k]];
            for (l, v) in thin.row(k) {
                b.push(gi, solid_map[sp.trace_solid[l]], v);
            }
        }
        for q in 0..nq {
            for (j, v) in ops.fluid.divergence.row(q) {
                let g = fluid_map[j];
                if g != ABSENT {
                    b.push(n_vel + q, g, -v);
                    b.push(g, n_vel + q, -v);
                }
            }
        }
        let k = b.build();
        coords.extend(sp.pressure_coords().into_iter().map(Some));
        let mut blocks = vec![Block::Primal; n_vel];
        blocks.extend(std::iter::repeat_n(Block::Dual, nq));
        let factor = LdlFactor::new(
            &k,
            &LdlOptions {
                blocks: Some(blocks),
                coords: Some(coords),
                ..Default::default()
            },
        )?;
        Ok(Self {
            ops,
            lambda,
            fluid_map,
            solid_map,
            n_vel,
            factor,
        })
    }

    pub fn solve(&self, data: &StateVector<T>) -> Result<MonolithicSolution<T>> {
        let ops = self.ops;
        let sp = &ops.spaces;
        check_trace_constraint(data, sp)?;
        let inv = T::one() / self.lambda;
        let mut rhs = vec![T::zero(); self.factor.dim()];
        let mu = ops.fluid.mass.mul_vec(&data.u);
        for (i, &g) in self.fluid_map.iter().enumerate() {
            if g != ABSENT {
                rhs[g] += mu[i];
            }
        }
        let mh1 = ops.m_gamma.mul_vec(&data.h_t);
        let lh0 = ops.l_gamma.mul_vec(&data.h);
        for k in 0..sp.n_gamma() {
            rhs[self.solid_map[sp.trace_solid[k]]] += mh1[k] - inv * lh0[k];
        }
        let mw1 = ops.m_s.mul_vec(&data.w_t);
        let kw0 = ops.k_s.mul_vec(&data.w);
        let mw0 = ops.m_s.mul_vec(&data.w);
        for (i, &g) in self.solid_map.iter().enumerate() {
            rhs[g] += mw1[i] - inv * (kw0[i] + mw0[i]);
        }
        let x = self.factor.solve(&rhs)?;
        let u: Vec<T> = self
            .fluid_map
            .iter()
            .map(|&g| if g == ABSENT { T::zero() } else { x[g] })
            .collect();
        let w1: Vec<T> = self.solid_map.iter().map(|&g| x[g]).collect();
        let h1 = sp.trace_of_solid(&w1);
        let (h0, w0) = recover_structure(&h1, &w1, data, self.lambda, ops)?;
        Ok(MonolithicSolution {
            state: StateVector {
                u,
                h: h0,
                h_t: h1,
                w: w0,
                w_t: w1,
            },
            pressure: x[self.n_vel..].to_vec(),
        })
    }
}

pub fn monolithic_oracle<T: Real>(ops: &FemOperators<T>, data: &StateVector<T>, lambda: T) -> Result<StateVector<T>> {
    Ok(MonolithicSolver::new(ops, lambda)?.solve(data)?.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{h_norm, HProjector, MaterialParams};
    use crate::geometry::GeometryConfig;
    use crate::resolvent::{resolvent_residuals, ResolventSolver};
    use crate::scalar::norm_inf;

    fn ops() -> FemOperators<f64> {
        FemOperators::build(&GeometryConfig::default(), MaterialParams::default()).unwrap()
    }

    fn smooth_data(o: &FemOperators<f64>) -> StateVector<f64> {
        let sp = &o.spaces;
        let mut raw = StateVector::zeros(sp);
        raw.u = sp.interpolate_vector(crate::geometry::Subdomain::Fluid, |p| [p[1].sin(), p[0].cos()]);
        raw.w = sp.interpolate_vector(crate::geometry::Subdomain::Solid, |p| [p[0] * p[1], p[0] - p[1]]);
        raw.w_t = sp.interpolate_vector(crate::geometry::Subdomain::Solid, |p| [1.0, p[1] * p[1]]);
        raw.h_t = sp.interpolate_gamma(|p, _| [p[0], -0.5]);
        HProjector::new(o).unwrap().project(&raw, o).unwrap()
    }

    #[test]
    fn zero_data_zero_solution() {
        let o = ops();
        let m = MonolithicSolver::new(&o, 1.0).unwrap();
        let s = m.solve(&StateVector::zeros(&o.spaces)).unwrap();
        assert!(s.state.is_zero() && s.pressure.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn agrees_with_structure_route_including_pressure() {
        let o = ops();
        let data = smooth_data(&o);
        let lam = 1.3;
        let mono = MonolithicSolver::new(&o, lam).unwrap().solve(&data).unwrap();
        let r = ResolventSolver::new(&o, lam).unwrap();
        let schur = r.apply(&data).unwrap();
        let diff = StateVector::lin_comb(1.0, &mono.state, -1.0, &schur.state);
        let rel = h_norm(&diff, &o).unwrap() / h_norm(&data, &o).unwrap();
        assert!(rel < 1e-10, "{rel}");
        let dp: Vec<f64> = mono.pressure.iter().zip(&schur.pressure).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&dp) < 1e-8 * (1.0 + norm_inf(&schur.pressure)));
        let res = resolvent_residuals(&o, r.stokes().fluid_operator(), lam, &mono.state, &mono.pressure, &data);
        assert!(res.max() < 1e-8, "{res:?}");
    }
}
