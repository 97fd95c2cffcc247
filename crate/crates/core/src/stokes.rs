//! Auxiliary Stokes maps: interface-data lifting and volume-force solve,
//! sharing one Taylor–Hood factorization per resolvent parameter.
//!
//! Unknowns of the saddle system are `[u_F, p, c]` where `u_F` are the
//! interior velocity dofs, `p` the P1 pressure and `c` a scalar that is at
//! once the Lagrange multiplier of the mean-zero pressure condition and the
//! constant weak divergence:
//!
//! ```text
//! [ A_FF  -B_Fᵀ  0 ] [u_F]   [ f_F - A_FG g ]
//! [ -B_F   0     m ] [ p ] = [ B_G g        ]
//! [ 0      mᵀ    0 ] [ c ]   [ 0            ]
//! ```
//!
//! with `A = λM_f + ½D_f` and `m_i = ⟨q_i, 1⟩`.

use rayon::prelude::*;

use crate::error::{FsiError, Result};
use crate::fem::{FemOperators, FluidNodeKind};
use crate::geometry::Subdomain;
use crate::scalar::{dot, Real};
use crate::sparse::{Block, CsrMatrix, LdlFactor, LdlOptions, TripletBuilder};

#[derive(Clone, Debug)]
pub struct StokesSolution<T> {
    /// Full `V_f` coefficients, boundary values included.
    pub velocity: Vec<T>,
    /// Mean-zero `Q_f` coefficients.
    pub pressure: Vec<T>,
    /// Constant weak divergence of `velocity`.
    pub div_mean: T,
}

/// Factorized Stokes operator for one value of `λ`.
pub struct StokesSolver<'a, T> {
    ops: &'a FemOperators<T>,
    lambda: T,
    /// `λM_f + ½D_f` on all fluid dofs.
    a_f: CsrMatrix<T>,
    free: Vec<usize>,
    a_fg: CsrMatrix<T>,
    b_g: CsrMatrix<T>,
    factor: LdlFactor<T>,
}

impl<'a, T: Real> StokesSolver<'a, T> {
    pub fn new(ops: &'a FemOperators<T>, lambda: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(FsiError::Config(format!("resolvent parameter must be positive, got {lambda}")));
        }
        let sp = &ops.spaces;
        let a_f = ops.fluid.mass.lin_comb(lambda, &ops.fluid.sym_grad, T::lit(0.5));
        let free = sp.fluid_dofs(FluidNodeKind::Interior);
        let gamma = &sp.trace_fluid;
        let nq = sp.n_pressure();
        let all_q: Vec<usize> = (0..nq).collect();
        let a_ff = a_f.submatrix(&free, &free);
        let a_fg = a_f.submatrix(&free, gamma);
        let b_f = ops.fluid.divergence.submatrix(&all_q, &free);
        let b_g = ops.fluid.divergence.submatrix(&all_q, gamma);

        let nf = free.len();
        let dim = nf + nq + 1;
        let mut kb = TripletBuilder::with_capacity(dim, dim, a_ff.nnz() + 2 * b_f.nnz() + 2 * nq);
        kb.push_matrix(&a_ff, T::one(), 0, 0);
        kb.push_matrix(&b_f, -T::one(), nf, 0);
        kb.push_matrix(&b_f.transpose(), -T::one(), 0, nf);
        for (i, &m) in ops.pressure.ones.iter().enumerate() {
            kb.push(nf + i, nf + nq, m);
            kb.push(nf + nq, nf + i, m);
        }
        let k = kb.build();

        let fc = sp.dof_coords(Subdomain::Fluid);
        let mut coords: Vec<Option<[f64; 2]>> = free.iter().map(|&d| Some(fc[d])).collect();
        coords.extend(sp.pressure_coords().into_iter().map(Some));
        coords.push(None);
        let mut blocks = vec![Block::Primal; nf];
        blocks.extend(std::iter::repeat_n(Block::Dual, nq));
        blocks.push(Block::Primal);
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
            a_f,
            free,
            a_fg,
            b_g,
            factor,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn ops(&self) -> &'a FemOperators<T> {
        self.ops
    }

    /// `λM_f + ½D_f` on the full fluid space.
    pub fn fluid_operator(&self) -> &CsrMatrix<T> {
        &self.a_f
    }

    pub fn factor(&self) -> &LdlFactor<T> {
        &self.factor
    }

    fn solve_system(&self, rhs_u: &[T], rhs_p: &[T], g: Option<&[T]>) -> Result<StokesSolution<T>> {
        let nf = self.free.len();
        let nq = rhs_p.len();
        let mut rhs = Vec::with_capacity(nf + nq + 1);
        rhs.extend_from_slice(rhs_u);
        rhs.extend_from_slice(rhs_p);
        rhs.push(T::zero());
        let x = self.factor.solve(&rhs)?;
        let mut velocity = vec![T::zero(); self.ops.spaces.n_fluid()];
        for (i, &d) in self.free.iter().enumerate() {
            velocity[d] = x[i];
        }
        if let Some(g) = g {
            for (k, &d) in self.ops.spaces.trace_fluid.iter().enumerate() {
                velocity[d] = g[k];
            }
        }
        Ok(StokesSolution {
            velocity,
            pressure: x[nf..nf + nq].to_vec(),
            div_mean: x[nf + nq],
        })
    }

    /// Stokes flow with interface trace `g`, no-slip on the outer wall and
    /// constant divergence `∮(g·ν) / |Ω_f|`.
    pub fn solve_lifting(&self, g: &[T]) -> Result<StokesSolution<T>> {
        if g.len() != self.ops.spaces.n_gamma() {
            return Err(FsiError::Dimension(format!(
                "lifting datum has {} coefficients, expected {}",
                g.len(),
                self.ops.spaces.n_gamma()
            )));
        }
        let rhs_u: Vec<T> = self.a_fg.mul_vec(g).into_iter().map(|v| -v).collect();
        let rhs_p = self.b_g.mul_vec(g);
        self.solve_system(&rhs_u, &rhs_p, Some(g))
    }

    /// Stokes flow driven by the load vector `f` (a `V_f` dual vector) with
    /// homogeneous velocity on all of `∂Ω_f`.
    pub fn solve_forced(&self, f: &[T]) -> Result<StokesSolution<T>> {
        if f.len() != self.ops.spaces.n_fluid() {
            return Err(FsiError::Dimension(format!(
                "load has {} coefficients, expected {}",
                f.len(),
                self.ops.spaces.n_fluid()
            )));
        }
        let rhs_u: Vec<T> = self.free.iter().map(|&d| f[d]).collect();
        let rhs_p = vec![T::zero(); self.ops.spaces.n_pressure()];
        self.solve_system(&rhs_u, &rhs_p, None)
    }

    /// `⟨(λ + ½D) u₁(ξ), u₁(φ)⟩`: the fluid's share of the structure form.
    pub fn energy_pairing(&self, xi: &[T], phi: &[T]) -> Result<T> {
        let a = self.solve_lifting(xi)?;
        let b = self.solve_lifting(phi)?;
        Ok(self.a_f.bilinear(&a.velocity, &b.velocity))
    }

    /// Lifting velocities of every `V_γ` basis function, computed in parallel
    /// against the shared factorization. Column `k` is returned at index `k`.
    pub fn lifting_basis(&self) -> Result<Vec<Vec<T>>> {
        let n = self.ops.spaces.n_gamma();
        (0..n)
            .into_par_iter()
            .map(|k| {
                let mut e = vec![T::zero(); n];
                e[k] = T::one();
                self.solve_lifting(&e).map(|s| s.velocity)
            })
            .collect()
    }

    /// Dense Dirichlet-to-Neumann matrix `Uᵀ A_f U` on `V_γ`, where `U`
    /// holds the lifting of each basis function.
    pub fn dtn_matrix(&self, basis: &[Vec<T>]) -> Vec<Vec<T>> {
        let au: Vec<Vec<T>> = basis.par_iter().map(|u| self.a_f.mul_vec(u)).collect();
        let n = basis.len();
        let mut out = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                // symmetrize by averaging the two mathematically equal products
                let v = (dot(&basis[i], &au[j]) + dot(&basis[j], &au[i])) * T::lit(0.5);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    /// `⟨p, div v⟩` for a discrete pressure and velocity: the term that must
    /// vanish when `p` is mean-zero and `v` has constant weak divergence.
    pub fn pressure_divergence_pairing(&self, p: &[T], v: &[T]) -> T {
        dot(p, &self.ops.fluid.divergence.mul_vec(v))
    }
}

/// Convenience wrapper building a fresh solver.
pub fn solve_stokes_lifting<T: Real>(ops: &FemOperators<T>, g: &[T], lambda: T) -> Result<StokesSolution<T>> {
    StokesSolver::new(ops, lambda)?.solve_lifting(g)
}

pub fn solve_stokes_forced<T: Real>(ops: &FemOperators<T>, f: &[T], lambda: T) -> Result<StokesSolution<T>> {
    StokesSolver::new(ops, lambda)?.solve_forced(f)
}

pub fn fluid_energy_pairing<T: Real>(solver: &StokesSolver<'_, T>, xi: &[T], phi: &[T]) -> Result<T> {
    solver.energy_pairing(xi, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::MaterialParams;
    use crate::geometry::GeometryConfig;
    use crate::scalar::norm_inf;

    fn ops(level: u32) -> FemOperators<f64> {
        FemOperators::build(&GeometryConfig::default().with_refinement(level), MaterialParams::default()).unwrap()
    }

    fn normal_field(o: &FemOperators<f64>) -> Vec<f64> {
        // average of adjacent edge normals at each chain node; exact on edge interiors
        let sp = &o.spaces;
        let chain = &sp.mesh.interface_chain;
        let n = chain.len();
        let mut g = Vec::with_capacity(sp.n_gamma());
        for k in 0..n {
            let prev = chain[(k + n - 1) % n].normal;
            let cur = chain[k].normal;
            g.extend_from_slice(&[(prev[0] + cur[0]) * 0.5, (prev[1] + cur[1]) * 0.5]);
            g.extend_from_slice(&cur);
        }
        g
    }

    #[test]
    fn zero_data_gives_zero() {
        let o = ops(0);
        let s = StokesSolver::new(&o, 1.0).unwrap();
        let l = s.solve_lifting(&vec![0.0; o.spaces.n_gamma()]).unwrap();
        assert!(l.velocity.iter().chain(&l.pressure).all(|&v| v == 0.0));
        let f = s.solve_forced(&vec![0.0; o.spaces.n_fluid()]).unwrap();
        assert!(f.velocity.iter().all(|&v| v == 0.0) && f.div_mean == 0.0);
    }

    #[test]
    fn div_mean_is_flux_over_area() {
        let o = ops(0);
        let s = StokesSolver::new(&o, 1.0).unwrap();
        let g = normal_field(&o);
        let flux = o.interface_flux(&g);
        let sol = s.solve_lifting(&g).unwrap();
        assert!((sol.div_mean - flux / 8.0).abs() < 1e-12);
        let bu = o.fluid.divergence.mul_vec(&sol.velocity);
        for (b, m) in bu.iter().zip(&o.pressure.ones) {
            assert!((b - sol.div_mean * m).abs() < 1e-11);
        }
        assert!(dot(&sol.pressure, &o.pressure.ones).abs() < 1e-12);
    }

    #[test]
    fn flux_free_lifting_is_divergence_free() {
        let o = ops(1);
        let s = StokesSolver::new(&o, 2.0).unwrap();
        // tangential-ish field: (1, 0) everywhere has zero flux on a closed curve
        let g: Vec<f64> = (0..o.spaces.n_gamma()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let sol = s.solve_lifting(&g).unwrap();
        assert!(sol.div_mean.abs() < 1e-12);
        assert!(o.divergence_residual(&sol.velocity) < 1e-10);
    }

    #[test]
    fn pairing_symmetric_and_nonnegative() {
        let o = ops(0);
        let s = StokesSolver::new(&o, 1.5).unwrap();
        let n = o.spaces.n_gamma();
        let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 1.1).cos()).collect();
        let ab = s.energy_pairing(&a, &b).unwrap();
        let ba = s.energy_pairing(&b, &a).unwrap();
        assert!((ab - ba).abs() <= 1e-10 * ab.abs().max(1.0));
        assert!(s.energy_pairing(&a, &a).unwrap() > 0.0);
    }

    #[test]
    fn lifting_is_linear_and_reuse_matches_cold_solve() {
        let o = ops(0);
        let s = StokesSolver::new(&o, 1.0).unwrap();
        let n = o.spaces.n_gamma();
        let a: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| (2.0 * i as f64).cos()).collect();
        let comb: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        let (sa, sb, sc) = (
            s.solve_lifting(&a).unwrap(),
            s.solve_lifting(&b).unwrap(),
            s.solve_lifting(&comb).unwrap(),
        );
        let diff: Vec<f64> = (0..sa.velocity.len())
            .map(|i| 2.0 * sa.velocity[i] - 0.5 * sb.velocity[i] - sc.velocity[i])
            .collect();
        assert!(norm_inf(&diff) < 1e-10);
        let cold = solve_stokes_lifting(&o, &a, 1.0).unwrap();
        assert_eq!(cold.velocity, sa.velocity);
    }

    #[test]
    fn boxed_term_vanishes() {
        let o = ops(0);
        let s = StokesSolver::new(&o, 1.0).unwrap();
        let n = o.spaces.n_gamma();
        let g: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).sin()).collect();
        let l = s.solve_lifting(&g).unwrap();
        let f: Vec<f64> = (0..o.spaces.n_fluid()).map(|i| (0.7 * i as f64).cos()).collect();
        let fs = s.solve_forced(&f).unwrap();
        let p: Vec<f64> = l.pressure.iter().zip(&fs.pressure).map(|(a, b)| a + b).collect();
        let t: Vec<f64> = (0..n).map(|i| (1.3 * i as f64).cos()).collect();
        let ut = s.solve_lifting(&t).unwrap();
        assert!(s.pressure_divergence_pairing(&p, &ut.velocity).abs() < 1e-10);
    }

    #[test]
    fn dtn_matches_pairing() {
        let o = ops(0);
        let s = StokesSolver::new(&o, 1.0).unwrap();
        let basis = s.lifting_basis().unwrap();
        let dtn = s.dtn_matrix(&basis);
        let n = o.spaces.n_gamma();
        let mut e3 = vec![0.0; n];
        e3[3] = 1.0;
        let mut e5 = vec![0.0; n];
        e5[5] = 1.0;
        let direct = s.energy_pairing(&e3, &e5).unwrap();
        assert!((dtn[3][5] - direct).abs() < 1e-12);
    }
}
