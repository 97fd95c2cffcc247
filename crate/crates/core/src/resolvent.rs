//! Resolvent `(λI − A)Φ = Φ*` through the structure-driven mixed system.
//!
//! Unknowns are the thick velocity `w₁ ∈ V_s`; its interface trace is the
//! thin velocity `h₁`, so the coupled space `S = {(φ, ψ): φ = ψ|Γs}` is just
//! `V_s`. The fluid enters through the Dirichlet-to-Neumann block built from
//! one Stokes lifting per interface basis function. The single saddle
//! constraint is zero flux of `h₁` through the interface; its multiplier is
//! the pressure constant `c₀`.

use crate::error::{FsiError, Result};
use crate::fem::{check_trace_constraint, FemOperators, FluidNodeKind, StateVector};
use crate::geometry::Subdomain;
use crate::scalar::{dot, norm_inf, Real};
use crate::sparse::{Block, CsrMatrix, Inertia, LdlFactor, LdlOptions, TripletBuilder};
use crate::stokes::{StokesSolution, StokesSolver};

/// `[A_S N; Nᵀ 0]` data for one right-hand side.
#[derive(Clone, Debug)]
pub struct SaddleSystem<T> {
    pub a_s: CsrMatrix<T>,
    /// `N_i = −⟨ν, φ_i⟩_{Γs}` over `V_s` dofs (zero off the interface).
    pub n: Vec<T>,
    pub f: Vec<T>,
    pub lambda: T,
}

/// Weak residuals of the three resolvent equations, each relative to the
/// magnitude of the terms that make it up.
#[derive(Clone, Debug, Default)]
pub struct ResidualReport<T> {
    /// Fluid momentum at interior fluid dofs.
    pub s1_momentum: T,
    /// `⟨q, div u₀⟩` for every pressure basis function.
    pub s1_continuity: T,
    /// Combined thin/thick/fluid balance at interface dofs.
    pub s2_interface: T,
    /// Thick momentum at solid dofs off the interface.
    pub s3_thick: T,
}

impl<T: Real> ResidualReport<T> {
    pub fn max(&self) -> T {
        self.s1_momentum
            .max(self.s1_continuity)
            .max(self.s2_interface)
            .max(self.s3_thick)
    }
}

#[derive(Clone, Debug)]
pub struct ResolventSolution<T> {
    pub state: StateVector<T>,
    /// `p₀ = p₁ + p₂ + c₀` on `Q_f`.
    pub pressure: Vec<T>,
    pub c0: T,
    /// `⟨ν, h₁⟩_{Γs}` after the saddle solve.
    pub flux: T,
    pub residuals: ResidualReport<T>,
}

/// Domain conditions of the generator, checked discretely.
#[derive(Clone, Debug)]
pub struct DomainReport<T> {
    /// Components live in the conforming spaces (true by construction).
    pub conforming: bool,
    pub stokes_residual: T,
    pub elastic_residual: T,
    pub thin_residual: T,
    /// `max |u₀|Γs − h₁|`, exactly zero on shared dofs.
    pub fluid_trace_gap: T,
    /// `max |h₁ − w₁|Γs|`.
    pub structure_trace_gap: T,
    /// `max |u₀|Γf|`.
    pub wall_trace: T,
}

impl<T: Real> DomainReport<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.conforming
            && self.stokes_residual <= tol
            && self.elastic_residual <= tol
            && self.thin_residual <= tol
            && self.fluid_trace_gap == T::zero()
            && self.structure_trace_gap == T::zero()
            && self.wall_trace == T::zero()
    }
}

/// Adds `alpha · T'ᵀ G T'` for a `V_γ` matrix `G` into a `V_s`-sized builder.
fn scatter_gamma<T: Real>(b: &mut TripletBuilder<T>, g: &CsrMatrix<T>, alpha: T, trace: &[usize]) {
    for i in 0..g.nrows() {
        for (j, v) in g.row(i) {
            b.push(trace[i], trace[j], alpha * v);
        }
    }
}

/// `A_S = T'(λM_γ + L_γ/λ + DtN)T + λM_s + (K_s + M_s)/λ`. With `dtn = None`
/// the fluid block is left out (diagnostic mode).
pub fn assemble_structure_matrix<T: Real>(ops: &FemOperators<T>, lambda: T, dtn: Option<&[Vec<T>]>) -> CsrMatrix<T> {
    let sp = &ops.spaces;
    let n = sp.n_solid();
    let inv = T::one() / lambda;
    let mut b = TripletBuilder::with_capacity(n, n, 3 * ops.k_s.nnz() + sp.n_gamma().pow(2));
    b.push_matrix(&ops.m_s, lambda + inv, 0, 0);
    b.push_matrix(&ops.k_s, inv, 0, 0);
    scatter_gamma(&mut b, &ops.m_gamma, lambda, &sp.trace_solid);
    scatter_gamma(&mut b, &ops.l_gamma, inv, &sp.trace_solid);
    if let Some(d) = dtn {
        for (i, row) in d.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                b.push(sp.trace_solid[i], sp.trace_solid[j], v);
            }
        }
    }
    b.build()
}

/// `N = −T'n_γ`.
pub fn constraint_vector<T: Real>(ops: &FemOperators<T>) -> Vec<T> {
    let g: Vec<T> = ops.normal_load.iter().map(|&v| -v).collect();
    ops.spaces.extend_from_gamma_to_solid(&g)
}

/// Factorized `[A_S N; Nᵀ 0]`.
pub struct SaddleFactor<T> {
    factor: LdlFactor<T>,
    n_s: usize,
}

impl<T: Real> SaddleFactor<T> {
    pub fn new(a_s: &CsrMatrix<T>, n: &[T], coords: Option<Vec<[f64; 2]>>) -> Result<Self> {
        let n_s = a_s.nrows();
        if n.len() != n_s {
            return Err(FsiError::Dimension(format!(
                "constraint vector has {} entries, structure matrix {}",
                n.len(),
                n_s
            )));
        }
        if norm_inf(n) == T::zero() {
            return Err(FsiError::Geometry("constraint vector N vanishes".into()));
        }
        let mut b = TripletBuilder::with_capacity(n_s + 1, n_s + 1, a_s.nnz() + 2 * n_s);
        b.push_matrix(a_s, T::one(), 0, 0);
        for (i, &v) in n.iter().enumerate() {
            if v != T::zero() {
                b.push(i, n_s, v);
                b.push(n_s, i, v);
            }
        }
        let k = b.build();
        let mut blocks = vec![Block::Primal; n_s];
        blocks.push(Block::Dual);
        let coords = coords.map(|c| c.into_iter().map(Some).chain(std::iter::once(None)).collect());
        let factor = LdlFactor::new(
            &k,
            &LdlOptions {
                blocks: Some(blocks),
                coords,
                ..Default::default()
            },
        )?;
        let inertia = factor.inertia();
        if inertia != (Inertia { positive: n_s, negative: 1 }) {
            let min_pivot = factor
                .pivots()
                .iter()
                .fold(T::infinity(), |m, &p| m.min(p.abs()))
                .to_f64_lossy();
            return Err(FsiError::SolverFailure {
                message: format!(
                    "saddle matrix has inertia ({}+, {}-), expected ({}+, 1-); smallest |pivot| {:e}",
                    inertia.positive, inertia.negative, n_s, min_pivot
                ),
                residual: f64::NAN,
            });
        }
        Ok(Self { factor, n_s })
    }

    /// Returns `(x, c₀)` with `A_S x + c₀ N = f`, `Nᵀx = 0`.
    pub fn solve(&self, f: &[T]) -> Result<(Vec<T>, T)> {
        let mut rhs = f.to_vec();
        rhs.push(T::zero());
        let mut x = self.factor.solve(&rhs)?;
        let c0 = x.pop().unwrap_or_else(T::zero);
        debug_assert_eq!(x.len(), self.n_s);
        Ok((x, c0))
    }
}

/// One-shot saddle solve with a zero-flux post-check.
pub fn solve_saddle<T: Real>(sys: &SaddleSystem<T>) -> Result<(Vec<T>, T)> {
    let sf = SaddleFactor::new(&sys.a_s, &sys.n, None)?;
    let (x, c0) = sf.solve(&sys.f)?;
    let nx = dot(&sys.n, &x).abs();
    let n1: T = sys.n.iter().map(|v| v.abs()).sum();
    let x_scale = norm_inf(&x) + norm_inf(&sys.f) / sys.a_s.norm_inf().max(T::min_positive_value());
    if nx > T::lit(1e-10) * n1 * x_scale {
        return Err(FsiError::SolverFailure {
            message: "constraint row not satisfied".into(),
            residual: nx.to_f64_lossy(),
        });
    }
    Ok((x, c0))
}

/// `h₀ = (h₁ + h₀*)/λ`, `w₀ = (w₁ + w₀*)/λ`.
pub fn recover_structure<T: Real>(
    h1: &[T],
    w1: &[T],
    data: &StateVector<T>,
    lambda: T,
    ops: &FemOperators<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    check_trace_constraint(data, &ops.spaces)?;
    let h0: Vec<T> = h1.iter().zip(&data.h).map(|(&a, &b)| (a + b) / lambda).collect();
    let w0: Vec<T> = w1.iter().zip(&data.w).map(|(&a, &b)| (a + b) / lambda).collect();
    if ops.spaces.trace_of_solid(&w0) != h0 {
        return Err(FsiError::ConstraintViolation(
            "recovered displacement trace differs from h₀".into(),
        ));
    }
    Ok((h0, w0))
}

/// The cached resolvent operator for one `λ`.
pub struct ResolventSolver<'a, T> {
    ops: &'a FemOperators<T>,
    lambda: T,
    stokes: StokesSolver<'a, T>,
    /// Lifting velocity of each `V_γ` basis function.
    lifting: Vec<Vec<T>>,
    dtn: Vec<Vec<T>>,
    a_s: CsrMatrix<T>,
    n: Vec<T>,
    saddle: SaddleFactor<T>,
    /// `LDLᵀ` of `A_S` alone; all pivots positive certifies definiteness.
    structure_factor: LdlFactor<T>,
}

impl<'a, T: Real> ResolventSolver<'a, T> {
    pub fn new(ops: &'a FemOperators<T>, lambda: T) -> Result<Self> {
        let stokes = StokesSolver::new(ops, lambda)?;
        let lifting = stokes.lifting_basis()?;
        let dtn = stokes.dtn_matrix(&lifting);
        let a_s = assemble_structure_matrix(ops, lambda, Some(&dtn));
        let n = constraint_vector(ops);
        let coords = ops.spaces.dof_coords(Subdomain::Solid);
        let structure_factor = LdlFactor::new(
            &a_s,
            &LdlOptions {
                coords: Some(coords.iter().map(|&c| Some(c)).collect()),
                ..Default::default()
            },
        )?;
        if structure_factor.inertia().negative > 0 || structure_factor.pivots().iter().any(|&p| p <= T::zero()) {
            return Err(FsiError::SolverFailure {
                message: format!(
                    "structure matrix is not positive definite (smallest eigenvalue estimate {:e})",
                    structure_factor.smallest_eigenvalue_estimate(30).to_f64_lossy()
                ),
                residual: f64::NAN,
            });
        }
        let saddle = SaddleFactor::new(&a_s, &n, Some(coords))?;
        Ok(Self {
            ops,
            lambda,
            stokes,
            lifting,
            dtn,
            a_s,
            n,
            saddle,
            structure_factor,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn ops(&self) -> &'a FemOperators<T> {
        self.ops
    }

    pub fn stokes(&self) -> &StokesSolver<'a, T> {
        &self.stokes
    }

    pub fn dtn(&self) -> &[Vec<T>] {
        &self.dtn
    }

    pub fn structure_matrix(&self) -> &CsrMatrix<T> {
        &self.a_s
    }

    pub fn constraint(&self) -> &[T] {
        &self.n
    }

    /// Inverse-iteration estimate of the smallest eigenvalue of `A_S`.
    pub fn structure_min_eigenvalue(&self) -> T {
        self.structure_factor.smallest_eigenvalue_estimate(40)
    }

    /// `Uᵀ v`: pairs a fluid dual vector with every lifting.
    fn lifting_transpose(&self, v: &[T]) -> Vec<T> {
        self.lifting.iter().map(|u| dot(u, v)).collect()
    }

    /// Load vector `F` and the forced Stokes solution `u₂(u₀*)` it needs.
    pub fn load_vector(&self, data: &StateVector<T>) -> Result<(Vec<T>, StokesSolution<T>)> {
        let ops = self.ops;
        let sp = &ops.spaces;
        data.check_dims(sp)?;
        let inv = T::one() / self.lambda;
        let mu_star = ops.fluid.mass.mul_vec(&data.u);
        let u2 = self.stokes.solve_forced(&mu_star)?;
        let au2 = self.stokes.fluid_operator().mul_vec(&u2.velocity);
        let fluid_dual: Vec<T> = mu_star.iter().zip(&au2).map(|(&m, &a)| m - a).collect();
        let mut g = self.lifting_transpose(&fluid_dual);
        let lh0 = ops.l_gamma.mul_vec(&data.h);
        let mh1 = ops.m_gamma.mul_vec(&data.h_t);
        for k in 0..g.len() {
            g[k] += mh1[k] - inv * lh0[k];
        }
        let mut f = sp.extend_from_gamma_to_solid(&g);
        let kw0 = ops.k_s.mul_vec(&data.w);
        let mw0 = ops.m_s.mul_vec(&data.w);
        let mw1 = ops.m_s.mul_vec(&data.w_t);
        for i in 0..f.len() {
            f[i] += mw1[i] - inv * (kw0[i] + mw0[i]);
        }
        Ok((f, u2))
    }

    pub fn assemble_mixed_system(&self, data: &StateVector<T>) -> Result<SaddleSystem<T>> {
        let (f, _) = self.load_vector(data)?;
        Ok(SaddleSystem {
            a_s: self.a_s.clone(),
            n: self.n.clone(),
            f,
            lambda: self.lambda,
        })
    }

    /// `u₀ = u₁(w₁|Γs) + u₂(u₀*)`, `p₀ = p₁ + p₂ + c₀`.
    pub fn reconstruct_fluid(&self, h1: &[T], u_star: &[T], c0: T) -> Result<(Vec<T>, Vec<T>)> {
        let ops = self.ops;
        let flux = ops.interface_flux(h1);
        let scale = crate::scalar::norm2(h1) * crate::scalar::norm2(&ops.normal_load);
        if flux.abs() > T::lit(1e-9) * scale.max(T::min_positive_value()) {
            return Err(FsiError::Compatibility {
                flux: flux.to_f64_lossy(),
                tol: (T::lit(1e-9) * scale).to_f64_lossy(),
            });
        }
        let u1 = self.stokes.solve_lifting(h1)?;
        let u2 = self.stokes.solve_forced(&ops.fluid.mass.mul_vec(u_star))?;
        let mut u0 = u1.velocity;
        for (a, &b) in u0.iter_mut().zip(&u2.velocity) {
            *a += b;
        }
        // the interface trace is h₁ verbatim: u₂ vanishes there and 0.0 is additive identity
        let p0: Vec<T> = u1.pressure.iter().zip(&u2.pressure).map(|(&a, &b)| a + b + c0).collect();
        Ok((u0, p0))
    }

    /// Full pipeline: assemble, saddle solve, recover, reconstruct, check.
    pub fn apply(&self, data: &StateVector<T>) -> Result<ResolventSolution<T>> {
        check_trace_constraint(data, &self.ops.spaces)?;
        let (f, _) = self.load_vector(data)?;
        let (w1, c0) = self.saddle.solve(&f)?;
        let sp = &self.ops.spaces;
        let h1 = sp.trace_of_solid(&w1);
        let flux = self.ops.interface_flux(&h1);
        let (h0, w0) = recover_structure(&h1, &w1, data, self.lambda, self.ops)?;
        let (u0, pressure) = self.reconstruct_fluid(&h1, &data.u, c0)?;
        let state = StateVector {
            u: u0,
            h: h0,
            h_t: h1,
            w: w0,
            w_t: w1,
        };
        let residuals = resolvent_residuals(self.ops, self.stokes.fluid_operator(), self.lambda, &state, &pressure, data);
        Ok(ResolventSolution {
            state,
            pressure,
            c0,
            flux,
            residuals,
        })
    }
}

fn relative<T: Real>(res: &[T], scale: T) -> T {
    let r = norm_inf(res);
    if r == T::zero() {
        T::zero()
    } else {
        r / scale.max(T::min_positive_value())
    }
}

/// Residuals of the weak resolvent equations for a candidate `(Φ, p₀)`.
///
/// `a_f` is `λM_f + ½D_f`. The interface residual tests with `V_s` basis
/// functions on `Γs` extended into the fluid by the fluid basis function at
/// the same node, so the traction terms cancel and only assembled forms
/// remain.
pub fn resolvent_residuals<T: Real>(
    ops: &FemOperators<T>,
    a_f: &CsrMatrix<T>,
    lambda: T,
    phi: &StateVector<T>,
    pressure: &[T],
    data: &StateVector<T>,
) -> ResidualReport<T> {
    let sp = &ops.spaces;
    // fluid: A_f u₀ − Bᵀp₀ − M_f u*
    let au = a_f.mul_vec(&phi.u);
    let btp = ops.fluid.divergence.transpose_mul_vec(pressure);
    let mus = ops.fluid.mass.mul_vec(&data.u);
    let fluid_res: Vec<T> = (0..au.len()).map(|i| au[i] - btp[i] - mus[i]).collect();
    let interior = sp.fluid_dofs(FluidNodeKind::Interior);
    let pick = |v: &[T], idx: &[usize]| -> Vec<T> { idx.iter().map(|&i| v[i]).collect() };
    let fluid_scale = norm_inf(&pick(&au, &interior)) + norm_inf(&pick(&btp, &interior)) + norm_inf(&pick(&mus, &interior));
    let s1_momentum = relative(&pick(&fluid_res, &interior), fluid_scale);

    let bu = ops.fluid.divergence.mul_vec(&phi.u);
    let s1_continuity = relative(&bu, ops.fluid.divergence.norm_inf() * norm_inf(&phi.u));

    // thick: λM w₁ + K w₀ + M w₀ − M w₁*, and λw₀ − w₁ = w₀* holds by construction
    let mw1 = ops.m_s.mul_vec(&phi.w_t);
    let kw0 = ops.k_s.mul_vec(&phi.w);
    let mw0 = ops.m_s.mul_vec(&phi.w);
    let mws = ops.m_s.mul_vec(&data.w_t);
    let solid_res: Vec<T> = (0..mw1.len()).map(|i| lambda * mw1[i] + kw0[i] + mw0[i] - mws[i]).collect();
    let solid_interior = sp.solid_interior_dofs();
    let solid_scale = lambda * norm_inf(&mw1) + norm_inf(&kw0) + norm_inf(&mw0) + norm_inf(&mws);
    let s3_thick = relative(&pick(&solid_res, &solid_interior), solid_scale);

    // thin plus both bulk residuals at interface dofs
    let mh1 = ops.m_gamma.mul_vec(&phi.h_t);
    let lh0 = ops.l_gamma.mul_vec(&phi.h);
    let mhs = ops.m_gamma.mul_vec(&data.h_t);
    let n_g = sp.n_gamma();
    let mut thin = vec![T::zero(); n_g];
    for k in 0..n_g {
        thin[k] = lambda * mh1[k] + lh0[k] - mhs[k] + solid_res[sp.trace_solid[k]] + fluid_res[sp.trace_fluid[k]];
    }
    let thin_scale = lambda * norm_inf(&mh1)
        + norm_inf(&lh0)
        + norm_inf(&mhs)
        + solid_scale
        + norm_inf(&au)
        + norm_inf(&btp)
        + norm_inf(&mus);
    let s2_interface = relative(&thin, thin_scale);

    ResidualReport {
        s1_momentum,
        s1_continuity,
        s2_interface,
        s3_thick,
    }
}

/// Discrete domain conditions: conforming spaces, the three weak residuals
/// and exact trace matching.
pub fn check_domain_membership<T: Real>(sol: &ResolventSolution<T>, ops: &FemOperators<T>) -> DomainReport<T> {
    let sp = &ops.spaces;
    let st = &sol.state;
    let u_trace = sp.trace_of_fluid(&st.u);
    let w_trace = sp.trace_of_solid(&st.w_t);
    let gap = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
    let wall = sp
        .fluid_dofs(FluidNodeKind::Wall)
        .iter()
        .fold(T::zero(), |m, &d| m.max(st.u[d].abs()));
    DomainReport {
        conforming: st.check_dims(sp).is_ok(),
        stokes_residual: sol.residuals.s1_momentum.max(sol.residuals.s1_continuity),
        elastic_residual: sol.residuals.s3_thick,
        thin_residual: sol.residuals.s2_interface,
        fluid_trace_gap: gap(&u_trace, &st.h_t),
        structure_trace_gap: gap(&st.h_t, &w_trace),
        wall_trace: wall,
    }
}

/// `AΦ = λΦ − Φ*`.
pub fn generator_action<T: Real>(phi: &StateVector<T>, data: &StateVector<T>, lambda: T) -> StateVector<T> {
    StateVector::lin_comb(lambda, phi, -T::one(), data)
}

/// Builds a solver and applies it once.
pub fn resolvent_apply<T: Real>(ops: &FemOperators<T>, data: &StateVector<T>, lambda: T) -> Result<ResolventSolution<T>> {
    ResolventSolver::new(ops, lambda)?.apply(data)
}
