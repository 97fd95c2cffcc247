//! Discrete inf-sup constant of the zero-flux constraint.
//!
//! With `V = ℝ` the supremum over unit `r` is exactly the dual norm of the
//! constraint vector: `β_h = sqrt(Nᵀ M_S⁻¹ N)`, where `M_S` is the Gram matrix
//! of the natural `H¹(Γs) × H¹(Ω_s)` product on `S`.

use crate::error::{FsiError, Result};
use crate::fem::FemOperators;
use crate::geometry::Subdomain;
use crate::resolvent::{constraint_vector, ResolventSolver};
use crate::scalar::{dot, Real};
use crate::sparse::{Block, CsrMatrix, LdlFactor, LdlOptions, TripletBuilder};

#[derive(Clone, Debug)]
pub struct InfSupEstimate<T> {
    /// `sqrt(Nᵀ M_S⁻¹ N)` in the `H¹` product.
    pub beta: T,
    /// Same quantity in the norm induced by the structure form at `λ = 1`.
    pub beta_a: T,
    /// `b([z, Ez], 1) / ‖[z, Ez]‖_S` for the constructive candidate.
    pub constructive: T,
    /// `‖z‖_{H¹(Γs)}`, the closed form suggested by the continuous argument.
    pub z_h1: T,
}

/// `M_S = T'(M_γ + L_γ)T + M_s + G_s`.
pub fn s_gram_matrix<T: Real>(ops: &FemOperators<T>) -> CsrMatrix<T> {
    let sp = &ops.spaces;
    let n = sp.n_solid();
    let mut b = TripletBuilder::new(n, n);
    b.push_matrix(&ops.m_s, T::one(), 0, 0);
    b.push_matrix(&ops.grad_s, T::one(), 0, 0);
    let g = ops.m_gamma.lin_comb(T::one(), &ops.l_gamma, T::one());
    for i in 0..g.nrows() {
        for (j, v) in g.row(i) {
            b.push(sp.trace_solid[i], sp.trace_solid[j], v);
        }
    }
    b.build()
}

fn spd_factor<T: Real>(ops: &FemOperators<T>, m: &CsrMatrix<T>) -> Result<LdlFactor<T>> {
    let coords = ops.spaces.dof_coords(Subdomain::Solid);
    LdlFactor::new(
        m,
        &LdlOptions {
            coords: Some(coords.into_iter().map(Some).collect()),
            ..Default::default()
        },
    )
}

/// Dual norm `sqrt(Nᵀ M⁻¹ N)`.
pub fn dual_norm<T: Real>(factor: &LdlFactor<T>, n: &[T]) -> Result<T> {
    let y = factor.solve(n)?;
    Ok(dot(n, &y).max(T::zero()).sqrt())
}

/// Mean-zero periodic solution of `z'' = ν` componentwise:
/// `L_γ z = −n_γ` with both component means constrained to zero.
pub fn normal_potential<T: Real>(ops: &FemOperators<T>) -> Result<Vec<T>> {
    let ng = ops.spaces.n_gamma();
    let flux = ops.normal_load.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let closure = [0, 1].map(|c| ops.normal_load.iter().skip(c).step_by(2).copied().sum::<T>());
    if closure.iter().any(|s| s.abs() > T::lit(1e-10) * flux.max(T::one())) {
        return Err(FsiError::Geometry(format!(
            "normal field does not integrate to zero: ({:e}, {:e})",
            closure[0].to_f64_lossy(),
            closure[1].to_f64_lossy()
        )));
    }
    let ones: Vec<T> = ops.m_gamma.mul_vec(&vec![T::one(); ng]);
    let mut b = TripletBuilder::new(ng + 2, ng + 2);
    b.push_matrix(&ops.l_gamma, T::one(), 0, 0);
    for i in 0..ng {
        let c = i % 2;
        b.push(i, ng + c, ones[i]);
        b.push(ng + c, i, ones[i]);
    }
    let mut blocks = vec![Block::Primal; ng];
    blocks.extend([Block::Dual, Block::Dual]);
    let f = LdlFactor::new(
        &b.build(),
        &LdlOptions {
            blocks: Some(blocks),
            ..Default::default()
        },
    )?;
    let mut rhs: Vec<T> = ops.normal_load.iter().map(|&v| -v).collect();
    rhs.extend([T::zero(), T::zero()]);
    let mut z = f.solve(&rhs)?;
    z.truncate(ng);
    Ok(z)
}

/// Discrete elastic extension of an interface field: minimizes
/// `⟨σ(v), ε(v)⟩ + ‖v‖²` over `V_s` with trace `z`.
pub fn elastic_extension<T: Real>(ops: &FemOperators<T>, z: &[T]) -> Result<Vec<T>> {
    let sp = &ops.spaces;
    let k = ops.k_s.lin_comb(T::one(), &ops.m_s, T::one());
    let interior = sp.solid_interior_dofs();
    let k_ii = k.submatrix(&interior, &interior);
    let k_ig = k.submatrix(&interior, &sp.trace_solid);
    let coords = sp.dof_coords(Subdomain::Solid);
    let f = LdlFactor::new(
        &k_ii,
        &LdlOptions {
            coords: Some(interior.iter().map(|&d| Some(coords[d])).collect()),
            ..Default::default()
        },
    )?;
    let rhs: Vec<T> = k_ig.mul_vec(z).into_iter().map(|v| -v).collect();
    let vi = f.solve(&rhs)?;
    let mut v = vec![T::zero(); sp.n_solid()];
    for (i, &d) in interior.iter().enumerate() {
        v[d] = vi[i];
    }
    for (k, &d) in sp.trace_solid.iter().enumerate() {
        v[d] = z[k];
    }
    Ok(v)
}

pub fn estimate_inf_sup<T: Real>(ops: &FemOperators<T>) -> Result<InfSupEstimate<T>> {
    let n = constraint_vector(ops);
    let m_s = s_gram_matrix(ops);
    let fs = spd_factor(ops, &m_s)?;
    let beta = dual_norm(&fs, &n)?;

    let r1 = ResolventSolver::new(ops, T::one())?;
    let fa = spd_factor(ops, r1.structure_matrix())?;
    let beta_a = dual_norm(&fa, &n)?;

    let z = normal_potential(ops)?;
    let ez = elastic_extension(ops, &z)?;
    let b = dot(&n, &ez);
    let constructive = b.abs() / m_s.bilinear(&ez, &ez).sqrt();
    let z_h1 = (ops.m_gamma.bilinear(&z, &z) + ops.l_gamma.bilinear(&z, &z)).sqrt();
    Ok(InfSupEstimate {
        beta,
        beta_a,
        constructive,
        z_h1,
    })
}
