//! Finite-element spaces, bilinear-form assembly, trace maps and the
//! finite-energy inner product.
//!
//! Spaces (all on one conforming mesh):
//! - `V_f`: vector P2 on fluid triangles (velocity `u`)
//! - `Q_f`: scalar P1 on fluid triangles (pressure)
//! - `V_s`: vector P2 on solid triangles (`w`, `w_t`)
//! - `V_γ`: vector P2 on the closed interface chain (`h`, `h_t`)
//!
//! Vector unknowns are interleaved: dof `2 * node + component`.

use crate::element::{
    p1_values, p2_gradients, p2_values, segment_p2_derivatives, segment_p2_values, TriangleGeometry,
};
use crate::error::{FsiError, Result};
use crate::geometry::{BoundaryTag, Mesh, Subdomain};
use crate::quadrature::{segment_deg5, triangle_deg4};
use crate::scalar::{dot, norm_inf, Real};
use crate::sparse::{Block, CsrMatrix, LdlFactor, LdlOptions, TripletBuilder};

const ABSENT: usize = usize::MAX;

/// Boundary class of a fluid P2 node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluidNodeKind {
    Interior,
    Interface,
    Wall,
}

#[derive(Clone, Debug)]
pub struct MaterialParams<T> {
    /// Lamé shear modulus `μ > 0`.
    pub mu: T,
    /// First Lamé parameter `≥ 0`.
    pub lambda_lame: T,
    /// Resolvent parameter `λ > 0`.
    pub lambda_res: T,
    /// Time step; the evolution uses `λ = 1 / dt`.
    pub dt: T,
}

impl<T: Real> Default for MaterialParams<T> {
    fn default() -> Self {
        Self {
            mu: T::one(),
            lambda_lame: T::one(),
            lambda_res: T::one(),
            dt: T::lit(0.01),
        }
    }
}

impl<T: Real> MaterialParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v > T::zero() && v.is_finite();
        if !ok(self.mu) {
            return Err(FsiError::Config(format!("material.mu must be positive, got {}", self.mu)));
        }
        if !(self.lambda_lame >= T::zero() && self.lambda_lame.is_finite()) {
            return Err(FsiError::Config(format!(
                "material.lambda_lame must be nonnegative, got {}",
                self.lambda_lame
            )));
        }
        if !ok(self.lambda_res) {
            return Err(FsiError::Config(format!(
                "material.lambda_res must be positive, got {}",
                self.lambda_res
            )));
        }
        if !ok(self.dt) {
            return Err(FsiError::Config(format!("material.dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: T) -> Self {
        Self {
            lambda_res: lambda,
            ..self.clone()
        }
    }
}

/// DOF bookkeeping for the four discrete spaces and their trace maps.
#[derive(Clone, Debug)]
pub struct FunctionSpaces<T> {
    pub mesh: Mesh<T>,
    /// Coordinates of every global P2 node (vertices first, then edge midpoints).
    pub p2_coords: Vec<[T; 2]>,
    /// Global P2 node ids of each triangle, local P2 order.
    pub p2_triangles: Vec<[usize; 6]>,
    pub fluid_nodes: Vec<usize>,
    pub fluid_local: Vec<usize>,
    pub fluid_kind: Vec<FluidNodeKind>,
    pub solid_nodes: Vec<usize>,
    pub solid_local: Vec<usize>,
    /// Global P2 node ids along the interface chain (vertex, midpoint, vertex, ...).
    pub chain_nodes: Vec<usize>,
    /// Fluid vertices carrying the pressure unknowns.
    pub pressure_nodes: Vec<usize>,
    pub pressure_local: Vec<usize>,
    /// `T_s`: V_γ dof → V_s dof.
    pub trace_solid: Vec<usize>,
    /// `T_f`: V_γ dof → V_f dof.
    pub trace_fluid: Vec<usize>,
}

impl<T: Real> FunctionSpaces<T> {
    pub fn new(mesh: Mesh<T>) -> Self {
        let nv = mesh.num_vertices();
        let ne = mesh.edges.len();
        let mut p2_coords = mesh.vertices.clone();
        for [a, b] in &mesh.edges {
            let (pa, pb) = (mesh.vertices[*a], mesh.vertices[*b]);
            p2_coords.push([(pa[0] + pb[0]) * T::lit(0.5), (pa[1] + pb[1]) * T::lit(0.5)]);
        }
        let p2_triangles: Vec<[usize; 6]> = mesh
            .triangles
            .iter()
            .zip(&mesh.triangle_edges)
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();

        let collect = |sub: Subdomain| {
            let mut mark = vec![false; nv + ne];
            for t in mesh.triangles_in(sub) {
                for &n in &p2_triangles[t] {
                    mark[n] = true;
                }
            }
            let nodes: Vec<usize> = (0..nv + ne).filter(|&n| mark[n]).collect();
            let mut local = vec![ABSENT; nv + ne];
            for (i, &n) in nodes.iter().enumerate() {
                local[n] = i;
            }
            (nodes, local)
        };
        let (fluid_nodes, fluid_local) = collect(Subdomain::Fluid);
        let (solid_nodes, solid_local) = collect(Subdomain::Solid);

        let mut kind_global = vec![FluidNodeKind::Interior; nv + ne];
        for be in &mesh.boundary_edges {
            let [a, b] = mesh.edges[be.edge];
            let k = match be.tag {
                BoundaryTag::GammaF => FluidNodeKind::Wall,
                BoundaryTag::GammaS => FluidNodeKind::Interface,
            };
            for n in [a, b, nv + be.edge] {
                kind_global[n] = k;
            }
        }
        let fluid_kind = fluid_nodes.iter().map(|&n| kind_global[n]).collect();

        let mut chain_nodes = Vec::with_capacity(2 * mesh.interface_chain.len());
        for ie in &mesh.interface_chain {
            chain_nodes.push(ie.vertices[0]);
            chain_nodes.push(nv + ie.edge);
        }

        let pressure_nodes: Vec<usize> = fluid_nodes.iter().copied().filter(|&n| n < nv).collect();
        let mut pressure_local = vec![ABSENT; nv];
        for (i, &n) in pressure_nodes.iter().enumerate() {
            pressure_local[n] = i;
        }

        let mut trace_solid = Vec::with_capacity(2 * chain_nodes.len());
        let mut trace_fluid = Vec::with_capacity(2 * chain_nodes.len());
        for &n in &chain_nodes {
            for c in 0..2 {
                trace_solid.push(2 * solid_local[n] + c);
                trace_fluid.push(2 * fluid_local[n] + c);
            }
        }

        Self {
            mesh,
            p2_coords,
            p2_triangles,
            fluid_nodes,
            fluid_local,
            fluid_kind,
            solid_nodes,
            solid_local,
            chain_nodes,
            pressure_nodes,
            pressure_local,
            trace_solid,
            trace_fluid,
        }
    }

    pub fn n_fluid(&self) -> usize {
        2 * self.fluid_nodes.len()
    }

    pub fn n_solid(&self) -> usize {
        2 * self.solid_nodes.len()
    }

    pub fn n_gamma(&self) -> usize {
        2 * self.chain_nodes.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure_nodes.len()
    }

    /// Fluid dofs of the given node kind, ascending.
    pub fn fluid_dofs(&self, kind: FluidNodeKind) -> Vec<usize> {
        self.fluid_kind
            .iter()
            .enumerate()
            .filter(|(_, &k)| k == kind)
            .flat_map(|(i, _)| [2 * i, 2 * i + 1])
            .collect()
    }

    /// Solid dofs not on the interface, ascending.
    pub fn solid_interior_dofs(&self) -> Vec<usize> {
        let mut on_gamma = vec![false; self.n_solid()];
        for &d in &self.trace_solid {
            on_gamma[d] = true;
        }
        (0..self.n_solid()).filter(|&d| !on_gamma[d]).collect()
    }

    /// `T_s w`: interface trace of a solid field.
    pub fn trace_of_solid(&self, w: &[T]) -> Vec<T> {
        self.trace_solid.iter().map(|&d| w[d]).collect()
    }

    /// `T_f u`: interface trace of a fluid field.
    pub fn trace_of_fluid(&self, u: &[T]) -> Vec<T> {
        self.trace_fluid.iter().map(|&d| u[d]).collect()
    }

    /// Scatters `T_sᵀ g` into a solid-sized vector.
    pub fn extend_from_gamma_to_solid(&self, g: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_solid()];
        for (k, &d) in self.trace_solid.iter().enumerate() {
            out[d] += g[k];
        }
        out
    }

    pub fn fluid_node_coord(&self, local: usize) -> [T; 2] {
        self.p2_coords[self.fluid_nodes[local]]
    }

    pub fn solid_node_coord(&self, local: usize) -> [T; 2] {
        self.p2_coords[self.solid_nodes[local]]
    }

    /// Coordinates per vector dof of a subdomain space (for solver orderings).
    pub fn dof_coords(&self, sub: Subdomain) -> Vec<[f64; 2]> {
        let nodes = match sub {
            Subdomain::Fluid => &self.fluid_nodes,
            Subdomain::Solid => &self.solid_nodes,
        };
        nodes
            .iter()
            .flat_map(|&n| {
                let c = self.p2_coords[n];
                let p = [c[0].to_f64_lossy(), c[1].to_f64_lossy()];
                [p, p]
            })
            .collect()
    }

    pub fn pressure_coords(&self) -> Vec<[f64; 2]> {
        self.pressure_nodes
            .iter()
            .map(|&n| {
                let c = self.p2_coords[n];
                [c[0].to_f64_lossy(), c[1].to_f64_lossy()]
            })
            .collect()
    }

    /// Nodal interpolation of a vector field into a subdomain space.
    pub fn interpolate_vector(&self, sub: Subdomain, f: impl Fn([T; 2]) -> [T; 2]) -> Vec<T> {
        let nodes = match sub {
            Subdomain::Fluid => &self.fluid_nodes,
            Subdomain::Solid => &self.solid_nodes,
        };
        nodes.iter().flat_map(|&n| f(self.p2_coords[n])).collect()
    }

    /// Nodal interpolation of a vector field into `V_γ` given `(point, s)`.
    pub fn interpolate_gamma(&self, f: impl Fn([T; 2], T) -> [T; 2]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_gamma());
        for (k, ie) in self.mesh.interface_chain.iter().enumerate() {
            let _ = k;
            let half = ie.length * T::lit(0.5);
            for (node, s) in [(ie.vertices[0], ie.s_start), (self.chain_nodes[2 * k + 1], ie.s_start + half)] {
                let v = f(self.p2_coords[node], s);
                out.extend_from_slice(&v);
            }
        }
        out
    }

    pub fn interpolate_pressure(&self, f: impl Fn([T; 2]) -> T) -> Vec<T> {
        self.pressure_nodes.iter().map(|&n| f(self.p2_coords[n])).collect()
    }

    /// Local-to-space dof map of a triangle for a vector P2 space (12 dofs).
    pub(crate) fn vector_dofs(&self, t: usize, local: &[usize]) -> [usize; 12] {
        let mut d = [0usize; 12];
        for (a, &n) in self.p2_triangles[t].iter().enumerate() {
            let l = local[n];
            debug_assert_ne!(l, ABSENT);
            d[2 * a] = 2 * l;
            d[2 * a + 1] = 2 * l + 1;
        }
        d
    }
}

/// Which vector bilinear form to assemble on a subdomain.
#[derive(Clone, Copy, Debug)]
enum VectorForm<T> {
    Mass,
    /// `⟨σ(u), ε(v)⟩` with `(μ, λ_lame)`.
    Elastic(T, T),
    /// `⟨∇u + ∇ᵀu, ∇v + ∇ᵀv⟩`
    SymGrad,
    /// `⟨∇u, ∇v⟩`
    Gradient,
}

fn assemble_vector_form<T: Real>(spaces: &FunctionSpaces<T>, sub: Subdomain, form: VectorForm<T>) -> CsrMatrix<T> {
    let (local, n) = match sub {
        Subdomain::Fluid => (&spaces.fluid_local, spaces.n_fluid()),
        Subdomain::Solid => (&spaces.solid_local, spaces.n_solid()),
    };
    let rule = triangle_deg4::<T>();
    let ntri = spaces.mesh.triangles_in(sub).count();
    let mut b = TripletBuilder::with_capacity(n, n, ntri * 144);
    let two = T::lit(2.0);
    for t in spaces.mesh.triangles_in(sub) {
        let g = spaces.mesh.triangle_geometry(t);
        let dofs = spaces.vector_dofs(t, local);
        let mut loc = [[T::zero(); 12]; 12];
        for (r, &w) in rule.points.iter().zip(&rule.weights) {
            let jw = w * g.area * two;
            let phi = p2_values(*r);
            let grad = p2_gradients(&g, *r);
            for a in 0..6 {
                for c in 0..2 {
                    for bb in 0..6 {
                        for d in 0..2 {
                            let ga = grad[a];
                            let gb = grad[bb];
                            let gdot = ga[0] * gb[0] + ga[1] * gb[1];
                            let same = if c == d { T::one() } else { T::zero() };
                            let v = match form {
                                VectorForm::Mass => same * phi[a] * phi[bb],
                                VectorForm::Elastic(mu, lam) => {
                                    mu * (same * gdot + ga[d] * gb[c]) + lam * ga[c] * gb[d]
                                }
                                VectorForm::SymGrad => two * (same * gdot + ga[d] * gb[c]),
                                VectorForm::Gradient => same * gdot,
                            };
                            loc[2 * a + c][2 * bb + d] += jw * v;
                        }
                    }
                }
            }
        }
        for i in 0..12 {
            for j in 0..12 {
                b.push(dofs[i], dofs[j], loc[i][j]);
            }
        }
    }
    b.build()
}

/// `K_s` realizing `⟨σ(ξ), ε(ψ)⟩_{Ω_s}` and `M_s` realizing `⟨ξ, ψ⟩_{Ω_s}`.
pub fn assemble_elasticity<T: Real>(
    spaces: &FunctionSpaces<T>,
    params: &MaterialParams<T>,
) -> (CsrMatrix<T>, CsrMatrix<T>) {
    (
        assemble_vector_form(spaces, Subdomain::Solid, VectorForm::Elastic(params.mu, params.lambda_lame)),
        assemble_vector_form(spaces, Subdomain::Solid, VectorForm::Mass),
    )
}

/// `∫_{Ω_s} ∇ψ : ∇ψ̃`, used for the `H¹(Ω_s)` product.
pub fn assemble_solid_gradient<T: Real>(spaces: &FunctionSpaces<T>) -> CsrMatrix<T> {
    assemble_vector_form(spaces, Subdomain::Solid, VectorForm::Gradient)
}

/// Fluid operators: symmetric-gradient form `D_f`, mass `M_f`, and the
/// divergence pairing `B` with `B_ij = ⟨q_i, div φ_j⟩_{Ω_f}`.
pub struct FluidForms<T> {
    pub sym_grad: CsrMatrix<T>,
    pub mass: CsrMatrix<T>,
    pub divergence: CsrMatrix<T>,
}

pub fn assemble_fluid_forms<T: Real>(spaces: &FunctionSpaces<T>) -> FluidForms<T> {
    let sym_grad = assemble_vector_form(spaces, Subdomain::Fluid, VectorForm::SymGrad);
    let mass = assemble_vector_form(spaces, Subdomain::Fluid, VectorForm::Mass);
    let rule = triangle_deg4::<T>();
    let two = T::lit(2.0);
    let mut b = TripletBuilder::new(spaces.n_pressure(), spaces.n_fluid());
    for t in spaces.mesh.triangles_in(Subdomain::Fluid) {
        let g = spaces.mesh.triangle_geometry(t);
        let vdofs = spaces.vector_dofs(t, &spaces.fluid_local);
        let tri = spaces.mesh.triangles[t];
        let mut loc = [[T::zero(); 12]; 3];
        for (r, &w) in rule.points.iter().zip(&rule.weights) {
            let jw = w * g.area * two;
            let q = p1_values(*r);
            let grad = p2_gradients(&g, *r);
            for i in 0..3 {
                for a in 0..6 {
                    for c in 0..2 {
                        loc[i][2 * a + c] += jw * q[i] * grad[a][c];
                    }
                }
            }
        }
        for i in 0..3 {
            let qi = spaces.pressure_local[tri[i]];
            for j in 0..12 {
                b.push(qi, vdofs[j], loc[i][j]);
            }
        }
    }
    FluidForms {
        sym_grad,
        mass,
        divergence: b.build(),
    }
}

/// Scalar P1 forms on the fluid: mass, Laplacian stiffness, and `⟨q_i, 1⟩`.
pub struct PressureForms<T> {
    pub mass: CsrMatrix<T>,
    pub stiffness: CsrMatrix<T>,
    pub ones: Vec<T>,
}

pub fn assemble_pressure_forms<T: Real>(spaces: &FunctionSpaces<T>) -> PressureForms<T> {
    let n = spaces.n_pressure();
    let mut m = TripletBuilder::new(n, n);
    let mut k = TripletBuilder::new(n, n);
    let mut ones = vec![T::zero(); n];
    let twelfth = T::lit(1.0 / 12.0);
    for t in spaces.mesh.triangles_in(Subdomain::Fluid) {
        let g = spaces.mesh.triangle_geometry(t);
        let tri = spaces.mesh.triangles[t];
        let gb = g.grad_bary;
        for i in 0..3 {
            let qi = spaces.pressure_local[tri[i]];
            ones[qi] += g.area / T::lit(3.0);
            for j in 0..3 {
                let qj = spaces.pressure_local[tri[j]];
                let mij = if i == j { T::lit(2.0) } else { T::one() } * g.area * twelfth;
                m.push(qi, qj, mij);
                k.push(qi, qj, g.area * (gb[i][0] * gb[j][0] + gb[i][1] * gb[j][1]));
            }
        }
    }
    PressureForms {
        mass: m.build(),
        stiffness: k.build(),
        ones,
    }
}

/// Componentwise arclength Laplacian `L_γ` and mass `M_γ` on the periodic chain.
pub fn assemble_surface_laplacian<T: Real>(spaces: &FunctionSpaces<T>) -> (CsrMatrix<T>, CsrMatrix<T>) {
    let n = spaces.n_gamma();
    let npos = spaces.chain_nodes.len();
    let rule = segment_deg5::<T>();
    let mut l = TripletBuilder::new(n, n);
    let mut m = TripletBuilder::new(n, n);
    for (k, ie) in spaces.mesh.interface_chain.iter().enumerate() {
        let pos = [2 * k, 2 * k + 1, (2 * k + 2) % npos];
        let len = ie.length;
        let mut lm = [[T::zero(); 3]; 3];
        let mut ll = [[T::zero(); 3]; 3];
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            let v = segment_p2_values(t);
            let d = segment_p2_derivatives(t);
            for i in 0..3 {
                for j in 0..3 {
                    lm[i][j] += w * len * v[i] * v[j];
                    ll[i][j] += w * d[i] * d[j] / len;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                for c in 0..2 {
                    l.push(2 * pos[i] + c, 2 * pos[j] + c, ll[i][j]);
                    m.push(2 * pos[i] + c, 2 * pos[j] + c, lm[i][j]);
                }
            }
        }
    }
    (l.build(), m.build())
}

/// `n_γ[k] = ∫_{Γ_s} ν · e_k dΓ` for every `V_γ` basis function `e_k`.
pub fn assemble_normal_load<T: Real>(spaces: &FunctionSpaces<T>) -> Vec<T> {
    let npos = spaces.chain_nodes.len();
    let mut out = vec![T::zero(); spaces.n_gamma()];
    // ∫ of the P2 segment basis: ℓ/6, 2ℓ/3, ℓ/6
    let weights = [T::lit(1.0 / 6.0), T::lit(2.0 / 3.0), T::lit(1.0 / 6.0)];
    for (k, ie) in spaces.mesh.interface_chain.iter().enumerate() {
        let pos = [2 * k, 2 * k + 1, (2 * k + 2) % npos];
        for i in 0..3 {
            for c in 0..2 {
                out[2 * pos[i] + c] += weights[i] * ie.length * ie.normal[c];
            }
        }
    }
    out
}

/// Every λ-independent operator of the discretization.
pub struct FemOperators<T> {
    pub spaces: FunctionSpaces<T>,
    pub params: MaterialParams<T>,
    pub k_s: CsrMatrix<T>,
    pub m_s: CsrMatrix<T>,
    pub grad_s: CsrMatrix<T>,
    pub fluid: FluidForms<T>,
    pub pressure: PressureForms<T>,
    pub l_gamma: CsrMatrix<T>,
    pub m_gamma: CsrMatrix<T>,
    pub normal_load: Vec<T>,
}

impl<T: Real> FemOperators<T> {
    pub fn new(spaces: FunctionSpaces<T>, params: MaterialParams<T>) -> Result<Self> {
        params.validate()?;
        let (k_s, m_s) = assemble_elasticity(&spaces, &params);
        let grad_s = assemble_solid_gradient(&spaces);
        let fluid = assemble_fluid_forms(&spaces);
        let pressure = assemble_pressure_forms(&spaces);
        let (l_gamma, m_gamma) = assemble_surface_laplacian(&spaces);
        let normal_load = assemble_normal_load(&spaces);
        Ok(Self {
            spaces,
            params,
            k_s,
            m_s,
            grad_s,
            fluid,
            pressure,
            l_gamma,
            m_gamma,
            normal_load,
        })
    }

    /// Builds the mesh, spaces and operators in one call.
    pub fn build(geometry: &crate::geometry::GeometryConfig, params: MaterialParams<T>) -> Result<Self> {
        let mesh = crate::geometry::build_nested_mesh(geometry)?;
        Self::new(FunctionSpaces::new(mesh), params)
    }

    pub fn fluid_area(&self) -> T {
        self.pressure.ones.iter().copied().sum()
    }

    /// `∮ (g · ν) dΓ` for `g ∈ V_γ`.
    pub fn interface_flux(&self, g: &[T]) -> T {
        dot(&self.normal_load, g)
    }

    /// Weak divergence residual `max_q |⟨q, div u⟩|` over all P1 basis functions.
    pub fn divergence_residual(&self, u: &[T]) -> T {
        norm_inf(&self.fluid.divergence.mul_vec(u))
    }

    /// Weak divergence residual against mean-zero pressures only: the
    /// component of `B u` orthogonal to `⟨q, 1⟩`.
    pub fn divergence_residual_mean_zero(&self, u: &[T]) -> T {
        let bu = self.fluid.divergence.mul_vec(u);
        let ones = &self.pressure.ones;
        let c = dot(&bu, ones) / dot(ones, ones);
        bu.iter().zip(ones).fold(T::zero(), |m, (&b, &o)| m.max((b - c * o).abs()))
    }
}

/// The discrete state `Φ = [u, h, h_t, w, w_t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    pub u: Vec<T>,
    pub h: Vec<T>,
    pub h_t: Vec<T>,
    pub w: Vec<T>,
    pub w_t: Vec<T>,
}

impl<T: Real> StateVector<T> {
    pub fn zeros(spaces: &FunctionSpaces<T>) -> Self {
        Self {
            u: vec![T::zero(); spaces.n_fluid()],
            h: vec![T::zero(); spaces.n_gamma()],
            h_t: vec![T::zero(); spaces.n_gamma()],
            w: vec![T::zero(); spaces.n_solid()],
            w_t: vec![T::zero(); spaces.n_solid()],
        }
    }

    fn parts(&self) -> [&Vec<T>; 5] {
        [&self.u, &self.h, &self.h_t, &self.w, &self.w_t]
    }

    fn parts_mut(&mut self) -> [&mut Vec<T>; 5] {
        [&mut self.u, &mut self.h, &mut self.h_t, &mut self.w, &mut self.w_t]
    }

    pub fn check_dims(&self, spaces: &FunctionSpaces<T>) -> Result<()> {
        let want = [
            spaces.n_fluid(),
            spaces.n_gamma(),
            spaces.n_gamma(),
            spaces.n_solid(),
            spaces.n_solid(),
        ];
        for (name, (v, n)) in ["u", "h", "h_t", "w", "w_t"].iter().zip(self.parts().iter().zip(want)) {
            if v.len() != n {
                return Err(FsiError::Dimension(format!("{name} has {} coefficients, expected {n}", v.len())));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    pub fn scale(&mut self, alpha: T) {
        for p in self.parts_mut() {
            for v in p.iter_mut() {
                *v *= alpha;
            }
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: T, other: &Self) {
        for (p, q) in self.parts_mut().into_iter().zip(other.parts()) {
            crate::scalar::axpy(alpha, q, p);
        }
    }

    /// `alpha * a + beta * b`
    pub fn lin_comb(alpha: T, a: &Self, beta: T, b: &Self) -> Self {
        let mut out = a.scaled(alpha);
        out.axpy(beta, b);
        out
    }

    pub fn max_abs(&self) -> T {
        self.parts().iter().fold(T::zero(), |m, p| m.max(norm_inf(p)))
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == T::zero()
    }
}

/// Names of the six terms of the energy inner product.
pub const ENERGY_TERMS: [&str; 6] = [
    "fluid",
    "thin_grad",
    "thin_kin",
    "thick_elastic",
    "thick_mass",
    "thick_kin",
];

/// Checks the trace constraint `T_s w = h`.
pub fn check_trace_constraint<T: Real>(phi: &StateVector<T>, spaces: &FunctionSpaces<T>) -> Result<()> {
    phi.check_dims(spaces)?;
    let tw = spaces.trace_of_solid(&phi.w);
    let scale = norm_inf(&phi.w).max(norm_inf(&phi.h)).max(T::min_positive_value());
    let gap = tw.iter().zip(&phi.h).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    if gap > T::lit(1e-12) * scale {
        return Err(FsiError::ConstraintViolation(format!(
            "trace constraint T_s w = h violated by {:e}",
            gap.to_f64_lossy()
        )));
    }
    Ok(())
}

/// The six terms of `⟨Φ, Ψ⟩_H` in the order of [`ENERGY_TERMS`].
pub fn h_inner_components<T: Real>(phi: &StateVector<T>, psi: &StateVector<T>, ops: &FemOperators<T>) -> [T; 6] {
    [
        ops.fluid.mass.bilinear(&phi.u, &psi.u),
        ops.l_gamma.bilinear(&phi.h, &psi.h),
        ops.m_gamma.bilinear(&phi.h_t, &psi.h_t),
        ops.k_s.bilinear(&phi.w, &psi.w),
        ops.m_s.bilinear(&phi.w, &psi.w),
        ops.m_s.bilinear(&phi.w_t, &psi.w_t),
    ]
}

/// Finite-energy inner product `⟨Φ, Ψ⟩_H`.
pub fn h_inner_product<T: Real>(phi: &StateVector<T>, psi: &StateVector<T>, ops: &FemOperators<T>) -> Result<T> {
    check_trace_constraint(phi, &ops.spaces)?;
    check_trace_constraint(psi, &ops.spaces)?;
    Ok(h_inner_components(phi, psi, ops).iter().copied().sum())
}

pub fn h_norm<T: Real>(phi: &StateVector<T>, ops: &FemOperators<T>) -> Result<T> {
    Ok(h_inner_product(phi, phi, ops)?.max(T::zero()).sqrt())
}

/// Orthogonal projection onto the discrete finite-energy space.
///
/// The fluid part solves `min ‖u − u_raw‖²_{Ω_f}` subject to `⟨q, div u⟩ = 0`
/// for all `q ∈ Q_f` and `u = 0` on the outer wall; `h` is overwritten by
/// `T_s w`; the remaining fields pass through.
pub struct HProjector<T> {
    free: Vec<usize>,
    factor: LdlFactor<T>,
}

impl<T: Real> HProjector<T> {
    pub fn new(ops: &FemOperators<T>) -> Result<Self> {
        let sp = &ops.spaces;
        let mut free = sp.fluid_dofs(FluidNodeKind::Interior);
        free.extend(sp.fluid_dofs(FluidNodeKind::Interface));
        free.sort_unstable();
        let nf = free.len();
        let nq = sp.n_pressure();
        let m_ff = ops.fluid.mass.submatrix(&free, &free);
        let all_q: Vec<usize> = (0..nq).collect();
        let b_f = ops.fluid.divergence.submatrix(&all_q, &free);
        let mut kb = TripletBuilder::new(nf + nq, nf + nq);
        kb.push_matrix(&m_ff, T::one(), 0, 0);
        kb.push_matrix(&b_f, -T::one(), nf, 0);
        kb.push_matrix(&b_f.transpose(), -T::one(), 0, nf);
        let k = kb.build();
        let fcoords = sp.dof_coords(Subdomain::Fluid);
        let mut coords: Vec<Option<[f64; 2]>> = free.iter().map(|&d| Some(fcoords[d])).collect();
        coords.extend(sp.pressure_coords().into_iter().map(Some));
        let mut blocks = vec![Block::Primal; nf];
        blocks.extend(std::iter::repeat_n(Block::Dual, nq));
        let factor = LdlFactor::new(
            &k,
            &LdlOptions {
                blocks: Some(blocks),
                coords: Some(coords),
                ..Default::default()
            },
        )?;
        Ok(Self { free, factor })
    }

    pub fn project_velocity(&self, u_raw: &[T], ops: &FemOperators<T>) -> Result<Vec<T>> {
        let mu = ops.fluid.mass.mul_vec(u_raw);
        let nf = self.free.len();
        let mut rhs = vec![T::zero(); self.factor.dim()];
        for (i, &d) in self.free.iter().enumerate() {
            rhs[i] = mu[d];
        }
        let x = self.factor.solve(&rhs)?;
        let mut u = vec![T::zero(); u_raw.len()];
        for (i, &d) in self.free.iter().enumerate() {
            u[d] = x[i];
        }
        let _ = nf;
        Ok(u)
    }

    pub fn project(&self, raw: &StateVector<T>, ops: &FemOperators<T>) -> Result<StateVector<T>> {
        raw.check_dims(&ops.spaces)?;
        Ok(StateVector {
            u: self.project_velocity(&raw.u, ops)?,
            h: ops.spaces.trace_of_solid(&raw.w),
            h_t: raw.h_t.clone(),
            w: raw.w.clone(),
            w_t: raw.w_t.clone(),
        })
    }
}

/// One-shot convenience wrapper around [`HProjector`].
pub fn project_to_h<T: Real>(raw: &StateVector<T>, ops: &FemOperators<T>) -> Result<StateVector<T>> {
    HProjector::new(ops)?.project(raw, ops)
}

/// Integrates a scalar function against the P2 interpolant of a vector field
/// over a subdomain: `∫ f(x) · u_h(x)` (degree-8 rule).
pub fn integrate_vector_field<T: Real>(
    spaces: &FunctionSpaces<T>,
    sub: Subdomain,
    coeffs: &[T],
    mut f: impl FnMut([T; 2], [T; 2], [[T; 2]; 2]) -> T,
) -> T {
    let local = match sub {
        Subdomain::Fluid => &spaces.fluid_local,
        Subdomain::Solid => &spaces.solid_local,
    };
    let rule = crate::quadrature::triangle_deg8::<T>();
    let mut acc = T::zero();
    for t in spaces.mesh.triangles_in(sub) {
        let g: TriangleGeometry<T> = spaces.mesh.triangle_geometry(t);
        let dofs = spaces.vector_dofs(t, local);
        for (r, &w) in rule.points.iter().zip(&rule.weights) {
            let phi = p2_values(*r);
            let grad = p2_gradients(&g, *r);
            let mut val = [T::zero(); 2];
            let mut gr = [[T::zero(); 2]; 2];
            for a in 0..6 {
                for c in 0..2 {
                    let coef = coeffs[dofs[2 * a + c]];
                    val[c] += coef * phi[a];
                    gr[c][0] += coef * grad[a][0];
                    gr[c][1] += coef * grad[a][1];
                }
            }
            acc += w * g.area * T::lit(2.0) * f(g.map(*r), val, gr);
        }
    }
    acc
}
