//! Pressure elimination: three P1 harmonic fields on the fluid with
//! Dirichlet data on the interface and Neumann data on the outer wall.
//!
//! - `P₁(u)`: Dirichlet `((∇u + ∇ᵀu)ν)·ν`, Neumann `div(∇u + ∇ᵀu)·n`
//! - `P₂(h)`: Dirichlet `(−Δh)·ν`, zero Neumann
//! - `P₃(w)`: Dirichlet `−(σ(w)ν)·ν`, zero Neumann
//!
//! Dirichlet data are evaluated element by element (fluid side for `u`,
//! solid side for `w`) and L²-projected onto the continuous P1 trace space.

use crate::element::{p1_values, p2_gradients, p2_hessians, segment_p2_values, TriangleGeometry};
use crate::error::Result;
use crate::fem::{FemOperators, MaterialParams};
use crate::geometry::BoundaryTag;
use crate::quadrature::segment_deg5;
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, LdlFactor, LdlOptions, TripletBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarmonicKind {
    P1,
    P2,
    P3,
    Custom,
}

#[derive(Clone, Debug)]
pub struct HarmonicField<T> {
    /// `Q_f` coefficients.
    pub values: Vec<T>,
    pub kind: HarmonicKind,
    /// Weak Laplacian residual at non-Dirichlet nodes, relative to the datum size.
    pub laplace_residual: T,
}

/// Weak residual of the boundary identity for the pressure on `Γs`.
#[derive(Clone, Debug)]
pub struct BoundaryIdentityReport<T> {
    /// L² norm of the projected residual function on `Γs`.
    pub residual: T,
    /// L² norm of the projected pressure trace, for scale.
    pub pressure_trace: T,
}

const REF_VERTS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Reference coordinates along the edge from global vertex `a` to `b` of triangle `t`.
fn edge_reference<T: Real>(tri: [usize; 3], a: usize, b: usize, t: T) -> [T; 2] {
    let la = tri.iter().position(|&v| v == a).expect("edge vertex in triangle");
    let lb = tri.iter().position(|&v| v == b).expect("edge vertex in triangle");
    let (ra, rb) = (REF_VERTS[la], REF_VERTS[lb]);
    let one = T::one() - t;
    [
        one * T::lit(ra[0]) + t * T::lit(rb[0]),
        one * T::lit(ra[1]) + t * T::lit(rb[1]),
    ]
}

/// Gradient `[[∂x u₀, ∂y u₀], [∂x u₁, ∂y u₁]]` of a vector P2 field on one triangle.
fn vector_gradient<T: Real>(g: &TriangleGeometry<T>, coef: &[[T; 2]; 6], r: [T; 2]) -> [[T; 2]; 2] {
    let grads = p2_gradients(g, r);
    let mut out = [[T::zero(); 2]; 2];
    for a in 0..6 {
        for c in 0..2 {
            out[c][0] += coef[a][c] * grads[a][0];
            out[c][1] += coef[a][c] * grads[a][1];
        }
    }
    out
}

/// `div(∇u + ∇ᵀu) = Δu + ∇ div u`, constant on a P2 triangle.
fn sym_grad_divergence<T: Real>(g: &TriangleGeometry<T>, coef: &[[T; 2]; 6]) -> [T; 2] {
    let h = p2_hessians(g);
    // second derivatives of each component: [xx, xy, yy]
    let mut d = [[T::zero(); 3]; 2];
    for a in 0..6 {
        for c in 0..2 {
            for k in 0..3 {
                d[c][k] += coef[a][c] * h[a][k];
            }
        }
    }
    [
        d[0][0] + d[0][2] + d[0][0] + d[1][1],
        d[1][0] + d[1][2] + d[0][1] + d[1][2],
    ]
}

fn normal_normal<T: Real>(m: [[T; 2]; 2], n: [T; 2]) -> T {
    let mut s = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            s += n[i] * m[i][j] * n[j];
        }
    }
    s
}

/// Solver for P1 harmonic fields on the fluid with Dirichlet data on the
/// interface vertices and weak Neumann data on the outer wall.
pub struct PressureEliminator<'a, T> {
    ops: &'a FemOperators<T>,
    /// `Q_f` index of the start vertex of each interface edge, chain order.
    gamma_q: Vec<usize>,
    interior: Vec<usize>,
    k_ii: LdlFactor<T>,
    k_id: CsrMatrix<T>,
    /// P1 mass on the periodic interface chain.
    gamma_mass: LdlFactor<T>,
    m_gamma_factor: LdlFactor<T>,
}

impl<'a, T: Real> PressureEliminator<'a, T> {
    pub fn new(ops: &'a FemOperators<T>) -> Result<Self> {
        let sp = &ops.spaces;
        let nq = sp.n_pressure();
        let gamma_q: Vec<usize> = sp
            .mesh
            .interface_chain
            .iter()
            .map(|ie| sp.pressure_local[ie.vertices[0]])
            .collect();
        let mut is_d = vec![false; nq];
        for &q in &gamma_q {
            is_d[q] = true;
        }
        let interior: Vec<usize> = (0..nq).filter(|&q| !is_d[q]).collect();
        let k = &ops.pressure.stiffness;
        let k_ii_m = k.submatrix(&interior, &interior);
        let k_id = k.submatrix(&interior, &gamma_q);
        let coords = sp.pressure_coords();
        let k_ii = LdlFactor::new(
            &k_ii_m,
            &LdlOptions {
                coords: Some(interior.iter().map(|&q| Some(coords[q])).collect()),
                ..Default::default()
            },
        )?;
        let n = gamma_q.len();
        let mut mb = TripletBuilder::new(n, n);
        let sixth = T::lit(1.0 / 6.0);
        for (k, ie) in sp.mesh.interface_chain.iter().enumerate() {
            let (i, j) = (k, (k + 1) % n);
            let l = ie.length;
            mb.push(i, i, T::lit(2.0) * sixth * l);
            mb.push(j, j, T::lit(2.0) * sixth * l);
            mb.push(i, j, sixth * l);
            mb.push(j, i, sixth * l);
        }
        let gamma_mass = LdlFactor::new(&mb.build(), &LdlOptions::default())?;
        let m_gamma_factor = LdlFactor::new(&ops.m_gamma, &LdlOptions::default())?;
        Ok(Self {
            ops,
            gamma_q,
            interior,
            k_ii,
            k_id,
            gamma_mass,
            m_gamma_factor,
        })
    }

    fn params(&self) -> &MaterialParams<T> {
        &self.ops.params
    }

    /// L² projection onto continuous P1 on `Γs` of an edgewise datum
    /// `d(k, t)`, `t ∈ [0, 1]` along interface edge `k`.
    pub fn project_trace(&self, mut datum: impl FnMut(usize, T) -> T) -> Result<Vec<T>> {
        let chain = &self.ops.spaces.mesh.interface_chain;
        let n = chain.len();
        let rule = segment_deg5::<T>();
        let mut b = vec![T::zero(); n];
        for (k, ie) in chain.iter().enumerate() {
            for (&t, &w) in rule.points.iter().zip(&rule.weights) {
                let d = datum(k, t) * w * ie.length;
                b[k] += d * (T::one() - t);
                b[(k + 1) % n] += d * t;
            }
        }
        self.gamma_mass.solve(&b)
    }

    /// Harmonic field with the given interface vertex values (chain order)
    /// and Neumann load vector on `Q_f`.
    pub fn solve_with_dirichlet(&self, dirichlet: &[T], neumann: &[T], kind: HarmonicKind) -> Result<HarmonicField<T>> {
        let kd = self.k_id.mul_vec(dirichlet);
        let rhs: Vec<T> = self.interior.iter().enumerate().map(|(i, &q)| neumann[q] - kd[i]).collect();
        let pi = self.k_ii.solve(&rhs)?;
        let mut values = vec![T::zero(); self.ops.spaces.n_pressure()];
        for (i, &q) in self.interior.iter().enumerate() {
            values[q] = pi[i];
        }
        for (k, &q) in self.gamma_q.iter().enumerate() {
            values[q] = dirichlet[k];
        }
        let laplace_residual = self.laplace_residual(&values, neumann, dirichlet);
        Ok(HarmonicField {
            values,
            kind,
            laplace_residual,
        })
    }

    fn laplace_residual(&self, values: &[T], neumann: &[T], dirichlet: &[T]) -> T {
        let kp = self.ops.pressure.stiffness.mul_vec(values);
        let r = self.interior.iter().fold(T::zero(), |m, &q| m.max((kp[q] - neumann[q]).abs()));
        let scale = crate::scalar::norm_inf(dirichlet) * self.ops.pressure.stiffness.norm_inf()
            + crate::scalar::norm_inf(neumann);
        if r == T::zero() {
            T::zero()
        } else {
            r / scale.max(T::min_positive_value())
        }
    }

    fn fluid_coefs(&self, u: &[T], t: usize) -> [[T; 2]; 6] {
        let sp = &self.ops.spaces;
        let mut c = [[T::zero(); 2]; 6];
        for (a, &n) in sp.p2_triangles[t].iter().enumerate() {
            let l = sp.fluid_local[n];
            c[a] = [u[2 * l], u[2 * l + 1]];
        }
        c
    }

    fn solid_coefs(&self, w: &[T], t: usize) -> [[T; 2]; 6] {
        let sp = &self.ops.spaces;
        let mut c = [[T::zero(); 2]; 6];
        for (a, &n) in sp.p2_triangles[t].iter().enumerate() {
            let l = sp.solid_local[n];
            c[a] = [w[2 * l], w[2 * l + 1]];
        }
        c
    }

    /// `((∇u + ∇ᵀu)ν)·ν` from the fluid side, projected to P1 on `Γs`.
    pub fn p1_dirichlet(&self, u: &[T]) -> Result<Vec<T>> {
        let mesh = &self.ops.spaces.mesh;
        self.project_trace(|k, t| {
            let ie = &mesh.interface_chain[k];
            let tri = mesh.triangles[ie.fluid_triangle];
            let g = mesh.triangle_geometry(ie.fluid_triangle);
            let r = edge_reference(tri, ie.vertices[0], ie.vertices[1], t);
            let gu = vector_gradient(&g, &self.fluid_coefs(u, ie.fluid_triangle), r);
            T::lit(2.0) * normal_normal(gu, ie.normal)
        })
    }

    /// Weak Neumann load `∫_{Γf} div(∇u + ∇ᵀu)·n q` on `Q_f`.
    pub fn p1_neumann(&self, u: &[T]) -> Vec<T> {
        let sp = &self.ops.spaces;
        let mesh = &sp.mesh;
        let mut load = vec![T::zero(); sp.n_pressure()];
        for be in mesh.boundary_edges.iter().filter(|b| b.tag == BoundaryTag::GammaF) {
            let t = mesh.edge_triangles[be.edge][0];
            let [a, b] = mesh.edges[be.edge];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let g = mesh.triangle_geometry(t);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let mut n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
            let c = g.centroid();
            if (c[0] - pa[0]) * n[0] + (c[1] - pa[1]) * n[1] > T::zero() {
                n = [-n[0], -n[1]];
            }
            let v = sym_grad_divergence(&g, &self.fluid_coefs(u, t));
            let flux = (v[0] * n[0] + v[1] * n[1]) * len * T::lit(0.5);
            load[sp.pressure_local[a]] += flux;
            load[sp.pressure_local[b]] += flux;
        }
        load
    }

    /// `−Δh` as a `V_γ` field: the Riesz representative `M_γ⁻¹ L_γ h`.
    pub fn minus_laplacian(&self, h: &[T]) -> Result<Vec<T>> {
        self.m_gamma_factor.solve(&self.ops.l_gamma.mul_vec(h))
    }

    pub fn p2_dirichlet(&self, h: &[T]) -> Result<Vec<T>> {
        let v = self.minus_laplacian(h)?;
        let chain = &self.ops.spaces.mesh.interface_chain;
        let npos = 2 * chain.len();
        self.project_trace(|k, t| {
            let nu = chain[k].normal;
            let phi = segment_p2_values(t);
            let pos = [2 * k, 2 * k + 1, (2 * k + 2) % npos];
            let mut s = T::zero();
            for i in 0..3 {
                s += phi[i] * (v[2 * pos[i]] * nu[0] + v[2 * pos[i] + 1] * nu[1]);
            }
            s
        })
    }

    /// `−(σ(w)ν)·ν` from the solid side.
    pub fn p3_dirichlet(&self, w: &[T]) -> Result<Vec<T>> {
        let mesh = &self.ops.spaces.mesh;
        let (mu, lam) = (self.params().mu, self.params().lambda_lame);
        self.project_trace(|k, t| {
            let ie = &mesh.interface_chain[k];
            let tri = mesh.triangles[ie.solid_triangle];
            let g = mesh.triangle_geometry(ie.solid_triangle);
            let r = edge_reference(tri, ie.vertices[0], ie.vertices[1], t);
            let gw = vector_gradient(&g, &self.solid_coefs(w, ie.solid_triangle), r);
            let div = gw[0][0] + gw[1][1];
            -(T::lit(2.0) * mu * normal_normal(gw, ie.normal) + lam * div)
        })
    }

    pub fn solve_p1(&self, u: &[T]) -> Result<HarmonicField<T>> {
        let d = self.p1_dirichlet(u)?;
        self.solve_with_dirichlet(&d, &self.p1_neumann(u), HarmonicKind::P1)
    }

    pub fn solve_p2(&self, h: &[T]) -> Result<HarmonicField<T>> {
        let d = self.p2_dirichlet(h)?;
        let zero = vec![T::zero(); self.ops.spaces.n_pressure()];
        self.solve_with_dirichlet(&d, &zero, HarmonicKind::P2)
    }

    pub fn solve_p3(&self, w: &[T]) -> Result<HarmonicField<T>> {
        let d = self.p3_dirichlet(w)?;
        let zero = vec![T::zero(); self.ops.spaces.n_pressure()];
        self.solve_with_dirichlet(&d, &zero, HarmonicKind::P3)
    }

    /// `P₁(u) + P₂(h) + P₃(w)`.
    pub fn reconstruct_pressure(&self, u: &[T], h: &[T], w: &[T]) -> Result<Vec<T>> {
        let (a, b, c) = (self.solve_p1(u)?, self.solve_p2(h)?, self.solve_p3(w)?);
        Ok((0..a.values.len()).map(|i| a.values[i] + b.values[i] + c.values[i]).collect())
    }

    /// Weak residual on `Γs` of
    /// `p + ∂p/∂ν = div(∇u+∇ᵀu)·ν + [(∇u+∇ᵀu)ν − Δh − σ(w)ν]·ν + d·ν`,
    /// where `d = u* − h₁*` is the resolvent data term (zero for the
    /// evolution equation itself).
    pub fn check_boundary_identity(
        &self,
        p: &[T],
        u: &[T],
        h: &[T],
        w: &[T],
        data: Option<(&[T], &[T])>,
    ) -> Result<BoundaryIdentityReport<T>> {
        let sp = &self.ops.spaces;
        let mesh = &sp.mesh;
        let (mu, lam) = (self.params().mu, self.params().lambda_lame);
        let lap = self.minus_laplacian(h)?;
        let npos = 2 * mesh.interface_chain.len();
        let residual_fn = |k: usize, t: T| -> T {
            let ie = &mesh.interface_chain[k];
            let nu = ie.normal;
            let tf = ie.fluid_triangle;
            let gf = mesh.triangle_geometry(tf);
            let rf = edge_reference(mesh.triangles[tf], ie.vertices[0], ie.vertices[1], t);
            let q = p1_values(rf);
            let tri = mesh.triangles[tf];
            let pv: T = (0..3).map(|i| q[i] * p[sp.pressure_local[tri[i]]]).sum();
            let gp = gf.grad_bary;
            let dpdn: T = (0..3)
                .map(|i| p[sp.pressure_local[tri[i]]] * (gp[i][0] * nu[0] + gp[i][1] * nu[1]))
                .sum();
            let uc = self.fluid_coefs(u, tf);
            let dv = sym_grad_divergence(&gf, &uc);
            let gu = vector_gradient(&gf, &uc, rf);
            let ts = ie.solid_triangle;
            let gs = mesh.triangle_geometry(ts);
            let rs = edge_reference(mesh.triangles[ts], ie.vertices[0], ie.vertices[1], t);
            let gw = vector_gradient(&gs, &self.solid_coefs(w, ts), rs);
            let sigma_nn = T::lit(2.0) * mu * normal_normal(gw, nu) + lam * (gw[0][0] + gw[1][1]);
            let phi = segment_p2_values(t);
            let pos = [2 * k, 2 * k + 1, (2 * k + 2) % npos];
            let mut minus_lap_n = T::zero();
            let mut data_n = T::zero();
            for i in 0..3 {
                minus_lap_n += phi[i] * (lap[2 * pos[i]] * nu[0] + lap[2 * pos[i] + 1] * nu[1]);
            }
            if let Some((u_star, h1_star)) = data {
                let us = self.fluid_coefs(u_star, tf);
                let vals = crate::element::p2_values(rf);
                for a in 0..6 {
                    data_n += vals[a] * (us[a][0] * nu[0] + us[a][1] * nu[1]);
                }
                for i in 0..3 {
                    data_n -= phi[i] * (h1_star[2 * pos[i]] * nu[0] + h1_star[2 * pos[i] + 1] * nu[1]);
                }
            }
            let rhs = dv[0] * nu[0] + dv[1] * nu[1] + T::lit(2.0) * normal_normal(gu, nu) + minus_lap_n - sigma_nn + data_n;
            pv + dpdn - rhs
        };
        let r = self.project_trace(residual_fn)?;
        let pt = self.project_trace(|k, t| {
            let ie = &mesh.interface_chain[k];
            let tri = mesh.triangles[ie.fluid_triangle];
            let rf = edge_reference(tri, ie.vertices[0], ie.vertices[1], t);
            let q = p1_values(rf);
            (0..3).map(|i| q[i] * p[sp.pressure_local[tri[i]]]).sum()
        })?;
        let l2 = |v: &[T]| -> T {
            let n = v.len();
            let mut s = T::zero();
            for (k, ie) in mesh.interface_chain.iter().enumerate() {
                let (a, b) = (v[k], v[(k + 1) % n]);
                s += ie.length * (a * a + a * b + b * b) / T::lit(3.0);
            }
            s.sqrt()
        };
        Ok(BoundaryIdentityReport {
            residual: l2(&r),
            pressure_trace: l2(&pt),
        })
    }

    /// `‖a − b‖ / ‖a‖` in `L²(Ω_f)` for two `Q_f` fields.
    pub fn relative_l2_distance(&self, a: &[T], b: &[T]) -> T {
        let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
        let m = &self.ops.pressure.mass;
        (m.bilinear(&d, &d) / m.bilinear(a, a).max(T::min_positive_value())).sqrt()
    }

    pub fn l2_norm(&self, p: &[T]) -> T {
        self.ops.pressure.mass.bilinear(p, p).max(T::zero()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeometryConfig, Subdomain};
    use crate::scalar::norm_inf;

    fn ops(level: u32) -> FemOperators<f64> {
        FemOperators::build(&GeometryConfig::default().with_refinement(level), MaterialParams::default()).unwrap()
    }

    #[test]
    fn zero_inputs_give_zero_fields() {
        let o = ops(0);
        let pe = PressureEliminator::new(&o).unwrap();
        let sp = &o.spaces;
        let p = pe
            .reconstruct_pressure(&vec![0.0; sp.n_fluid()], &vec![0.0; sp.n_gamma()], &vec![0.0; sp.n_solid()])
            .unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rigid_rotation_gives_zero_p1() {
        let o = ops(0);
        let pe = PressureEliminator::new(&o).unwrap();
        let u = o.spaces.interpolate_vector(Subdomain::Fluid, |p| [-p[1], p[0]]);
        let f = pe.solve_p1(&u).unwrap();
        assert!(norm_inf(&f.values) < 1e-12);
    }

    /// Applies the P1 chain mass to projected data and compares with the
    /// exact load of an edgewise-constant datum `c_k`.
    fn assert_projects_edgewise_constant(o: &FemOperators<f64>, d: &[f64], c: impl Fn([f64; 2]) -> f64) {
        let chain = &o.spaces.mesh.interface_chain;
        let n = chain.len();
        for k in 0..n {
            let (prev, cur) = (&chain[(k + n - 1) % n], &chain[k]);
            let md = prev.length * (d[(k + n - 1) % n] + 2.0 * d[k]) / 6.0 + cur.length * (2.0 * d[k] + d[(k + 1) % n]) / 6.0;
            let exact = 0.5 * (prev.length * c(prev.normal) + cur.length * c(cur.normal));
            assert!((md - exact).abs() < 1e-12, "{k}: {md} vs {exact}");
        }
    }

    #[test]
    fn hyperbolic_field_dirichlet_data() {
        // u = (x, −y): ∇u + ∇ᵀu = diag(2, −2)
        let o = ops(0);
        let pe = PressureEliminator::new(&o).unwrap();
        let u = o.spaces.interpolate_vector(Subdomain::Fluid, |p| [p[0], -p[1]]);
        let d = pe.p1_dirichlet(&u).unwrap();
        assert_projects_edgewise_constant(&o, &d, |n| if n[0].abs() > 0.5 { 2.0 } else { -2.0 });
        assert!(norm_inf(&pe.p1_neumann(&u)) < 1e-12);
    }

    #[test]
    fn stretch_gives_normal_traction_data() {
        // w = (x, 0): σ = diag(3, 1)
        let o = ops(0);
        let pe = PressureEliminator::new(&o).unwrap();
        let w = o.spaces.interpolate_vector(Subdomain::Solid, |p| [p[0], 0.0]);
        let d = pe.p3_dirichlet(&w).unwrap();
        assert_projects_edgewise_constant(&o, &d, |n| if n[0].abs() > 0.5 { -3.0 } else { -1.0 });
    }

    #[test]
    fn constant_dirichlet_gives_constant_field() {
        let o = ops(1);
        let pe = PressureEliminator::new(&o).unwrap();
        let n = o.spaces.mesh.interface_chain.len();
        let f = pe
            .solve_with_dirichlet(&vec![0.7; n], &vec![0.0; o.spaces.n_pressure()], HarmonicKind::Custom)
            .unwrap();
        assert!(f.values.iter().all(|&v| (v - 0.7).abs() < 1e-12));
        assert!(f.laplace_residual < 1e-10);
    }

    #[test]
    fn constant_h_gives_zero_p2() {
        let o = ops(0);
        let pe = PressureEliminator::new(&o).unwrap();
        let h: Vec<f64> = (0..o.spaces.n_gamma()).map(|i| if i % 2 == 0 { 1.5 } else { -0.5 }).collect();
        assert!(norm_inf(&pe.solve_p2(&h).unwrap().values) < 1e-12);
    }

    #[test]
    fn reconstruction_is_additive() {
        let o = ops(0);
        let pe = PressureEliminator::new(&o).unwrap();
        let sp = &o.spaces;
        let u: Vec<f64> = (0..sp.n_fluid()).map(|i| (0.3 * i as f64).sin()).collect();
        let h: Vec<f64> = (0..sp.n_gamma()).map(|i| (0.7 * i as f64).cos()).collect();
        let w: Vec<f64> = (0..sp.n_solid()).map(|i| (1.1 * i as f64).sin()).collect();
        let (zu, zh, zw) = (vec![0.0; u.len()], vec![0.0; h.len()], vec![0.0; w.len()]);
        let all = pe.reconstruct_pressure(&u, &h, &w).unwrap();
        let parts: Vec<f64> = (0..all.len())
            .map(|i| {
                pe.reconstruct_pressure(&u, &zh, &zw).unwrap()[i]
                    + pe.reconstruct_pressure(&zu, &h, &zw).unwrap()[i]
                    + pe.reconstruct_pressure(&zu, &zh, &w).unwrap()[i]
            })
            .collect();
        for (a, b) in all.iter().zip(&parts) {
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn boundary_identity_zero_state() {
        let o = ops(0);
        let pe = PressureEliminator::new(&o).unwrap();
        let sp = &o.spaces;
        let r = pe
            .check_boundary_identity(
                &vec![0.0; sp.n_pressure()],
                &vec![0.0; sp.n_fluid()],
                &vec![0.0; sp.n_gamma()],
                &vec![0.0; sp.n_solid()],
                None,
            )
            .unwrap();
        assert_eq!(r.residual, 0.0);
    }
}
