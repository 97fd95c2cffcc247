//! Nested square-in-square geometry: a fluid frame `Ω_f` around an immersed
//! solid block `Ω_s`, triangulated conformingly across the interface `Γ_s`.

use std::collections::HashMap;

use crate::error::{FsiError, Result};
use crate::scalar::Real;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    fn contains_point(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryConfig {
    pub outer_box: Rect,
    pub inner_box: Rect,
    pub refinement_level: u32,
    pub base_h: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            outer_box: Rect::new(0.0, 3.0, 0.0, 3.0),
            inner_box: Rect::new(1.0, 2.0, 1.0, 2.0),
            refinement_level: 0,
            base_h: 0.5,
        }
    }
}

impl GeometryConfig {
    pub fn with_refinement(&self, level: u32) -> Self {
        Self {
            refinement_level: level,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (o, i) = (&self.outer_box, &self.inner_box);
        for r in [o, i] {
            if !(r.width() > 0.0 && r.height() > 0.0) || ![r.x0, r.x1, r.y0, r.y1].iter().all(|v| v.is_finite()) {
                return Err(FsiError::Geometry(format!("degenerate rectangle {r:?}")));
            }
        }
        if !(i.x0 > o.x0 && i.x1 < o.x1 && i.y0 > o.y0 && i.y1 < o.y1) {
            return Err(FsiError::Geometry(format!(
                "inner box {i:?} is not strictly contained in outer box {o:?}"
            )));
        }
        if !(self.base_h > 0.0 && self.base_h.is_finite()) {
            return Err(FsiError::Geometry(format!("base_h must be positive, got {}", self.base_h)));
        }
        let gaps = [i.x0 - o.x0, o.x1 - i.x1, i.y0 - o.y0, o.y1 - i.y1, i.width(), i.height()];
        let smallest = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        if self.base_h > smallest * (1.0 + 1e-12) {
            return Err(FsiError::Resolution(format!(
                "base_h = {} exceeds the smallest feature {} of the geometry",
                self.base_h, smallest
            )));
        }
        Ok(())
    }

    /// Nominal mesh width at this refinement level.
    pub fn h(&self) -> f64 {
        self.base_h / f64::from(1u32 << self.refinement_level)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Fluid,
    Solid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    /// Outer wall of the fluid container.
    GammaF,
    /// Fluid–solid interface.
    GammaS,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub tag: BoundaryTag,
}

/// One edge of the closed interface polygon, oriented so the solid lies on the left.
#[derive(Clone, Copy, Debug)]
pub struct InterfaceEdge<T> {
    pub edge: usize,
    /// Start and end vertex along the chain.
    pub vertices: [usize; 2],
    pub fluid_triangle: usize,
    pub solid_triangle: usize,
    /// Unit normal pointing from the fluid into the solid.
    pub normal: [T; 2],
    pub length: T,
    /// Arclength coordinate of the start vertex.
    pub s_start: T,
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    pub config: GeometryConfig,
    pub vertices: Vec<[T; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub subdomain: Vec<Subdomain>,
    /// Unique undirected edges `(a, b)` with `a < b`.
    pub edges: Vec<[usize; 2]>,
    /// Edge index of local edges `(v0,v1)`, `(v1,v2)`, `(v2,v0)` per triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Triangles adjacent to each edge (one for boundary edges).
    pub edge_triangles: Vec<Vec<usize>>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// The closed interface cycle in counter-clockwise order around the solid.
    pub interface_chain: Vec<InterfaceEdge<T>>,
}

fn breakpoints(a: f64, b: f64, c: f64, d: f64, base_h: f64, level: u32) -> Vec<f64> {
    let mut out = vec![a];
    for (lo, hi) in [(a, b), (b, c), (c, d)] {
        let n = (((hi - lo) / base_h) - 1e-9).ceil().max(1.0) as usize * (1usize << level);
        for k in 1..=n {
            out.push(if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 });
        }
    }
    out
}

/// Generates the nested triangulation.
pub fn build_nested_mesh<T: Real>(config: &GeometryConfig) -> Result<Mesh<T>> {
    config.validate()?;
    let (o, inner) = (&config.outer_box, &config.inner_box);
    let lvl = config.refinement_level;
    let xs = breakpoints(o.x0, inner.x0, inner.x1, o.x1, config.base_h, lvl);
    let ys = breakpoints(o.y0, inner.y0, inner.y1, o.y1, config.base_h, lvl);
    let (nx, ny) = (xs.len(), ys.len());
    let vid = |i: usize, j: usize| j * nx + i;

    let mut vertices = Vec::with_capacity(nx * ny);
    for &y in &ys {
        for &x in &xs {
            vertices.push([T::lit(x), T::lit(y)]);
        }
    }

    let (xc, yc) = (0.5 * (o.x0 + o.x1), 0.5 * (o.y0 + o.y1));
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    let mut subdomain = Vec::with_capacity(triangles.capacity());
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (ll, lr, ul, ur) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            let (cx, cy) = (0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            let tag = if inner.contains_point(cx, cy) {
                Subdomain::Solid
            } else {
                Subdomain::Fluid
            };
            // diagonals point away from the box centre so no triangle has all
            // three vertices on a corner of the outer wall
            if (cx - xc) * (cy - yc) > 0.0 {
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            } else {
                triangles.push([ll, lr, ul]);
                triangles.push([lr, ur, ul]);
            }
            subdomain.push(tag);
            subdomain.push(tag);
        }
    }

    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    let mut edge_triangles: Vec<Vec<usize>> = Vec::new();
    for (t, tri) in triangles.iter().enumerate() {
        let mut te = [0usize; 3];
        for (k, &(a, b)) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])].iter().enumerate() {
            let key = (a.min(b), a.max(b));
            let e = *edge_map.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edge_triangles.push(Vec::new());
                edges.len() - 1
            });
            edge_triangles[e].push(t);
            te[k] = e;
        }
        triangle_edges.push(te);
    }

    let mut boundary_edges = Vec::new();
    let mut interface_raw = Vec::new();
    for (e, tris) in edge_triangles.iter().enumerate() {
        match tris.as_slice() {
            [_] => boundary_edges.push(BoundaryEdge {
                edge: e,
                tag: BoundaryTag::GammaF,
            }),
            [a, b] if subdomain[*a] != subdomain[*b] => {
                boundary_edges.push(BoundaryEdge {
                    edge: e,
                    tag: BoundaryTag::GammaS,
                });
                let (f, s) = if subdomain[*a] == Subdomain::Fluid { (*a, *b) } else { (*b, *a) };
                interface_raw.push((e, f, s));
            }
            _ => {}
        }
    }

    let start = vid(
        xs.iter().position(|&x| x == inner.x0).unwrap(),
        ys.iter().position(|&y| y == inner.y0).unwrap(),
    );
    let interface_chain = order_interface(&vertices, &edges, &triangles, &interface_raw, start)?;

    let mesh = Mesh {
        config: config.clone(),
        vertices,
        triangles,
        subdomain,
        edges,
        triangle_edges,
        edge_triangles,
        boundary_edges,
        interface_chain,
    };
    mesh.check_invariants()?;
    Ok(mesh)
}

fn order_interface<T: Real>(
    vertices: &[[T; 2]],
    edges: &[[usize; 2]],
    triangles: &[[usize; 3]],
    raw: &[(usize, usize, usize)],
    start: usize,
) -> Result<Vec<InterfaceEdge<T>>> {
    if raw.is_empty() {
        return Err(FsiError::Topology("no interface edges".into()));
    }
    // orient each edge so the solid triangle lies to its left
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut oriented = Vec::with_capacity(raw.len());
    for (k, &(e, _, s)) in raw.iter().enumerate() {
        let [a, b] = edges[e];
        let c = *triangles[s].iter().find(|&&v| v != a && v != b).unwrap();
        let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
        let cross = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
        let (from, to) = if cross > T::zero() { (a, b) } else { (b, a) };
        oriented.push((from, to));
        outgoing.entry(from).or_default().push(k);
    }
    if outgoing.values().any(|v| v.len() != 1) {
        return Err(FsiError::Topology("interface vertex with more than one outgoing edge".into()));
    }
    let mut chain = Vec::with_capacity(raw.len());
    let mut used = vec![false; raw.len()];
    let mut v = start;
    let mut s = T::zero();
    loop {
        let k = match outgoing.get(&v) {
            Some(ks) => ks[0],
            None => return Err(FsiError::Topology(format!("interface chain broken at vertex {v}"))),
        };
        if used[k] {
            break;
        }
        used[k] = true;
        let (e, f, sol) = raw[k];
        let (a, b) = oriented[k];
        let (pa, pb) = (vertices[a], vertices[b]);
        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = (dx * dx + dy * dy).sqrt();
        chain.push(InterfaceEdge {
            edge: e,
            vertices: [a, b],
            fluid_triangle: f,
            solid_triangle: sol,
            normal: [-dy / len, dx / len],
            length: len,
            s_start: s,
        });
        s += len;
        v = b;
    }
    if v != start || chain.len() != raw.len() {
        return Err(FsiError::Topology(format!(
            "interface is not a single closed cycle ({} of {} edges reached)",
            chain.len(),
            raw.len()
        )));
    }
    Ok(chain)
}

/// Cyclic arclength parametrization of the interface.
#[derive(Clone, Debug)]
pub struct InterfaceChart<T> {
    pub perimeter: T,
    /// Chain vertices in order with their arclength `s ∈ [0, P)`.
    pub vertices: Vec<(usize, T)>,
    /// Arclength coordinates of the polygon corners.
    pub corners: Vec<T>,
}

impl<T: Real> InterfaceChart<T> {
    /// Wraps an arclength value into `[0, P)`.
    pub fn wrap(&self, s: T) -> T {
        let r = s % self.perimeter;
        if r < T::zero() {
            r + self.perimeter
        } else {
            r
        }
    }
}

pub fn interface_chart<T: Real>(mesh: &Mesh<T>) -> Result<InterfaceChart<T>> {
    let chain = &mesh.interface_chain;
    if chain.is_empty() || chain.last().unwrap().vertices[1] != chain[0].vertices[0] {
        return Err(FsiError::Topology("interface chain is not cyclic".into()));
    }
    for w in chain.windows(2) {
        if w[0].vertices[1] != w[1].vertices[0] {
            return Err(FsiError::Topology("interface chain is not contiguous".into()));
        }
    }
    let perimeter = chain.iter().map(|e| e.length).sum();
    let vertices = chain.iter().map(|e| (e.vertices[0], e.s_start)).collect();
    let tol = T::lit(1e-12);
    let corners = (0..chain.len())
        .filter(|&k| {
            let prev = &chain[(k + chain.len() - 1) % chain.len()];
            let cur = &chain[k];
            (prev.normal[0] - cur.normal[0]).abs() > tol || (prev.normal[1] - cur.normal[1]).abs() > tol
        })
        .map(|k| chain[k].s_start)
        .collect();
    Ok(InterfaceChart {
        perimeter,
        vertices,
        corners,
    })
}

impl<T: Real> Mesh<T> {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_geometry(&self, t: usize) -> crate::element::TriangleGeometry<T> {
        let [a, b, c] = self.triangles[t];
        crate::element::TriangleGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn triangles_in(&self, sub: Subdomain) -> impl Iterator<Item = usize> + '_ {
        (0..self.triangles.len()).filter(move |&t| self.subdomain[t] == sub)
    }

    pub fn subdomain_area(&self, sub: Subdomain) -> T {
        self.triangles_in(sub).map(|t| self.triangle_geometry(t).area).sum()
    }

    pub fn interface_perimeter(&self) -> T {
        self.interface_chain.iter().map(|e| e.length).sum()
    }

    /// `∮ ν dΓ`, exactly zero for a closed polygon.
    pub fn normal_integral(&self) -> [T; 2] {
        let mut acc = [T::zero(); 2];
        for e in &self.interface_chain {
            acc[0] += e.normal[0] * e.length;
            acc[1] += e.normal[1] * e.length;
        }
        acc
    }

    pub fn interface_vertices(&self) -> Vec<usize> {
        self.interface_chain.iter().map(|e| e.vertices[0]).collect()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let eps = T::lit(1e-12);
        for ie in &self.interface_chain {
            let tris = &self.edge_triangles[ie.edge];
            let ok = tris.len() == 2
                && tris.iter().filter(|&&t| self.subdomain[t] == Subdomain::Fluid).count() == 1
                && tris.iter().filter(|&&t| self.subdomain[t] == Subdomain::Solid).count() == 1;
            if !ok {
                return Err(FsiError::Topology(format!("interface edge {} is not conforming", ie.edge)));
            }
            let n = ie.normal;
            if ((n[0] * n[0] + n[1] * n[1]).sqrt() - T::one()).abs() > eps {
                return Err(FsiError::Geometry("non-unit interface normal".into()));
            }
            let c = self.triangle_geometry(ie.solid_triangle).centroid();
            let [a, b] = ie.vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let mid = [(pa[0] + pb[0]) * T::lit(0.5), (pa[1] + pb[1]) * T::lit(0.5)];
            if n[0] * (c[0] - mid[0]) + n[1] * (c[1] - mid[1]) <= T::zero() {
                return Err(FsiError::Geometry("interface normal does not point into the solid".into()));
            }
        }
        let mut closure = [T::zero(); 2];
        for ie in &self.interface_chain {
            let [a, b] = ie.vertices;
            closure[0] += self.vertices[b][0] - self.vertices[a][0];
            closure[1] += self.vertices[b][1] - self.vertices[a][1];
        }
        if closure[0].abs() > eps || closure[1].abs() > eps {
            return Err(FsiError::Topology("interface edge vectors do not sum to zero".into()));
        }
        let nu = self.normal_integral();
        if nu[0].abs() > eps || nu[1].abs() > eps {
            return Err(FsiError::Geometry("∮ν dΓ does not vanish".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_mesh(level: u32) -> Mesh<f64> {
        build_nested_mesh(&GeometryConfig::default().with_refinement(level)).unwrap()
    }

    #[test]
    fn golden_counts_level_zero() {
        // frozen from the generator: 7 x 7 grid points, 6 x 6 cells
        let m = default_mesh(0);
        assert_eq!(m.num_vertices(), 49);
        assert_eq!(m.num_triangles(), 72);
        assert_eq!(m.triangles_in(Subdomain::Solid).count(), 8);
        assert_eq!(m.interface_chain.len(), 8);
        assert_eq!(m.edges.len(), 120);
    }

    #[test]
    fn perimeter_and_closure() {
        for lvl in 0..3 {
            let m = default_mesh(lvl);
            assert_eq!(m.interface_perimeter(), 4.0);
            let nu = m.normal_integral();
            assert_eq!(nu, [0.0, 0.0]);
            assert!((m.subdomain_area(Subdomain::Fluid) - 8.0).abs() < 1e-13);
        }
    }

    #[test]
    fn corners_at_integer_arclength() {
        for lvl in 0..3 {
            let chart = interface_chart(&default_mesh(lvl)).unwrap();
            assert_eq!(chart.perimeter, 4.0);
            assert_eq!(chart.corners, vec![0.0, 1.0, 2.0, 3.0]);
            assert_eq!(chart.wrap(4.0), 0.0);
            assert_eq!(chart.wrap(-0.5), 3.5);
        }
    }

    #[test]
    fn refinement_nests_vertices() {
        let (a, b) = (default_mesh(0), default_mesh(1));
        for v in &a.vertices {
            assert!(b.vertices.iter().any(|w| w == v));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = GeometryConfig::default();
        c.inner_box = Rect::new(0.0, 2.0, 1.0, 2.0);
        assert!(matches!(build_nested_mesh::<f64>(&c), Err(FsiError::Geometry(_))));
        let mut c = GeometryConfig::default();
        c.base_h = 2.0;
        assert!(matches!(build_nested_mesh::<f64>(&c), Err(FsiError::Resolution(_))));
        let mut c = GeometryConfig::default();
        c.base_h = -1.0;
        assert!(build_nested_mesh::<f64>(&c).is_err());
    }

    #[test]
    fn normals_point_into_solid_on_bottom_side() {
        let m = default_mesh(0);
        let first = &m.interface_chain[0];
        assert_eq!(m.vertices[first.vertices[0]], [1.0, 1.0]);
        assert_eq!(first.normal, [0.0, 1.0]);
    }

    #[test]
    fn single_precision_mesh_builds() {
        let m: Mesh<f32> = build_nested_mesh(&GeometryConfig::default()).unwrap();
        assert_eq!(m.interface_perimeter(), 4.0f32);
    }
}
