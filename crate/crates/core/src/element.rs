//! Lagrange shape functions on affine triangles and straight segments.
//!
//! Local P2 node order on a triangle `(v0, v1, v2)`: the three vertices, then
//! the midpoints of edges `(v0,v1)`, `(v1,v2)`, `(v2,v0)`.
//! Local P2 node order on a segment: start, midpoint, end.

use crate::scalar::Real;

pub type Point<T> = [T; 2];

/// Affine map of a triangle with precomputed barycentric gradients.
#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry<T> {
    pub vertices: [Point<T>; 3],
    /// Gradients of the barycentric coordinates `λ0, λ1, λ2`.
    pub grad_bary: [[T; 2]; 3],
    pub area: T,
}

impl<T: Real> TriangleGeometry<T> {
    pub fn new(vertices: [Point<T>; 3]) -> Self {
        let [a, b, c] = vertices;
        let (j00, j01) = (b[0] - a[0], c[0] - a[0]);
        let (j10, j11) = (b[1] - a[1], c[1] - a[1]);
        let det = j00 * j11 - j01 * j10;
        // rows of J^{-1} are the gradients of λ1, λ2
        let g1 = [j11 / det, -j01 / det];
        let g2 = [-j10 / det, j00 / det];
        let g0 = [-(g1[0] + g2[0]), -(g1[1] + g2[1])];
        Self {
            vertices,
            grad_bary: [g0, g1, g2],
            area: det.abs() * T::lit(0.5),
        }
    }

    /// Physical point of reference coordinates `(ξ, η)`.
    pub fn map(&self, r: [T; 2]) -> Point<T> {
        let [a, b, c] = self.vertices;
        let l0 = T::one() - r[0] - r[1];
        [
            l0 * a[0] + r[0] * b[0] + r[1] * c[0],
            l0 * a[1] + r[0] * b[1] + r[1] * c[1],
        ]
    }

    pub fn centroid(&self) -> Point<T> {
        let third = T::lit(1.0 / 3.0);
        let [a, b, c] = self.vertices;
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }
}

fn bary<T: Real>(r: [T; 2]) -> [T; 3] {
    [T::one() - r[0] - r[1], r[0], r[1]]
}

const P2_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// P1 values at reference point.
pub fn p1_values<T: Real>(r: [T; 2]) -> [T; 3] {
    bary(r)
}

/// P2 values at reference point.
pub fn p2_values<T: Real>(r: [T; 2]) -> [T; 6] {
    let l = bary(r);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut v = [T::zero(); 6];
    for i in 0..3 {
        v[i] = l[i] * (two * l[i] - T::one());
    }
    for (e, &(i, j)) in P2_EDGES.iter().enumerate() {
        v[3 + e] = four * l[i] * l[j];
    }
    v
}

/// Physical gradients of the P2 basis at a reference point.
pub fn p2_gradients<T: Real>(g: &TriangleGeometry<T>, r: [T; 2]) -> [[T; 2]; 6] {
    let l = bary(r);
    let gb = &g.grad_bary;
    let four = T::lit(4.0);
    let mut out = [[T::zero(); 2]; 6];
    for i in 0..3 {
        let f = four * l[i] - T::one();
        out[i] = [f * gb[i][0], f * gb[i][1]];
    }
    for (e, &(i, j)) in P2_EDGES.iter().enumerate() {
        out[3 + e] = [
            four * (l[i] * gb[j][0] + l[j] * gb[i][0]),
            four * (l[i] * gb[j][1] + l[j] * gb[i][1]),
        ];
    }
    out
}

/// Constant physical Hessians `[∂xx, ∂xy, ∂yy]` of the P2 basis.
pub fn p2_hessians<T: Real>(g: &TriangleGeometry<T>) -> [[T; 3]; 6] {
    let gb = &g.grad_bary;
    let four = T::lit(4.0);
    // H(λiλj) = ∇λi∇λjᵀ + ∇λj∇λiᵀ
    let h = |i: usize, j: usize| -> [T; 3] {
        [
            gb[i][0] * gb[j][0] + gb[j][0] * gb[i][0],
            gb[i][0] * gb[j][1] + gb[j][0] * gb[i][1],
            gb[i][1] * gb[j][1] + gb[j][1] * gb[i][1],
        ]
    };
    let mut out = [[T::zero(); 3]; 6];
    for i in 0..3 {
        // λi(2λi - 1): Hessian = 2 H(λiλi)
        let hi = h(i, i);
        out[i] = [hi[0] + hi[0], hi[1] + hi[1], hi[2] + hi[2]];
    }
    for (e, &(i, j)) in P2_EDGES.iter().enumerate() {
        let hij = h(i, j);
        out[3 + e] = [four * hij[0], four * hij[1], four * hij[2]];
    }
    out
}

/// Constant physical gradients of the P1 basis.
pub fn p1_gradients<T: Real>(g: &TriangleGeometry<T>) -> [[T; 2]; 3] {
    g.grad_bary
}

/// Reference coordinates of the six P2 nodes.
pub fn p2_reference_nodes<T: Real>() -> [[T; 2]; 6] {
    let h = T::lit(0.5);
    let (z, o) = (T::zero(), T::one());
    [[z, z], [o, z], [z, o], [h, z], [h, h], [z, h]]
}

/// P2 values on `[0, 1]` in the order start, midpoint, end.
pub fn segment_p2_values<T: Real>(t: T) -> [T; 3] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    [
        (T::one() - t) * (T::one() - two * t),
        four * t * (T::one() - t),
        t * (two * t - T::one()),
    ]
}

/// `d/dt` of [`segment_p2_values`].
pub fn segment_p2_derivatives<T: Real>(t: T) -> [T; 3] {
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    [four * t - three, four - T::lit(8.0) * t, four * t - T::one()]
}

/// P1 values on `[0, 1]` (start, end).
pub fn segment_p1_values<T: Real>(t: T) -> [T; 2] {
    [T::one() - t, t]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_partition_of_unity_and_nodality() {
        let nodes = p2_reference_nodes::<f64>();
        for (i, &n) in nodes.iter().enumerate() {
            let v = p2_values(n);
            for (j, &vj) in v.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((vj - e).abs() < 1e-15);
            }
        }
        let g = TriangleGeometry::new([[0.3, 0.1], [1.4, 0.2], [0.5, 1.7]]);
        let grads = p2_gradients(&g, [0.2, 0.3]);
        let sx: f64 = grads.iter().map(|d| d[0]).sum();
        let sy: f64 = grads.iter().map(|d| d[1]).sum();
        assert!(sx.abs() < 1e-13 && sy.abs() < 1e-13);
    }

    #[test]
    fn p2_reproduces_quadratic_derivatives() {
        // f = x² + 3xy - y², nodal interpolation is exact
        let g = TriangleGeometry::new([[0.3, 0.1], [1.4, 0.2], [0.5, 1.7]]);
        let f = |p: [f64; 2]| p[0] * p[0] + 3.0 * p[0] * p[1] - p[1] * p[1];
        let coef: Vec<f64> = p2_reference_nodes().iter().map(|&r| f(g.map(r))).collect();
        let r = [0.25, 0.4];
        let p = g.map(r);
        let gr = p2_gradients(&g, r);
        let gx: f64 = (0..6).map(|i| coef[i] * gr[i][0]).sum();
        let gy: f64 = (0..6).map(|i| coef[i] * gr[i][1]).sum();
        assert!((gx - (2.0 * p[0] + 3.0 * p[1])).abs() < 1e-12);
        assert!((gy - (3.0 * p[0] - 2.0 * p[1])).abs() < 1e-12);
        let h = p2_hessians(&g);
        let hxx: f64 = (0..6).map(|i| coef[i] * h[i][0]).sum();
        let hxy: f64 = (0..6).map(|i| coef[i] * h[i][1]).sum();
        let hyy: f64 = (0..6).map(|i| coef[i] * h[i][2]).sum();
        assert!((hxx - 2.0).abs() < 1e-12 && (hxy - 3.0).abs() < 1e-12 && (hyy + 2.0).abs() < 1e-12);
    }

    #[test]
    fn segment_basis_derivatives_sum_to_zero() {
        for &t in &[0.0, 0.3, 0.5, 1.0] {
            let d = segment_p2_derivatives::<f64>(t);
            assert!((d[0] + d[1] + d[2]).abs() < 1e-15);
            let v = segment_p2_values::<f64>(t);
            assert!((v[0] + v[1] + v[2] - 1.0).abs() < 1e-15);
        }
    }
}
