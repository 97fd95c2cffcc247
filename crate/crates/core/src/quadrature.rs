//! Gauss–Legendre rules on `[0, 1]` and collapsed (Duffy) product rules on the
//! reference triangle `{ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}`.

use crate::scalar::Real;

/// A quadrature rule: points and weights.
#[derive(Clone, Debug)]
pub struct Rule<T, P> {
    pub points: Vec<P>,
    pub weights: Vec<T>,
}

/// `n`-point Gauss–Legendre rule on `[0, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre_01<T: Real>(n: usize) -> Rule<T, T> {
    assert!(n >= 1);
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    // Newton on P_n in f64, then convert
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points.push(T::lit(0.5 * (1.0 - x)));
        weights.push(T::lit(0.5 * w));
    }
    Rule { points, weights }
}

/// Product rule on the reference triangle (area 1/2) exact for total degree
/// `2n - 2`.
pub fn triangle<T: Real>(n: usize) -> Rule<T, [T; 2]> {
    let g = gauss_legendre_01::<T>(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in g.points.iter().zip(&g.weights) {
        for (&v, &wv) in g.points.iter().zip(&g.weights) {
            points.push([u, (T::one() - u) * v]);
            weights.push(wu * wv * (T::one() - u));
        }
    }
    Rule { points, weights }
}

/// Degree-4-exact triangle rule used for all assembly.
pub fn triangle_deg4<T: Real>() -> Rule<T, [T; 2]> {
    triangle(3)
}

/// Degree-8-exact triangle rule used for error norms against smooth fields.
pub fn triangle_deg8<T: Real>() -> Rule<T, [T; 2]> {
    triangle(5)
}

/// Degree-5-exact segment rule used on interface edges.
pub fn segment_deg5<T: Real>() -> Rule<T, T> {
    gauss_legendre_01(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        let r = gauss_legendre_01::<f64>(3);
        for k in 0..=5 {
            let s: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum();
            assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn triangle_rule_exact_to_degree_four() {
        let r = triangle::<f64>(3);
        // ∫_T ξ^a η^b = a! b! / (a + b + 2)!
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let s: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((s - exact).abs() < 1e-14, "ξ^{a} η^{b}");
            }
        }
    }

    #[test]
    fn high_order_rule_exact_to_degree_eight() {
        let r = triangle_deg8::<f64>();
        for a in 0..=8u32 {
            for b in 0..=(8 - a) {
                let s: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((s - exact).abs() < 1e-14);
            }
        }
    }
}
