//! Gauss–Jacobi quadrature for ∫_{-1}^{1} f(t) (1-t)^α (1+t)^β dt.
//!
//! Nodes come from the Golub–Welsch eigenproblem, are polished by Newton steps
//! on P_N^{(α,β)}, and weights use the closed form in the polynomial
//! derivative, which keeps tiny endpoint weights relatively accurate.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    alpha: f64,
    beta: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// (P_N, P_{N-1}) of the Jacobi family at x.
fn jacobi_pair(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    if n == 0 {
        return (p0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let c1 = 2.0 * kf * (kf + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
        let p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Derivative of P_N via d/dx P_N^{(a,b)} = (N+a+b+1)/2 · P_{N-1}^{(a+1,b+1)},
/// which avoids the cancellation of the (1-x²) form near the endpoints.
fn jacobi_derivative(n: usize, a: f64, b: f64, x: f64) -> f64 {
    0.5 * (n as f64 + a + b + 1.0) * jacobi_pair(n - 1, a + 1.0, b + 1.0, x).0
}

impl GaussJacobi {
    pub fn new(count: usize, alpha: f64, beta: f64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("nodes", "need at least one node"));
        }
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(invalid("alpha", "exponents must exceed -1"));
        }
        let (a, b) = (alpha, beta);
        let mut jac = DMatrix::<f64>::zeros(count, count);
        for j in 0..count {
            let jf = j as f64;
            let s = 2.0 * jf + a + b;
            jac[(j, j)] = if j == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
            if j + 1 < count {
                let m = jf + 1.0;
                let s = 2.0 * m + a + b;
                let off = (4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
                jac[(j, j + 1)] = off;
                jac[(j + 1, j)] = off;
            }
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        let log_const = ln_gamma(count as f64 + a) + ln_gamma(count as f64 + b)
            - ln_gamma(count as f64 + 1.0)
            - ln_gamma(count as f64 + a + b + 1.0)
            + (a + b) * std::f64::consts::LN_2;
        let scale = (2.0 * count as f64 + a + b) * log_const.exp();
        let mut weights = Vec::with_capacity(count);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let pn = jacobi_pair(count, a, b, *x).0;
                let dp = jacobi_derivative(count, a, b, *x);
                let step = pn / dp;
                if !step.is_finite() {
                    break;
                }
                *x = (*x - step).clamp(-1.0 + f64::EPSILON, 1.0 - f64::EPSILON);
            }
            let pm = jacobi_pair(count, a, b, *x).1;
            let dp = jacobi_derivative(count, a, b, *x);
            weights.push(scale / (dp * pm));
        }
        // The Gamma-ratio prefactor carries ~1e-13 relative error from log-gamma
        // at large N; it is common to all weights, so fix it with the known mass.
        let total: f64 = weights.iter().sum();
        let fix = jacobi_mass(a, b) / total;
        weights.iter_mut().for_each(|w| *w *= fix);
        Ok(Self { alpha, beta, nodes, weights })
    }

    /// Symmetric weight (1-t²)^e.
    pub fn symmetric(count: usize, exponent: f64) -> Result<Self> {
        Self::new(count, exponent, exponent)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// ∫_{-1}^{1} (1-t)^α (1+t)^β dt.
pub fn jacobi_mass(alpha: f64, beta: f64) -> f64 {
    ((alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(alpha + beta + 2.0))
    .exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_two_points() {
        let q = GaussJacobi::new(2, 0.0, 0.0).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((q.nodes()[0] + r).abs() < 1e-15 && (q.nodes()[1] - r).abs() < 1e-15);
        assert!(q.weights().iter().all(|w| (w - 1.0).abs() < 1e-14));
    }

    #[test]
    fn mass_and_polynomial_exactness() {
        for &(a, b) in &[(0.0, 0.0), (0.5, 0.5), (3.5, 0.0), (0.0, 8.5), (48.5, 48.5), (1.0, 2.0)] {
            let q = GaussJacobi::new(40, a, b).unwrap();
            let mass = jacobi_mass(a, b);
            assert!((q.integrate(|_| 1.0) - mass).abs() < 1e-12 * mass, "mass {a} {b}");
            // ∫ (1+t)(1-t)^a(1+t)^b = mass(a, b+1)
            let m1 = jacobi_mass(a, b + 1.0);
            let g1 = q.integrate(|t| 1.0 + t);
            assert!((g1 - m1).abs() < 1e-12 * m1, "{a} {b}: {g1} vs {m1}");
            // degree 79 is exact for 40 nodes
            let m2 = jacobi_mass(a + 30.0, b + 49.0);
            let got = q.integrate(|t| (1.0 - t).powi(30) * (1.0 + t).powi(49));
            assert!((got - m2).abs() < 1e-11 * m2, "{a} {b}: {got} vs {m2}");
        }
    }

    #[test]
    fn large_rules_stay_accurate() {
        let q = GaussJacobi::symmetric(256, 3.5).unwrap();
        assert!(q.weights().iter().all(|w| *w > 0.0));
        let mass = jacobi_mass(3.5, 3.5);
        assert!((q.integrate(|_| 1.0) - mass).abs() < 1e-13 * mass);
        assert!(q.integrate(|t| t.powi(7)).abs() < 1e-15);
    }
}
