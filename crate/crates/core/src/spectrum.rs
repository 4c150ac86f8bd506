//! Funk–Hecke eigenvalues λ_{n,k}(φ) = c_n ∫ φ(t) P_{n,k}(t) (1-t²)^{(n-3)/2} dt.
//!
//! With c_n = Γ(n/2) / (√π Γ((n-1)/2)) the transform J_φ f(u) = E_x[φ(u·x) f(x)]
//! satisfies J_φ(P_{n,k}(v·))(u) = λ_{n,k} P_{n,k}(u·v) exactly, and λ_{n,0}(1) = 1.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::activation::ActivationSpec;
use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussJacobi;
use crate::sphere::{harmonic_dim_f64, legendre, legendre_all, MIN_DIM};

pub const DEFAULT_NODES: usize = 128;
/// |λ| at or below this counts as zero when forming the support S.
pub const ZERO_THRESHOLD: f64 = 1e-8;
/// Relative change under node doubling above which a value is flagged.
pub const CONVERGENCE_TOL: f64 = 1e-8;
/// Allowed series tail relative to the summed magnitudes.
pub const SERIES_TAIL_TOL: f64 = 1e-10;

fn check_dim(n: usize) -> Result<()> {
    if n < MIN_DIM {
        return Err(Error::DimensionTooSmall(n));
    }
    Ok(())
}

/// c_n = Γ(n/2) / (√π Γ((n-1)/2)).
pub fn normalization_constant(n: usize) -> f64 {
    let nf = n as f64;
    (ln_gamma(nf / 2.0) - 0.5 * std::f64::consts::PI.ln() - ln_gamma((nf - 1.0) / 2.0)).exp()
}

/// ln B(p, q).
fn ln_beta(p: f64, q: f64) -> f64 {
    ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
}

/// Pieces of [-1, 1] with a quadrature rule whose Jacobi weight carries the
/// endpoint singularity of (1-t²)^e on that piece.
struct Segment {
    rule: GaussJacobi,
    lo: f64,
    hi: f64,
}

/// Integrates g(t)(1-t²)^e over [-1, 1], split at interior breakpoints.
pub(crate) struct WeightedRule {
    exponent: f64,
    segments: Vec<Segment>,
}

impl WeightedRule {
    pub(crate) fn new(n: usize, nodes: usize, breakpoints: &[f64]) -> Result<Self> {
        let e = (n as f64 - 3.0) / 2.0;
        let mut cuts = vec![-1.0];
        cuts.extend(breakpoints.iter().copied().filter(|b| *b > -1.0 && *b < 1.0));
        cuts.push(1.0);
        let last = cuts.len() - 2;
        let mut segments = Vec::new();
        for (i, w) in cuts.windows(2).enumerate() {
            let (a, b) = match (i == 0, i == last) {
                (true, true) => (e, e),
                (true, false) => (0.0, e),
                (false, true) => (e, 0.0),
                (false, false) => (0.0, 0.0),
            };
            segments.push(Segment { rule: GaussJacobi::new(nodes, a, b)?, lo: w[0], hi: w[1] });
        }
        Ok(Self { exponent: e, segments })
    }

    pub(crate) fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let e = self.exponent;
        let mut total = 0.0;
        for s in &self.segments {
            let half = (s.hi - s.lo) / 2.0;
            let full = s.lo == -1.0 && s.hi == 1.0;
            // Jacobi exponents already in the rule: (1-s)^alpha (1+s)^beta with
            // 1-t = half(1-s) and 1+t = half(1+s) on the two endpoint pieces.
            let jac = half.powf(s.rule.alpha() + s.rule.beta() + 1.0);
            let sum: f64 = s
                .rule
                .nodes()
                .iter()
                .zip(s.rule.weights())
                .map(|(&x, &w)| {
                    let t = s.lo + half * (x + 1.0);
                    let rest = if full {
                        1.0
                    } else {
                        let left = if s.rule.alpha() == 0.0 { (1.0 - t).powf(e) } else { 1.0 };
                        let right = if s.rule.beta() == 0.0 { (1.0 + t).powf(e) } else { 1.0 };
                        left * right
                    };
                    w * g(t) * rest
                })
                .sum();
            total += jac * sum;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEigenvalue {
    pub value: f64,
    /// |I_{2N} - I_N|, the change under node doubling.
    pub error_estimate: f64,
    pub converged: bool,
}

fn quadrature_pair(n: usize, k: usize, act: &ActivationSpec, coarse: &WeightedRule, fine: &WeightedRule) -> QuadratureEigenvalue {
    let c = normalization_constant(n);
    let f = |t: f64| act.eval(t) * legendre(n, k, t);
    let lo = c * coarse.integrate(f);
    let hi = c * fine.integrate(f);
    let scale = c * fine.integrate(|t| f(t).abs());
    let error_estimate = (hi - lo).abs();
    let converged = error_estimate <= CONVERGENCE_TOL * hi.abs().max(scale);
    QuadratureEigenvalue { value: hi, error_estimate, converged }
}

fn check_nodes(k: usize, nodes: usize) -> Result<()> {
    if nodes < k + 8 {
        return Err(invalid("nodes", format!("need at least k + 8 = {} nodes, got {nodes}", k + 8)));
    }
    Ok(())
}

/// λ_{n,k}(φ) by Gauss–Jacobi quadrature with `nodes` and `2·nodes` points.
pub fn eigenvalue_quadrature(n: usize, k: usize, act: &ActivationSpec, nodes: usize) -> Result<QuadratureEigenvalue> {
    check_dim(n)?;
    check_nodes(k, nodes)?;
    let coarse = WeightedRule::new(n, nodes, act.breakpoints())?;
    let fine = WeightedRule::new(n, 2 * nodes, act.breakpoints())?;
    Ok(quadrature_pair(n, k, act, &coarse, &fine))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEigenvalue {
    pub value: f64,
    /// Estimated magnitude of the omitted terms beyond the truncation order.
    pub tail_bound: f64,
}

/// λ_{n,k}(φ) from the Taylor coefficients a_i of φ:
/// c_n Γ((n-1)/2) / (2^k Γ(k+(n-1)/2)) Σ_{i≥k, i≡k (2)} a_i i!/(i-k)! B((i-k+1)/2, (n-3)/2+k+1).
///
/// The falling factorial i!/(i-k)! comes from differentiating t^i k times
/// when integrating the Rodrigues form by parts.
pub fn eigenvalue_beta_series(n: usize, k: usize, act: &ActivationSpec, truncation: usize) -> Result<SeriesEigenvalue> {
    check_dim(n)?;
    let series = act.taylor().ok_or_else(|| Error::MissingTaylor(act.label().to_string()))?;
    if truncation < k {
        return Err(invalid("truncation", format!("truncation {truncation} is below the degree {k}")));
    }
    if truncation > series.order() {
        return Err(invalid("truncation", format!("only {} Taylor coefficients are available", series.order() + 1)));
    }
    let nf = n as f64;
    let kf = k as f64;
    let ln_pre = ln_gamma(nf / 2.0) - 0.5 * std::f64::consts::PI.ln()
        - kf * std::f64::consts::LN_2
        - ln_gamma(kf + (nf - 1.0) / 2.0);
    let q = (nf - 3.0) / 2.0 + kf + 1.0;
    let ln_b = |i: usize| {
        ln_gamma(i as f64 + 1.0) - ln_gamma((i - k) as f64 + 1.0) + ln_beta((i - k) as f64 / 2.0 + 0.5, q)
    };

    let mut sum = 0.0;
    let mut magnitude = 0.0;
    let mut last = k;
    for i in (k..=truncation).step_by(2) {
        let term = series.coeffs[i] * (ln_pre + ln_b(i)).exp();
        sum += term;
        magnitude += term.abs();
        last = i;
    }

    // Geometric tail: |a_i| ≤ A R^{-i} with A fitted on the upper half of the
    // retained coefficients, summed against the exact factors of the omitted terms.
    let r = series.radius;
    let amp = (k..=last)
        .step_by(2)
        .filter(|&i| 2 * i >= last)
        .map(|i| series.coeffs[i].abs() * r.powi(i as i32))
        .fold(0.0, f64::max);
    let tail_bound = if amp == 0.0 {
        0.0
    } else {
        (1..=400)
            .map(|j| {
                let i = last + 2 * j;
                (amp.ln() + ln_pre + ln_b(i) - i as f64 * r.ln()).exp()
            })
            .sum()
    };
    let allowed = SERIES_TAIL_TOL * magnitude;
    if tail_bound > allowed {
        return Err(Error::TailBoundExceeded { tail: tail_bound, allowed });
    }
    Ok(SeriesEigenvalue { value: sum, tail_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Quadrature,
    BetaSeries,
}

impl SpectrumMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Quadrature => "quadrature",
            Self::BetaSeries => "beta_series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub k: usize,
    pub lambda: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct HarmonicSpectrum {
    pub dim: usize,
    pub activation: ActivationSpec,
    pub method: SpectrumMethod,
    pub normalization_constant: f64,
    pub entries: Vec<SpectrumEntry>,
}

impl HarmonicSpectrum {
    pub fn k_max(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn lambda(&self, k: usize) -> Result<f64> {
        self.entries
            .get(k)
            .map(|e| e.lambda)
            .ok_or(Error::DegreeOutOfRange { degree: k, max: self.k_max() })
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    /// Degrees with |λ_{n,k}| above the zero threshold.
    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().filter(|e| e.lambda.abs() > ZERO_THRESHOLD).map(|e| e.k).collect()
    }

    /// min over S of |λ_{n,k}|.
    pub fn alpha(&self) -> f64 {
        self.support().iter().map(|&k| self.entries[k].lambda.abs()).fold(f64::INFINITY, f64::min)
    }

    /// min over S of ‖(φ(u·))^{(k)}‖₂ = √N(n,k)·|λ_{n,k}|.
    pub fn alpha_norm(&self) -> f64 {
        self.support()
            .iter()
            .map(|&k| harmonic_dim_f64(self.dim, k).sqrt() * self.entries[k].lambda.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.converged)
    }
}

/// Series truncation used by `build_spectrum` for the Beta-series method.
pub const DEFAULT_TRUNCATION: usize = 61;

pub fn build_spectrum(n: usize, act: &ActivationSpec, k_max: usize, method: SpectrumMethod) -> Result<HarmonicSpectrum> {
    build_spectrum_with(n, act, k_max, method, DEFAULT_NODES.max(k_max + 8))
}

pub fn build_spectrum_with(
    n: usize,
    act: &ActivationSpec,
    k_max: usize,
    method: SpectrumMethod,
    nodes: usize,
) -> Result<HarmonicSpectrum> {
    check_dim(n)?;
    let entries = match method {
        SpectrumMethod::Quadrature => {
            check_nodes(k_max, nodes)?;
            let coarse = WeightedRule::new(n, nodes, act.breakpoints())?;
            let fine = WeightedRule::new(n, 2 * nodes, act.breakpoints())?;
            (0..=k_max)
                .map(|k| {
                    let q = quadrature_pair(n, k, act, &coarse, &fine);
                    SpectrumEntry { k, lambda: q.value, error_estimate: q.error_estimate, converged: q.converged }
                })
                .collect()
        }
        SpectrumMethod::BetaSeries => {
            let order = act.taylor().map_or(0, |s| s.order()).min(DEFAULT_TRUNCATION);
            (0..=k_max)
                .map(|k| {
                    let s = eigenvalue_beta_series(n, k, act, order.max(k))?;
                    Ok(SpectrumEntry { k, lambda: s.value, error_estimate: s.tail_bound, converged: true })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(HarmonicSpectrum { dim: n, activation: act.clone(), method, normalization_constant: normalization_constant(n), entries })
}

/// c_n ∫ g(t) (1-t²)^{(n-3)/2} dt for a smooth g, i.e. E_x[g(u·x)].
pub fn sphere_average_of_profile(n: usize, nodes: usize, g: impl Fn(f64) -> f64) -> Result<f64> {
    check_dim(n)?;
    Ok(normalization_constant(n) * WeightedRule::new(n, nodes, &[])?.integrate(g))
}

/// Fills `out[k]` with P_{n,k}(t) for every k < out.len(); re-exported helper.
pub fn legendre_table(n: usize, t: f64, out: &mut [f64]) {
    legendre_all(n, t, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::TaylorSeries;

    fn one() -> ActivationSpec {
        ActivationSpec::custom("one", |_| 1.0, 1.0, vec![]).unwrap()
    }

    #[test]
    fn constant_has_unit_zeroth_eigenvalue() {
        for n in [3, 4, 5, 10, 37, 100] {
            let q = eigenvalue_quadrature(n, 0, &one(), 16).unwrap();
            assert!((q.value - 1.0).abs() < 1e-12, "n = {n}: {}", q.value);
            assert!(q.converged);
            let s = eigenvalue_beta_series(n, 0, &one().with_taylor(TaylorSeries { coeffs: vec![1.0], radius: f64::INFINITY }), 0).unwrap();
            assert!((s.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_activation_gives_one_over_n() {
        let lin = ActivationSpec::custom("t", |t| t, 1.0, vec![])
            .unwrap()
            .with_taylor(TaylorSeries { coeffs: vec![0.0, 1.0], radius: f64::INFINITY });
        for n in [3, 8, 21] {
            let q = eigenvalue_quadrature(n, 1, &lin, 16).unwrap().value;
            let s = eigenvalue_beta_series(n, 1, &lin, 1).unwrap().value;
            assert!((q - 1.0 / n as f64).abs() < 1e-13);
            assert!((s - 1.0 / n as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn legendre_activation_gives_inverse_dimension() {
        let n = 10;
        for k in 0..=6 {
            let act = ActivationSpec::custom("p", move |t| legendre(n, k, t), 1.0, vec![]).unwrap();
            let got = eigenvalue_quadrature(n, k, &act, 32).unwrap().value;
            let want = 1.0 / harmonic_dim_f64(n, k);
            assert!((got - want).abs() < 1e-7 * want.max(1e-300), "k = {k}: {got} vs {want}");
        }
    }

    #[test]
    fn weighted_orthogonality() {
        for n in [3, 5, 10, 30] {
            let rule = WeightedRule::new(n, 64, &[]).unwrap();
            for j in 0..6 {
                for k in 0..6 {
                    if j != k {
                        let v = rule.integrate(|t| legendre(n, j, t) * legendre(n, k, t));
                        assert!(v.abs() < 1e-9, "n={n} j={j} k={k}: {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn node_precondition() {
        assert!(eigenvalue_quadrature(10, 5, &ActivationSpec::sigmoid(), 12).is_err());
        assert!(eigenvalue_quadrature(2, 0, &ActivationSpec::sigmoid(), 12).is_err());
    }

    #[test]
    fn parity_zeros() {
        let s = build_spectrum(10, &ActivationSpec::sigmoid(), 6, SpectrumMethod::Quadrature).unwrap();
        for k in [2, 4, 6] {
            assert!(s.entries[k].lambda.abs() <= 1e-8);
        }
        assert_eq!(s.support(), vec![0, 1, 3, 5]);
        let l = s.lambdas();
        assert!(l[1].abs() > l[3].abs() && l[3].abs() > l[5].abs());

        let r = build_spectrum(10, &ActivationSpec::relu(), 6, SpectrumMethod::Quadrature).unwrap();
        assert_eq!(r.support(), vec![0, 1, 2, 4, 6]);
        assert!(r.all_converged());
        assert!((r.entries[1].lambda - 0.05).abs() < 1e-12);
    }

    #[test]
    fn softplus_odd_degrees_above_one_vanish() {
        let s = eigenvalue_beta_series(10, 5, &ActivationSpec::softplus(), 61).unwrap();
        assert_eq!(s.value, 0.0);
        let s1 = eigenvalue_beta_series(10, 1, &ActivationSpec::softplus(), 61).unwrap();
        assert!(s1.value > 0.0);
    }

    #[test]
    fn sigmoid_methods_agree() {
        let q = eigenvalue_quadrature(10, 1, &ActivationSpec::sigmoid(), 128).unwrap().value;
        let b = eigenvalue_beta_series(10, 1, &ActivationSpec::sigmoid(), 41).unwrap().value;
        assert!((q - b).abs() <= 1e-6 * q.abs(), "{q} vs {b}");
    }

    #[test]
    fn short_truncation_fails_tail_check() {
        let err = eigenvalue_beta_series(10, 1, &ActivationSpec::sigmoid(), 5).unwrap_err();
        assert!(matches!(err, Error::TailBoundExceeded { .. }));
        assert!(matches!(eigenvalue_beta_series(10, 1, &ActivationSpec::relu(), 5), Err(Error::MissingTaylor(_))));
    }

    #[test]
    fn empty_series_is_zero() {
        let even = ActivationSpec::custom("even", |t| t * t, 1.0, vec![])
            .unwrap()
            .with_taylor(TaylorSeries { coeffs: vec![0.0, 0.0, 1.0], radius: f64::INFINITY });
        assert_eq!(eigenvalue_beta_series(7, 3, &even, 2).map(|s| s.value).unwrap_or(0.0), 0.0);
        assert_eq!(eigenvalue_beta_series(7, 1, &even, 2).unwrap().value, 0.0);
    }
}
