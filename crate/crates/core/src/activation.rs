//! Activation functions with optional Taylor expansions at 0.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Order up to which built-in Taylor coefficients are generated.
pub const TAYLOR_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Sigmoid,
    Softplus,
    Relu,
    Step,
    Custom,
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Sigmoid => "sigmoid",
            Self::Softplus => "softplus",
            Self::Relu => "relu",
            Self::Step => "step",
            Self::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Power series Σ a_i t^i with a known radius of convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    pub coeffs: Vec<f64>,
    pub radius: f64,
}

impl TaylorSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * t + a)
    }
}

/// Taylor coefficients of the logistic sigmoid up to `order`, from the
/// Riccati equation s' = s - s².
pub fn sigmoid_taylor(order: usize) -> TaylorSeries {
    let mut s = vec![0.0; order + 1];
    s[0] = 0.5;
    for m in 0..order {
        let conv: f64 = (0..=m).map(|i| s[i] * s[m - i]).sum();
        let next = (s[m] - conv) / (m as f64 + 1.0);
        // Even coefficients beyond the constant vanish; keep them exactly zero.
        s[m + 1] = if (m + 1) % 2 == 0 { 0.0 } else { next };
    }
    TaylorSeries { coeffs: s, radius: std::f64::consts::PI }
}

/// Taylor coefficients of softplus, by integrating the sigmoid series.
pub fn softplus_taylor(order: usize) -> TaylorSeries {
    let sig = sigmoid_taylor(order.saturating_sub(1));
    let mut c = vec![std::f64::consts::LN_2];
    c.extend(sig.coeffs.iter().enumerate().map(|(i, s)| s / (i as f64 + 1.0)));
    c.truncate(order + 1);
    TaylorSeries { coeffs: c, radius: std::f64::consts::PI }
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

#[inline]
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A named activation φ with a sup-norm bound on [-1, 1].
#[derive(Clone)]
pub struct ActivationSpec {
    kind: ActivationKind,
    label: String,
    custom: Option<Eval>,
    sup_norm_bound: f64,
    taylor: Option<TaylorSeries>,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActivationSpec")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("sup_norm_bound", &self.sup_norm_bound)
            .field("taylor_order", &self.taylor.as_ref().map(TaylorSeries::order))
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl ActivationSpec {
    fn builtin(kind: ActivationKind, sup: f64, taylor: Option<TaylorSeries>, breakpoints: Vec<f64>) -> Self {
        Self { kind, label: kind.to_string(), custom: None, sup_norm_bound: sup, taylor, breakpoints }
    }

    pub fn sigmoid() -> Self {
        Self::builtin(ActivationKind::Sigmoid, sigmoid(1.0), Some(sigmoid_taylor(TAYLOR_ORDER)), vec![])
    }

    pub fn softplus() -> Self {
        Self::builtin(ActivationKind::Softplus, softplus(1.0), Some(softplus_taylor(TAYLOR_ORDER)), vec![])
    }

    pub fn relu() -> Self {
        Self::builtin(ActivationKind::Relu, 1.0, None, vec![0.0])
    }

    /// Heaviside step 1{t > 0}; its Funk transform is the hemispherical transform.
    pub fn step() -> Self {
        Self::builtin(ActivationKind::Step, 1.0, None, vec![0.0])
    }

    pub fn by_kind(kind: ActivationKind) -> Result<Self> {
        match kind {
            ActivationKind::Sigmoid => Ok(Self::sigmoid()),
            ActivationKind::Softplus => Ok(Self::softplus()),
            ActivationKind::Relu => Ok(Self::relu()),
            ActivationKind::Step => Ok(Self::step()),
            ActivationKind::Custom => Err(invalid("activation", "custom activations need an evaluator")),
        }
    }

    /// A user-supplied activation. `breakpoints` lists interior points in
    /// (-1, 1) where φ is not smooth; quadrature splits there.
    pub fn custom<F>(label: impl Into<String>, f: F, sup_norm_bound: f64, breakpoints: Vec<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(sup_norm_bound.is_finite() && sup_norm_bound >= 0.0) {
            return Err(invalid("sup_norm_bound", "must be finite and non-negative"));
        }
        let mut breakpoints = breakpoints;
        if breakpoints.iter().any(|b| !(*b > -1.0 && *b < 1.0)) {
            return Err(invalid("breakpoints", "must lie strictly inside (-1, 1)"));
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Ok(Self {
            kind: ActivationKind::Custom,
            label: label.into(),
            custom: Some(Arc::new(f)),
            sup_norm_bound,
            taylor: None,
            breakpoints,
        })
    }

    /// t ↦ sigmoid(b·t), the profile of a teacher unit with weight norm b.
    pub fn scaled_sigmoid(b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("b", "scale must be positive"));
        }
        let mut spec = Self::custom(format!("sigmoid({b}t)"), move |t| sigmoid(b * t), sigmoid(b), vec![])?;
        let base = sigmoid_taylor(TAYLOR_ORDER);
        let coeffs = base.coeffs.iter().enumerate().map(|(i, a)| a * b.powi(i as i32)).collect();
        spec.taylor = Some(TaylorSeries { coeffs, radius: base.radius / b });
        Ok(spec)
    }

    pub fn with_taylor(mut self, taylor: TaylorSeries) -> Self {
        self.taylor = Some(taylor);
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            ActivationKind::Sigmoid => sigmoid(t),
            ActivationKind::Softplus => softplus(t),
            ActivationKind::Relu => t.max(0.0),
            ActivationKind::Step => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Custom => (self.custom.as_ref().expect("custom evaluator"))(t),
        }
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sup_norm_bound(&self) -> f64 {
        self.sup_norm_bound
    }

    pub fn taylor(&self) -> Option<&TaylorSeries> {
        self.taylor.as_ref()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Checks the sup-norm bound, and Taylor convergence within `taylor_tol`,
    /// on a uniform grid of [-1, 1].
    pub fn validate(&self, grid: usize, taylor_tol: f64) -> Result<()> {
        let grid = grid.max(2);
        for i in 0..grid {
            let t = -1.0 + 2.0 * i as f64 / (grid - 1) as f64;
            let v = self.eval(t);
            if v.is_nan() || v.abs() > self.sup_norm_bound * (1.0 + 1e-12) {
                return Err(invalid("sup_norm_bound", format!("|φ({t})| = {} exceeds {}", v.abs(), self.sup_norm_bound)));
            }
            if let Some(series) = &self.taylor {
                let err = (series.eval(t) - v).abs();
                if err > taylor_tol {
                    return Err(invalid("taylor", format!("partial sum off by {err:.3e} at t = {t}")));
                }
            }
        }
        Ok(())
    }
}
