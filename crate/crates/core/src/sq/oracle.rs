use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{chunk_rng, derive_index, derive_seed, par_sample_sum};
use crate::sphere::{cosine, fill_uniform, harmonic_dim_f64, legendre, UnitVector, ZonalSum};

use super::family::HardFamily;

/// Largest Monte-Carlo budget spent on one expectation.
const MAX_MC_SAMPLES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind {
    /// Answers within max{1/t, √(p(1-p)/t)} of p = E[h(x, g(x)/‖g‖∞)].
    Vstat { t: f64 },
    /// Returns h(x, g(x)/‖g‖∞ + ζ) for fresh x and ζ ~ N(0, variance).
    OneStatGauss { variance: f64 },
    /// Answers within `tolerance` of E[g(x) h(x)].
    InnerProduct { tolerance: f64 },
}

impl OracleKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Vstat { .. } => "vstat",
            Self::OneStatGauss { .. } => "one_stat_gauss",
            Self::InnerProduct { .. } => "inner_product",
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Vstat { t } => t.is_finite() && t >= 1.0,
            Self::OneStatGauss { variance } => variance.is_finite() && variance >= 0.0,
            Self::InnerProduct { tolerance } => tolerance.is_finite() && tolerance > 0.0,
        };
        if !ok {
            return Err(invalid("oracle", format!("invalid parameters for {}", self.name())));
        }
        Ok(())
    }

    /// Samples a simulation of nominal precision would use, times 100.
    fn mc_samples(&self) -> usize {
        let nominal = match *self {
            Self::Vstat { t } => t,
            Self::InnerProduct { tolerance } => 1.0 / (tolerance * tolerance),
            Self::OneStatGauss { .. } => 1.0,
        };
        ((100.0 * nominal).ceil() as usize).clamp(10_000, MAX_MC_SAMPLES)
    }
}

/// VSTAT(t) tolerance at true value p.
pub fn vstat_tolerance(p: f64, t: f64) -> f64 {
    (1.0 / t).max(((p * (1.0 - p)).max(0.0) / t).sqrt())
}

type Fx = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Fxy = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// The hidden function g, with the sup norm used for label normalization.
#[derive(Clone)]
pub struct Concept {
    label: String,
    zonal: Option<ZonalSum>,
    f: Fx,
    sup_norm: f64,
}

impl fmt::Debug for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Concept").field("label", &self.label).field("sup_norm", &self.sup_norm).finish()
    }
}

impl Concept {
    /// Member i of a hard family; its sup norm √N(n,k) is exact.
    pub fn from_family(family: &HardFamily, i: usize) -> Self {
        let z = family.concept(i);
        let zc = z.clone();
        Self { label: format!("family[{i}]"), zonal: Some(z), f: Arc::new(move |x| zc.eval(x)), sup_norm: family.sup_norm() }
    }

    pub fn zonal(z: ZonalSum, sup_norm: f64) -> Result<Self> {
        if !(sup_norm > 0.0 && sup_norm.is_finite()) {
            return Err(invalid("sup_norm", "must be positive"));
        }
        let zc = z.clone();
        Ok(Self { label: "zonal".into(), zonal: Some(z), f: Arc::new(move |x| zc.eval(x)), sup_norm })
    }

    pub fn custom<F>(label: impl Into<String>, f: F, sup_norm: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(sup_norm > 0.0 && sup_norm.is_finite()) {
            return Err(invalid("sup_norm", "must be positive"));
        }
        Ok(Self { label: label.into(), zonal: None, f: Arc::new(f), sup_norm })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// E[g · f_v^{(k)}] and E[g] from the zonal expansion, when known.
    fn moments(&self, pole: &UnitVector, degree: usize) -> Option<(f64, f64)> {
        let z = self.zonal.as_ref()?;
        let corr = z
            .terms()
            .iter()
            .filter(|t| t.degree == degree)
            .map(|t| t.coef * legendre(z.dim(), degree, cosine(t.pole.coords(), pole.coords())))
            .sum();
        let mean = z.terms().iter().filter(|t| t.degree == 0).map(|t| t.coef).sum();
        Some((corr, mean))
    }
}

/// A statistical query.
#[derive(Clone)]
pub enum Query {
    /// h(x), label-free.
    Plain { label: String, h: Fx },
    /// h(x, y) with y the (normalized, possibly noisy) label.
    Labeled { label: String, h: Fxy },
    /// Correlation probe against f_v^{(k)}: for VSTAT h(x,y) = (1 + y f_v(x)/√N)/2,
    /// for inner products h(x) = (1 + f_v(x)/√N)/2.
    Correlation { pole: UnitVector, degree: usize },
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Query {
    pub fn plain<F>(label: impl Into<String>, h: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::Plain { label: label.into(), h: Arc::new(h) }
    }

    pub fn labeled<F>(label: impl Into<String>, h: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self::Labeled { label: label.into(), h: Arc::new(h) }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Plain { label, .. } | Self::Labeled { label, .. } => label.clone(),
            Self::Correlation { pole, degree } => {
                let head: Vec<String> = pole.coords().iter().take(3).map(|c| format!("{c:.4}")).collect();
                format!("corr(k={degree}, v=[{}, ...])", head.join(", "))
            }
        }
    }

    /// Evaluates the query at (x, y) in the semantics of `kind`.
    fn eval(&self, kind: &OracleKind, x: &[f64], y: f64) -> f64 {
        match self {
            Self::Plain { h, .. } => h(x),
            Self::Labeled { h, .. } => h(x, y),
            Self::Correlation { pole, degree } => {
                let p = legendre(x.len(), *degree, cosine(pole.coords(), x));
                match kind {
                    OracleKind::InnerProduct { .. } => 0.5 * (1.0 + p),
                    _ => 0.5 * (1.0 + y * p),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryPolicy {
    /// Answer as close to the reference value as the tolerance allows.
    TowardReference,
    /// Answer at the tolerance boundary on a seeded random side.
    RandomBoundary,
}

/// What "uninformative" means for the adversary.
#[derive(Debug, Clone)]
pub enum Reference {
    /// The same query against g ≡ 0.
    Null,
    /// The average answer over a family of concepts.
    Family(Vec<Concept>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub query_id: u64,
    pub kind: String,
    pub query: String,
    /// True expectation when known exactly or audited.
    pub true_p: Option<f64>,
    pub true_p_std_error: Option<f64>,
    pub response: f64,
    pub tolerance: Option<f64>,
    pub within_tolerance: Option<bool>,
    pub query_count: u64,
}

#[derive(Debug, Clone)]
pub struct SqOracle {
    kind: OracleKind,
    concept: Concept,
    dim: usize,
    reference: Reference,
    policy: AdversaryPolicy,
    seed: u64,
    adversary: ChaCha8Rng,
    audit: bool,
    query_count: u64,
    transcript: Vec<TranscriptRecord>,
}

/// (p, standard error, exact?)
type Estimate = (f64, f64, bool);

impl SqOracle {
    pub fn new(kind: OracleKind, concept: Concept, dim: usize, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(Self {
            kind,
            concept,
            dim,
            reference: Reference::Null,
            policy: AdversaryPolicy::TowardReference,
            seed,
            adversary: chunk_rng(derive_seed(seed, "adversary"), 0),
            audit: false,
            query_count: 0,
            transcript: Vec::new(),
        })
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = reference;
        self
    }

    pub fn with_policy(mut self, policy: AdversaryPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Re-estimates every Monte-Carlo expectation with an independent sample
    /// and records whether the response met its tolerance.
    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.transcript
    }

    pub fn concept(&self) -> &Concept {
        &self.concept
    }

    fn check_query(&self, q: &Query) -> Result<()> {
        match (self.kind, q) {
            (OracleKind::InnerProduct { .. }, Query::Labeled { .. }) => {
                Err(Error::InvalidQuery("inner-product queries are functions of x alone".into()))
            }
            (OracleKind::OneStatGauss { .. }, Query::Correlation { .. }) => {
                Err(Error::InvalidQuery("1-STAT queries must be {0,1}-valued".into()))
            }
            (_, Query::Correlation { pole, .. }) if pole.dim() != self.dim => {
                Err(Error::DimensionMismatch { expected: self.dim, found: pole.dim() })
            }
            _ => Ok(()),
        }
    }

    /// Expectation of the query under concept `c` (None = g ≡ 0).
    fn expectation(&self, q: &Query, c: Option<&Concept>, seed: u64) -> Result<Estimate> {
        let kind = self.kind;
        if let Query::Correlation { pole, degree } = q {
            let big_n = harmonic_dim_f64(self.dim, *degree).sqrt();
            let moments = match c {
                None => Some((0.0, 0.0)),
                Some(c) => c.moments(pole, *degree).map(|(corr, mean)| (corr / c.sup_norm, mean)),
            };
            if let Some((corr, mean)) = moments {
                let p = match kind {
                    OracleKind::InnerProduct { .. } => {
                        let raw_corr = c.map_or(0.0, |c| corr * c.sup_norm);
                        0.5 * mean + raw_corr / (2.0 * big_n)
                    }
                    _ => 0.5 + corr / (2.0 * big_n),
                };
                return Ok((p, 0.0, true));
            }
        }
        let n = self.dim;
        let samples = kind.mc_samples();
        let acc = par_sample_sum(seed, samples, 3, |rng, count, acc| {
            let mut x = vec![0.0; n];
            for _ in 0..count {
                fill_uniform(rng, &mut x);
                let g = c.map_or(0.0, |c| c.eval(&x));
                let (v, out_of_range) = match kind {
                    OracleKind::InnerProduct { .. } => {
                        let h = q.eval(&kind, &x, 0.0);
                        (g * h, !(0.0..=1.0).contains(&h))
                    }
                    _ => {
                        let y = c.map_or(0.0, |c| g / c.sup_norm);
                        let h = q.eval(&kind, &x, y);
                        (h, !(0.0..=1.0).contains(&h))
                    }
                };
                acc[0] += v;
                acc[1] += v * v;
                if out_of_range {
                    acc[2] += 1.0;
                }
            }
        });
        if acc[2] > 0.0 {
            return Err(Error::InvalidQuery(format!("query left [0, 1] on {} samples", acc[2])));
        }
        let m = samples as f64;
        let mean = acc[0] / m;
        let var = ((acc[1] - m * mean * mean) / (m - 1.0)).max(0.0);
        Ok((mean, (var / m).sqrt(), false))
    }

    fn tolerance(&self, p: f64) -> f64 {
        match self.kind {
            OracleKind::Vstat { t } => vstat_tolerance(p.clamp(0.0, 1.0), t),
            OracleKind::InnerProduct { tolerance } => tolerance,
            OracleKind::OneStatGauss { .. } => 0.0,
        }
    }

    fn reference_value(&self, q: &Query, seed: u64) -> Result<f64> {
        match &self.reference {
            Reference::Null => Ok(self.expectation(q, None, seed)?.0),
            Reference::Family(members) => {
                if members.is_empty() {
                    return Err(invalid("reference", "family reference is empty"));
                }
                let mut total = 0.0;
                for c in members {
                    total += self.expectation(q, Some(c), seed)?.0;
                }
                Ok(total / members.len() as f64)
            }
        }
    }

    fn one_stat(&mut self, q: &Query, variance: f64) -> Result<f64> {
        let mut rng = chunk_rng(derive_seed(self.seed, "one-stat"), self.query_count);
        let mut x = vec![0.0; self.dim];
        fill_uniform(&mut rng, &mut x);
        let zeta = if variance > 0.0 {
            Normal::new(0.0, variance.sqrt()).map_err(|e| invalid("variance", e.to_string()))?.sample(&mut rng)
        } else {
            0.0
        };
        let y = self.concept.eval(&x) / self.concept.sup_norm + zeta;
        let bit = q.eval(&self.kind, &x, y);
        if bit != 0.0 && bit != 1.0 {
            return Err(Error::InvalidQuery(format!("1-STAT query returned {bit}, not a bit")));
        }
        Ok(bit)
    }

    pub fn answer(&mut self, q: &Query) -> Result<f64> {
        self.check_query(q)?;
        let id = self.query_count;
        if let OracleKind::OneStatGauss { variance } = self.kind {
            let bit = self.one_stat(q, variance)?;
            self.query_count += 1;
            self.transcript.push(TranscriptRecord {
                query_id: id,
                kind: self.kind.name().into(),
                query: q.label(),
                true_p: None,
                true_p_std_error: None,
                response: bit,
                tolerance: None,
                within_tolerance: None,
                query_count: self.query_count,
            });
            return Ok(bit);
        }
        let seed = derive_index(derive_seed(self.seed, "expectation"), id);
        let (p, se, exact) = self.expectation(q, Some(&self.concept.clone()), seed)?;
        let reference = self.reference_value(q, seed)?;
        // Keep the answer strictly inside the band so that it holds for the true p.
        let half = self.tolerance(p) * (1.0 - 1e-9) - 3.0 * se;
        let mut v = if half <= 0.0 {
            p
        } else {
            match self.policy {
                AdversaryPolicy::TowardReference => reference.clamp(p - half, p + half),
                AdversaryPolicy::RandomBoundary => {
                    if self.adversary.random::<bool>() {
                        p + half
                    } else {
                        p - half
                    }
                }
            }
        };
        if let OracleKind::Vstat { .. } = self.kind {
            v = v.clamp(0.0, 1.0);
        }
        self.query_count += 1;

        let audited = if exact {
            Some((p, 0.0))
        } else if self.audit {
            let audit_seed = derive_index(derive_seed(self.seed, "audit"), id);
            let (pa, sa, _) = self.expectation(q, Some(&self.concept.clone()), audit_seed)?;
            Some((pa, sa))
        } else {
            None
        };
        let (true_p, true_se, within, tol) = match audited {
            Some((pa, sa)) => {
                let tol = self.tolerance(pa);
                (Some(pa), Some(sa), Some((pa - v).abs() <= tol + 3.0 * sa), Some(tol))
            }
            None => (None, None, None, Some(self.tolerance(p))),
        };
        self.transcript.push(TranscriptRecord {
            query_id: id,
            kind: self.kind.name().into(),
            query: q.label(),
            true_p,
            true_p_std_error: true_se,
            response: v,
            tolerance: tol,
            within_tolerance: within,
            query_count: self.query_count,
        });
        Ok(v)
    }
}

/// Answers one query and bumps the oracle's counter.
pub fn answer_query(oracle: &mut SqOracle, q: &Query) -> Result<f64> {
    oracle.answer(q)
}
