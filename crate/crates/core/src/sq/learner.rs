use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{chunk_rng, derive_seed, par_sample_sum};
use crate::sphere::{cosine, fill_uniform, legendre, UnitVector};

use super::family::HardFamily;
use super::oracle::{AdversaryPolicy, Concept, OracleKind, Query, Reference, SqOracle, TranscriptRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Maximum number of oracle queries.
    pub budget: usize,
    /// Seeds the secret concept, the scan order, and the oracle.
    pub seed: u64,
    pub policy: AdversaryPolicy,
    /// Adversary reference: the family average when true, g ≡ 0 otherwise.
    pub family_reference: bool,
    pub audit: bool,
    /// 1-STAT bits spent per candidate.
    pub bits_per_candidate: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            budget: usize::MAX,
            seed: 0,
            policy: AdversaryPolicy::TowardReference,
            family_reference: true,
            audit: false,
            bits_per_candidate: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerOutcome {
    /// Index of the hidden concept, when the learner drew it itself.
    pub secret: Option<usize>,
    /// First candidate whose estimated correlation crossed the threshold.
    pub identified: Option<usize>,
    /// Candidate with the largest estimated correlation among those scanned.
    pub best_guess: Option<usize>,
    pub queries_used: u64,
    pub threshold: f64,
    /// (candidate, estimated correlation) in scan order.
    pub statistics: Vec<(usize, f64)>,
    pub transcript: Vec<TranscriptRecord>,
}

impl LearnerOutcome {
    pub fn succeeded(&self) -> bool {
        self.identified.is_some()
    }

    /// Whether the identified concept is the secret one.
    pub fn correct(&self) -> Option<bool> {
        Some(self.identified? == self.secret?)
    }
}

fn agreement_query(pole: UnitVector, degree: usize) -> Query {
    Query::labeled(format!("sign-agree(k={degree})"), move |x, y| {
        let p = legendre(x.len(), degree, cosine(pole.coords(), x));
        if y * p > 0.0 {
            1.0
        } else {
            0.0
        }
    })
}

/// P[y · P(u·x) > 0] for the true direction, y = P(u·x) + ζ.
fn sign_agreement_rate(family: &HardFamily, variance: f64, seed: u64) -> Result<f64> {
    let n = family.dim();
    let k = family.degree();
    let u = family.directions()[0].clone();
    let noise = Normal::new(0.0, variance.sqrt()).map_err(|e| invalid("variance", e.to_string()))?;
    let samples = 200_000;
    let acc = par_sample_sum(seed, samples, 1, |rng, count, acc| {
        let mut x = vec![0.0; n];
        for _ in 0..count {
            fill_uniform(rng, &mut x);
            let p = legendre(n, k, cosine(u.coords(), &x));
            if (p + noise.sample(rng)) * p > 0.0 {
                acc[0] += 1.0;
            }
        }
    });
    Ok(acc[0] / samples as f64)
}

/// Scans the family in a seeded random order, estimating the correlation of
/// the oracle's concept with each candidate, and stops at the first estimate
/// above ½(1 + ρ_max), ρ_max the largest cross-correlation the family allows.
pub fn scan_learner(family: &HardFamily, oracle: &mut SqOracle, config: &LearnerConfig) -> Result<LearnerOutcome> {
    let k = family.degree();
    let big_n = family.sup_norm();
    let threshold = 0.5 * (1.0 + family.max_cross_correlation());
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.shuffle(&mut chunk_rng(derive_seed(config.seed, "scan-order"), 0));

    // For 1-STAT the sign agreement of the true candidate, to rescale estimates.
    let agreement = match oracle.kind() {
        OracleKind::OneStatGauss { variance } => {
            if config.bits_per_candidate == 0 {
                return Err(invalid("bits_per_candidate", "must be positive"));
            }
            Some(sign_agreement_rate(family, variance, derive_seed(config.seed, "agreement"))?)
        }
        _ => None,
    };

    let start = oracle.query_count();
    let used = |o: &SqOracle| (o.query_count() - start) as usize;
    let mut statistics = Vec::new();
    let mut identified = None;
    for &c in &order {
        let pole = family.directions()[c].clone();
        let rho = match (oracle.kind(), agreement) {
            (OracleKind::OneStatGauss { .. }, Some(s)) => {
                if used(oracle) + config.bits_per_candidate > config.budget {
                    break;
                }
                let q = agreement_query(pole, k);
                let mut ones = 0.0;
                for _ in 0..config.bits_per_candidate {
                    ones += oracle.answer(&q)?;
                }
                let rate = ones / config.bits_per_candidate as f64;
                (rate - 0.5) / (s - 0.5)
            }
            (kind, _) => {
                if used(oracle) >= config.budget {
                    break;
                }
                let v = oracle.answer(&Query::Correlation { pole, degree: k })?;
                match kind {
                    OracleKind::InnerProduct { .. } => 2.0 * big_n * v,
                    // Labels are divided by sup|g| = √N as well.
                    _ => 2.0 * big_n * big_n * (v - 0.5),
                }
            }
        };
        statistics.push((c, rho));
        if rho > threshold {
            identified = Some(c);
            break;
        }
    }
    let best_guess = statistics.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|s| s.0);
    Ok(LearnerOutcome {
        secret: None,
        identified,
        best_guess,
        queries_used: used(oracle) as u64,
        threshold,
        statistics,
        transcript: oracle.transcript()[start as usize..].to_vec(),
    })
}

/// Draws a secret member of the family, wraps it in an oracle of the given
/// kind, and runs the scan learner against it.
pub fn correlation_scan_learner(family: &HardFamily, kind: OracleKind, config: &LearnerConfig) -> Result<LearnerOutcome> {
    if family.is_empty() {
        return Err(invalid("family", "empty"));
    }
    let secret = chunk_rng(derive_seed(config.seed, "secret"), 0).random_range(0..family.len());
    let reference = if config.family_reference {
        Reference::Family((0..family.len()).map(|i| Concept::from_family(family, i)).collect())
    } else {
        Reference::Null
    };
    let mut oracle = SqOracle::new(kind, Concept::from_family(family, secret), family.dim(), derive_seed(config.seed, "oracle"))?
        .with_reference(reference)
        .with_policy(config.policy)
        .with_audit(config.audit);
    let mut outcome = scan_learner(family, &mut oracle, config)?;
    outcome.secret = Some(secret);
    Ok(outcome)
}
