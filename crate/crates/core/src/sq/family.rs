use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::rng::derive_index;
use crate::sphere::{cosine, harmonic_dim_f64, legendre, sample_uniform_sphere, UnitVector, ZonalSum, MIN_DIM};

/// Concepts f_u(x) = √N(n,k) P_{n,k}(u·x) for a list of directions u.
#[derive(Debug, Clone, PartialEq)]
pub struct HardFamily {
    dim: usize,
    degree: usize,
    directions: Vec<UnitVector>,
    max_coherence: f64,
    coherence_target: f64,
    target_met: bool,
    tries: usize,
}

/// 4 √(ln d / n), the coherence a random family should stay under.
pub fn coherence_target(n: usize, d: usize) -> f64 {
    4.0 * ((d as f64).ln() / n as f64).sqrt()
}

/// Upper bound on |P_{n,k}(t)|: ((1 + (k-1)/(k+n-3))|t| + √((k-1)/(k+n-3)))^k.
pub fn correlation_bound(n: usize, k: usize, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let r = (k as f64 - 1.0) / (k as f64 + n as f64 - 3.0);
    ((1.0 + r) * t.abs() + r.sqrt()).powi(k as i32)
}

fn max_coherence(dirs: &[UnitVector]) -> f64 {
    (0..dirs.len())
        .into_par_iter()
        .map(|i| {
            dirs[i + 1..].iter().map(|v| cosine(dirs[i].coords(), v.coords()).abs()).fold(0.0, f64::max)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Draws d uniform directions, retrying with fresh seeds while the coherence
/// exceeds 4√(ln d / n); keeps the least coherent attempt.
pub fn generate_hard_family(n: usize, k: usize, d: usize, seed: u64, max_tries: usize) -> Result<HardFamily> {
    if n < MIN_DIM {
        return Err(Error::DimensionTooSmall(n));
    }
    if d < 2 {
        return Err(invalid("d", "a generated family needs at least two concepts"));
    }
    let target = coherence_target(n, d);
    let mut best: Option<(Vec<UnitVector>, f64)> = None;
    let mut tries = 0;
    for attempt in 0..max_tries.max(1) {
        tries = attempt + 1;
        let set = sample_uniform_sphere(n, d, derive_index(seed, attempt as u64))?;
        let dirs: Vec<UnitVector> = (0..d).map(|i| set.unit_vector(i)).collect();
        let c = max_coherence(&dirs);
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((dirs, c));
        }
        if c <= target {
            break;
        }
    }
    let (directions, max_coherence) = best.expect("at least one attempt");
    Ok(HardFamily {
        dim: n,
        degree: k,
        directions,
        max_coherence,
        coherence_target: target,
        target_met: max_coherence <= target,
        tries,
    })
}

impl HardFamily {
    /// A family with prescribed directions (for synthetic cases).
    pub fn from_directions(k: usize, directions: Vec<UnitVector>) -> Result<Self> {
        let first = directions.first().ok_or_else(|| invalid("directions", "family is empty"))?;
        let n = first.dim();
        if let Some(bad) = directions.iter().find(|u| u.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
        }
        let d = directions.len();
        let max_coherence = max_coherence(&directions);
        let target = if d >= 2 { coherence_target(n, d) } else { f64::INFINITY };
        Ok(Self {
            dim: n,
            degree: k,
            directions,
            max_coherence,
            coherence_target: target,
            target_met: max_coherence <= target,
            tries: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[UnitVector] {
        &self.directions
    }

    pub fn max_coherence(&self) -> f64 {
        self.max_coherence
    }

    pub fn coherence_target(&self) -> f64 {
        self.coherence_target
    }

    pub fn coherence_target_met(&self) -> bool {
        self.target_met
    }

    pub fn tries(&self) -> usize {
        self.tries
    }

    /// sup |f_u| = √N(n,k), attained at u·x = ±1.
    pub fn sup_norm(&self) -> f64 {
        harmonic_dim_f64(self.dim, self.degree).sqrt()
    }

    pub fn concept(&self, i: usize) -> ZonalSum {
        ZonalSum::single(1.0, self.degree, self.directions[i].clone())
    }

    pub fn eval(&self, i: usize, x: &[f64]) -> f64 {
        self.sup_norm() * legendre(self.dim, self.degree, cosine(self.directions[i].coords(), x))
    }

    /// ρ(f_u, f_v) = P_{n,k}(u·v).
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        legendre(self.dim, self.degree, cosine(self.directions[i].coords(), self.directions[j].coords()))
    }

    pub fn correlation_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| (0..self.len()).map(|j| self.correlation(i, j)).collect()).collect()
    }

    /// max over |t| ≤ max_coherence of |P_{n,k}(t)|, the largest possible
    /// cross-correlation between distinct members (0 for a single concept).
    pub fn max_cross_correlation(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let c = self.max_coherence;
        let grid = 4001;
        (0..grid)
            .map(|i| {
                let t = -c + 2.0 * c * i as f64 / (grid - 1) as f64;
                legendre(self.dim, self.degree, t).abs()
            })
            .fold(0.0, f64::max)
    }
}
