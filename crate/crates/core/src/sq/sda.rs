use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::family::HardFamily;

/// Largest family handled by exact subset enumeration.
pub const SDA_CAP: usize = 20;

/// How the average correlation ρ(C′) treats the pairs (f, f).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdaConvention {
    /// (1/|C′|²) Σ_{f,g ∈ C′} ρ(f,g), including ρ(f,f) = 1.
    #[default]
    IncludeDiagonal,
    /// (1/|C′|²) Σ_{f ≠ g} ρ(f,g).
    OffDiagonal,
}

fn check_matrix(rho: &[Vec<f64>]) -> Result<()> {
    let d = rho.len();
    if let Some(row) = rho.iter().find(|r| r.len() != d) {
        return Err(Error::LengthMismatch { expected: d, found: row.len() });
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma", "average correlation threshold must be positive"));
    }
    Ok(())
}

/// Average correlation of a subset given its size and off-diagonal pair sum
/// (each unordered pair counted once).
fn average(size: usize, pair_sum: f64, convention: SdaConvention) -> f64 {
    let s = size as f64;
    let diag = match convention {
        SdaConvention::IncludeDiagonal => s,
        SdaConvention::OffDiagonal => 0.0,
    };
    (diag + 2.0 * pair_sum) / (s * s)
}

/// Largest d ∈ [1, D] with worst_from[⌈D/d⌉] ≤ γ̄, or 0.
fn sda_from_worst(worst_from: &[f64], gamma: f64) -> usize {
    let d_total = worst_from.len() - 1;
    (1..=d_total).rev().find(|&d| worst_from[d_total.div_ceil(d)] <= gamma).unwrap_or(0)
}

/// Suffix maximum: worst_from[s] = max over sizes ≥ s.
fn suffix_max(mut worst: Vec<f64>) -> Vec<f64> {
    for s in (1..worst.len() - 1).rev() {
        worst[s] = worst[s].max(worst[s + 1]);
    }
    worst
}

/// Exact statistical dimension from a correlation matrix, by enumerating
/// every subset. Refuses families larger than [`SDA_CAP`].
pub fn sda_from_correlations(rho: &[Vec<f64>], gamma: f64, convention: SdaConvention) -> Result<usize> {
    check_matrix(rho)?;
    check_gamma(gamma)?;
    let d = rho.len();
    if d == 0 {
        return Err(invalid("family", "empty"));
    }
    if d > SDA_CAP {
        return Err(Error::FamilyTooLarge { size: d, cap: SDA_CAP });
    }
    // pair[mask] = Σ_{i<j ∈ mask} ρ_ij, built by removing the lowest member.
    let full = 1usize << d;
    let mut pair = vec![0.0; full];
    let mut worst = vec![f64::NEG_INFINITY; d + 1];
    for mask in 1..full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut add = 0.0;
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            add += rho[i][j];
            r &= r - 1;
        }
        pair[mask] = pair[rest] + add;
        let size = mask.count_ones() as usize;
        worst[size] = worst[size].max(average(size, pair[mask], convention));
    }
    Ok(sda_from_worst(&suffix_max(worst), gamma))
}

/// Exact statistical dimension of a hard family, with ρ(f_u, f_v) = P_{n,k}(u·v).
pub fn sda_bruteforce(family: &HardFamily, gamma: f64, convention: SdaConvention) -> Result<usize> {
    if family.degree() == 0 {
        return Err(invalid("degree", "degree-0 concepts are constant, correlation is undefined"));
    }
    if family.len() > SDA_CAP {
        return Err(Error::FamilyTooLarge { size: family.len(), cap: SDA_CAP });
    }
    sda_from_correlations(&family.correlation_matrix(), gamma, convention)
}

/// Bounds on the statistical dimension for families too large to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdaBounds {
    /// Rigorous: every subset average is bounded via per-row top sums.
    pub lower: usize,
    /// Heuristic: from correlated subsets found greedily. Not a certificate
    /// unless the family is small enough to enumerate.
    pub upper: usize,
}

/// Lower and upper bounds on the statistical dimension.
///
/// The lower bound uses that a subset of size s has pair sum at most half the
/// sum of the s largest row totals, each row total being that row's s−1
/// largest off-diagonal entries. The upper bound grows subsets greedily from
/// every start and records the worst averages they reach.
pub fn sda_bounds(rho: &[Vec<f64>], gamma: f64, convention: SdaConvention) -> Result<SdaBounds> {
    check_matrix(rho)?;
    check_gamma(gamma)?;
    let d = rho.len();
    if d == 0 {
        return Err(invalid("family", "empty"));
    }
    let sorted_rows: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut r: Vec<f64> = (0..d).filter(|&j| j != i).map(|j| rho[i][j]).collect();
            r.sort_by(|a, b| b.total_cmp(a));
            r
        })
        .collect();
    let mut upper_worst = vec![f64::NEG_INFINITY; d + 1];
    for s in 1..=d {
        let mut totals: Vec<f64> = sorted_rows.iter().map(|r| r[..s - 1].iter().sum()).collect();
        totals.sort_by(|a, b| b.total_cmp(a));
        let pair_bound = 0.5 * totals[..s].iter().sum::<f64>();
        upper_worst[s] = average(s, pair_bound, convention);
    }

    let mut found_worst = vec![f64::NEG_INFINITY; d + 1];
    for start in 0..d {
        let mut in_set = vec![false; d];
        in_set[start] = true;
        let mut gain: Vec<f64> = (0..d).map(|j| rho[start][j]).collect();
        let mut pair_sum = 0.0;
        found_worst[1] = found_worst[1].max(average(1, 0.0, convention));
        for (size, worst) in found_worst.iter_mut().enumerate().skip(2) {
            let next = (0..d)
                .filter(|&j| !in_set[j])
                .max_by(|&a, &b| gain[a].total_cmp(&gain[b]))
                .expect("members remain");
            pair_sum += gain[next];
            in_set[next] = true;
            for (j, g) in gain.iter_mut().enumerate() {
                *g += rho[next][j];
            }
            *worst = worst.max(average(size, pair_sum, convention));
        }
    }
    Ok(SdaBounds {
        lower: sda_from_worst(&suffix_max(upper_worst), gamma),
        upper: sda_from_worst(&suffix_max(found_worst), gamma),
    })
}
