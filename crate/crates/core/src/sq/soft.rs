use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::par_sample_sum;
use crate::sphere::fill_uniform;

use super::family::HardFamily;

/// The ε-soft indicator χ_y(x) = max{0, 1/ε − |x − y|/ε²}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftIndicator {
    center: f64,
    width: f64,
}

impl SoftIndicator {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(invalid("y", "center must be finite"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("epsilon", "width must be positive"));
        }
        Ok(Self { center, width })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn eval(&self, x: f64) -> f64 {
        let inv = 1.0 / self.width;
        (inv - inv * inv * (x - self.center).abs()).max(0.0)
    }

    pub fn lipschitz(&self) -> f64 {
        1.0 / (self.width * self.width)
    }

    /// Open support (y − ε, y + ε).
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthFlag {
    Ok,
    /// ε ≥ 2 sup|f|: the indicator is nearly flat over the range of f.
    Saturated,
    /// No sample landed in the support.
    NoMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    /// E[χ_y(f(x))], averaged over the two concepts.
    pub mu0: f64,
    pub mu0_std_error: f64,
    /// μ(y) = ‖f‖∞ E[χ_y∘f] for each concept of the pair; the range is reported
    /// because the definition does not say which concept to use.
    pub mu_y: (f64, f64),
    pub covariance: f64,
    pub std_error: f64,
    /// C·(ℓ(u·v)² ln n μ₀² + n^{−ℓ}/ε²).
    pub bound: f64,
    /// |cov| ≤ bound + 3 standard errors.
    pub within: bool,
    pub inner: f64,
    pub flag: WidthFlag,
    pub samples: usize,
}

/// Monte-Carlo covariance of χ_y∘f_u and χ_y∘f_v against the soft-indicator bound.
#[allow(clippy::too_many_arguments)]
pub fn covariance_check(
    family: &HardFamily,
    i: usize,
    j: usize,
    indicator: SoftIndicator,
    ell: u32,
    calibration: f64,
    samples: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    let d = family.len();
    if i >= d || j >= d {
        return Err(invalid("pair", format!("indices ({i}, {j}) outside a family of {d}")));
    }
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    if calibration.is_nan() || calibration <= 0.0 {
        return Err(invalid("calibration", "must be positive"));
    }
    let n = family.dim();
    let values = |rng: &mut rand_chacha::ChaCha8Rng, x: &mut [f64]| {
        fill_uniform(rng, x);
        (indicator.eval(family.eval(i, x)), indicator.eval(family.eval(j, x)))
    };
    // Two passes over the same stream: means first, then centered moments.
    let first = par_sample_sum(seed, samples, 2, |rng, count, acc| {
        let mut x = vec![0.0; n];
        for _ in 0..count {
            let (a, b) = values(rng, &mut x);
            acc[0] += a;
            acc[1] += b;
        }
    });
    let m = samples as f64;
    let (ma, mb) = (first[0] / m, first[1] / m);
    let second = par_sample_sum(seed, samples, 4, |rng, count, acc| {
        let mut x = vec![0.0; n];
        for _ in 0..count {
            let (a, b) = values(rng, &mut x);
            let p = (a - ma) * (b - mb);
            acc[0] += p;
            acc[1] += p * p;
            acc[2] += (a - ma) * (a - ma) + (b - mb) * (b - mb);
            acc[3] += ((a > 0.0) as u8 + (b > 0.0) as u8) as f64;
        }
    });
    let cov = second[0] / (m - 1.0);
    let var_p = ((second[1] - m * (second[0] / m).powi(2)) / (m - 1.0)).max(0.0);
    let std_error = (var_p / m).sqrt();
    let mu0 = 0.5 * (ma + mb);
    let mu0_std_error = (second[2] / (2.0 * m - 2.0)).sqrt() / (2.0 * m).sqrt();
    let sup = family.sup_norm();
    let inner = family.directions()[i].dot(&family.directions()[j])?;
    let eps = indicator.width();
    let bound = calibration
        * (f64::from(ell) * inner * inner * (n as f64).ln() * mu0 * mu0 + (n as f64).powi(-(ell as i32)) / (eps * eps));
    let flag = if eps >= 2.0 * sup {
        WidthFlag::Saturated
    } else if second[3] == 0.0 {
        WidthFlag::NoMass
    } else {
        WidthFlag::Ok
    };
    let (lo, hi) = (sup * ma.min(mb), sup * ma.max(mb));
    Ok(CovarianceReport {
        mu0,
        mu0_std_error,
        mu_y: (lo, hi),
        covariance: cov,
        std_error,
        bound,
        within: cov.abs() <= bound + 3.0 * std_error,
        inner,
        flag,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// Largest finite-difference slope of the smoothed query over the grid.
    pub estimate: f64,
    pub std_error: f64,
    /// Where the largest slope was found (midpoint of the grid interval).
    pub at: f64,
    /// 1/(2σ).
    pub bound: f64,
    /// estimate ≤ bound + 3 standard errors.
    pub within: bool,
}

/// Estimates the Lipschitz constant in y of h̃(y) = E_ζ h(y + ζ), ζ ~ N(0, σ²),
/// from finite differences on `grid` with common random numbers.
pub fn noise_smoothing_check<H>(h: H, sigma: f64, grid: &[f64], samples: usize, seed: u64) -> Result<LipschitzReport>
where
    H: Fn(f64) -> bool + Sync,
{
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", "must be positive"));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(invalid("grid", "need at least two strictly increasing points"));
    }
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let gaps = grid.len() - 1;
    let acc = par_sample_sum(seed, samples, 2 * gaps, |rng, count, acc| {
        use rand_distr::{Distribution, StandardNormal};
        for _ in 0..count {
            let z: f64 = StandardNormal.sample(rng);
            let zeta = sigma * z;
            let mut prev = h(grid[0] + zeta) as u8 as f64;
            for g in 0..gaps {
                let next = h(grid[g + 1] + zeta) as u8 as f64;
                let diff = next - prev;
                acc[2 * g] += diff;
                acc[2 * g + 1] += diff * diff;
                prev = next;
            }
        }
    });
    let m = samples as f64;
    let mut best = (0.0, 0.0, 0.5 * (grid[0] + grid[1]));
    for g in 0..gaps {
        let dy = grid[g + 1] - grid[g];
        let mean = acc[2 * g] / m;
        let var = ((acc[2 * g + 1] - m * mean * mean) / (m - 1.0)).max(0.0);
        let slope = mean.abs() / dy;
        if slope > best.0 {
            best = (slope, (var / m).sqrt() / dy, 0.5 * (grid[g] + grid[g + 1]));
        }
    }
    let bound = 1.0 / (2.0 * sigma);
    Ok(LipschitzReport {
        estimate: best.0,
        std_error: best.1,
        at: best.2,
        bound,
        within: best.0 <= bound + 3.0 * best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_indicator_shape() {
        let s = SoftIndicator::new(0.3, 0.5).unwrap();
        assert_eq!(s.eval(0.3), 2.0);
        assert_eq!(s.eval(0.8), 0.0);
        assert_eq!(s.lipschitz(), 4.0);
        assert_eq!(s.support(), (-0.2, 0.8));
        // Triangle of height 1/ε and half-width ε.
        let h = 1e-4;
        let integral: f64 = (0..20_000).map(|i| s.eval(-0.2 + (i as f64 + 0.5) * h * 0.5)).sum::<f64>() * h * 0.5;
        assert!((integral - 1.0).abs() < 1e-6);
        assert!(SoftIndicator::new(0.0, 0.0).is_err());
    }
}
