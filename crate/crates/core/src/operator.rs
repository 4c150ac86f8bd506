//! The empirical operator T_Z f(u) = (1/|Z|) Σ_z f(z) φ(u·z) and the ideal
//! Funk transform J_φ f(u) = E_x[φ(u·x) f(x)].

use serde::{Deserialize, Serialize};

use crate::activation::ActivationSpec;
use crate::error::{Error, Result};
use crate::rng::{par_sample_sum, par_sum};
use crate::sphere::{cosine, fill_uniform, legendre, SampleSet, ZonalSum};
use crate::spectrum::HarmonicSpectrum;

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// T_Z f(u), with `f_values[i]` = f(Z_i).
pub fn apply_tz(z: &SampleSet, act: &ActivationSpec, f_values: &[f64], u: &[f64]) -> Result<f64> {
    if f_values.len() != z.count() {
        return Err(Error::LengthMismatch { expected: z.count(), found: f_values.len() });
    }
    same_dim(z.dim(), u.len())?;
    Ok(par_sum(z.count(), |i| f_values[i] * act.eval(cosine(u, z.point(i)))) / z.count() as f64)
}

/// Either the ideal transform (via a spectrum) or the empirical T_Z.
#[derive(Debug, Clone)]
pub enum FunkOperator {
    Ideal(HarmonicSpectrum),
    Empirical { z: SampleSet, activation: ActivationSpec },
}

impl FunkOperator {
    /// (Jf)(u) or (T_Z f)(u) for a zonal sum f.
    pub fn eval(&self, f: &ZonalSum, u: &[f64]) -> Result<f64> {
        match self {
            Self::Ideal(_) => Ok(self.apply_zonal(f)?.eval(u)),
            Self::Empirical { z, activation } => {
                same_dim(z.dim(), f.dim())?;
                let vals = z.map(|x| f.eval(x));
                apply_tz(z, activation, &vals, u)
            }
        }
    }

    /// J_φ f for a zonal sum: each degree-k term is scaled by λ_{n,k}.
    pub fn apply_zonal(&self, f: &ZonalSum) -> Result<ZonalSum> {
        match self {
            Self::Ideal(spec) => {
                same_dim(spec.dim, f.dim())?;
                for k in f.degrees() {
                    spec.lambda(k)?;
                }
                Ok(f.scaled_by_degree(|k| spec.entries[k].lambda))
            }
            Self::Empirical { .. } => Err(Error::InvalidParameter {
                name: "operator",
                reason: "T_Z does not map zonal sums to zonal sums".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    /// Root-mean-square of T_Z f - J f over the probe points.
    pub l2: f64,
    /// Largest |T_Z f - J f| over the probe points.
    pub sup: f64,
}

/// Compares T_Z f with J_φ f on the probe points.
pub fn operator_deviation(
    z: &SampleSet,
    act: &ActivationSpec,
    f: &ZonalSum,
    spectrum: &HarmonicSpectrum,
    probe: &SampleSet,
) -> Result<Deviation> {
    if z.is_empty() || probe.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    same_dim(z.dim(), probe.dim())?;
    let jf = FunkOperator::Ideal(spectrum.clone()).apply_zonal(f)?;
    let fz = z.map(|x| f.eval(x));
    let m = z.count() as f64;
    let diffs = probe.map(|u| {
        let tz: f64 = z.iter().zip(&fz).map(|(x, fx)| fx * act.eval(cosine(u, x))).sum::<f64>() / m;
        tz - jf.eval(u)
    });
    let l2 = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let sup = diffs.iter().fold(0.0, |a: f64, d| a.max(d.abs()));
    Ok(Deviation { l2, sup })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunkHeckeCheck {
    pub mc_mean: f64,
    pub std_error: f64,
    pub predicted: f64,
}

impl FunkHeckeCheck {
    pub fn deviation(&self) -> f64 {
        (self.mc_mean - self.predicted).abs()
    }

    pub fn z_score(&self) -> f64 {
        self.deviation() / self.std_error
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.deviation() <= sigmas * self.std_error
    }
}

/// Monte-Carlo estimate of E_x[φ(u·x) P_{n,k}(v·x)] against λ P_{n,k}(u·v).
pub fn funk_hecke_check(
    k: usize,
    act: &ActivationSpec,
    lambda: f64,
    u: &[f64],
    v: &[f64],
    samples: usize,
    seed: u64,
) -> Result<FunkHeckeCheck> {
    same_dim(u.len(), v.len())?;
    if samples < 2 {
        return Err(Error::EmptySampleSet);
    }
    let n = u.len();
    let acc = par_sample_sum(seed, samples, 2, |rng, count, acc| {
        let mut x = vec![0.0; n];
        for _ in 0..count {
            fill_uniform(rng, &mut x);
            let y = act.eval(cosine(u, &x)) * legendre(n, k, cosine(v, &x));
            acc[0] += y;
            acc[1] += y * y;
        }
    });
    let m = samples as f64;
    let mean = acc[0] / m;
    let var = ((acc[1] - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(FunkHeckeCheck { mc_mean: mean, std_error: (var / m).sqrt(), predicted: lambda * legendre(n, k, cosine(u, v)) })
}
