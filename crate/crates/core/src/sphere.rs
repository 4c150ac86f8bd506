//! Points, sampling, Legendre polynomials and zonal harmonics on S^{n-1}.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{chunk_rng, par_sum_vec, CHUNK};

pub const MIN_DIM: usize = 3;

fn check_dim(n: usize) -> Result<()> {
    if n < MIN_DIM {
        return Err(Error::DimensionTooSmall(n));
    }
    Ok(())
}

/// Euclidean inner product of two equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s[0] += a[i] * b[i];
        s[1] += a[i + 1] * b[i + 1];
        s[2] += a[i + 2] * b[i + 2];
        s[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

/// Inner product of two unit vectors, clamped against rounding past ±1.
#[inline]
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Accepts coordinates that already have unit norm (within 1e-12).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        let norm = dot(&coords, &coords).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(invalid("coords", format!("norm {norm} is not 1")));
        }
        Ok(Self { coords })
    }

    /// Rescales arbitrary nonzero coordinates onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        let norm = dot(&coords, &coords).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::DegenerateVector);
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { coords })
    }

    /// The i-th standard basis vector of R^n.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        check_dim(n)?;
        if i >= n {
            return Err(invalid("i", format!("basis index {i} >= dimension {n}")));
        }
        let mut coords = vec![0.0; n];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    /// A uniformly random direction.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_dim(n)?;
        let mut coords = vec![0.0; n];
        fill_uniform(rng, &mut coords);
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dot(&self, other: &UnitVector) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        Ok(cosine(&self.coords, &other.coords))
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitVector::normalized(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Vec<f64> {
        u.coords
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Overwrites `out` with a uniform point on the sphere of dimension `out.len()`.
pub fn fill_uniform<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let norm = dot(out, out).sqrt();
        if norm > 1e-150 {
            out.iter_mut().for_each(|c| *c /= norm);
            return;
        }
    }
}

/// A set of points on S^{n-1}, stored as one flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    seed: Option<u64>,
    coords: Vec<f64>,
}

impl SampleSet {
    pub fn from_points(dim: usize, points: &[UnitVector]) -> Result<Self> {
        check_dim(dim)?;
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            same_dim(dim, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        Ok(Self { dim, seed: None, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Seed the set was drawn from, if it was sampled.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn unit_vector(&self, i: usize) -> UnitVector {
        UnitVector { coords: self.point(i).to_vec() }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Evaluates `f` at every point, in parallel.
    pub fn map<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.coords.par_chunks_exact(self.dim).map(&f).collect()
    }
}

/// Draws `m` independent uniform points on S^{n-1}.
pub fn sample_uniform_sphere(n: usize, m: usize, seed: u64) -> Result<SampleSet> {
    check_dim(n)?;
    if m == 0 {
        return Err(invalid("m", "sample count must be at least 1"));
    }
    let mut coords = vec![0.0; n * m];
    coords.par_chunks_mut(CHUNK * n).enumerate().for_each(|(c, block)| {
        let mut rng = chunk_rng(seed, c as u64);
        for p in block.chunks_exact_mut(n) {
            fill_uniform(&mut rng, p);
        }
    });
    Ok(SampleSet { dim: n, seed: Some(seed), coords })
}

/// P_{n,k}(t) by the upward recurrence. No range checks.
#[inline]
pub fn legendre(n: usize, k: usize, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let (mut prev, mut cur) = (1.0, t);
    for l in 1..k {
        let lf = l as f64;
        let next = ((2.0 * lf + nf - 2.0) * t * cur - lf * prev) / (lf + nf - 2.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Writes P_{n,0}(t) .. P_{n,out.len()-1}(t) into `out`.
#[inline]
pub fn legendre_all(n: usize, t: f64, out: &mut [f64]) {
    let nf = n as f64;
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for l in 1..out.len().saturating_sub(1) {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + nf - 2.0) * t * out[l] - lf * out[l - 1]) / (lf + nf - 2.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegendreEvaluator {
    dim: usize,
    max_degree: usize,
}

impl LegendreEvaluator {
    pub fn new(dim: usize, max_degree: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, max_degree })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn check_degree(&self, k: usize) -> Result<()> {
        if k > self.max_degree {
            return Err(Error::DegreeOutOfRange { degree: k, max: self.max_degree });
        }
        Ok(())
    }

    pub fn eval(&self, k: usize, t: f64) -> Result<f64> {
        self.check_degree(k)?;
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::ArgumentOutOfRange(t));
        }
        Ok(legendre(self.dim, k, t))
    }
}

/// Convenience wrapper for `LegendreEvaluator::eval`.
pub fn legendre_eval(ev: &LegendreEvaluator, k: usize, t: f64) -> Result<f64> {
    ev.eval(k, t)
}

fn binomial(a: u64, b: u64) -> Option<u128> {
    if b > a {
        return Some(0);
    }
    let b = b.min(a - b);
    let mut r: u128 = 1;
    for i in 0..b {
        r = r.checked_mul(u128::from(a - i))? / u128::from(i + 1);
    }
    Some(r)
}

/// Dimension N(n,k) of the degree-k spherical harmonics on S^{n-1}.
pub fn harmonic_dim(n: usize, k: usize) -> Result<u128> {
    check_dim(n)?;
    let (n, k) = (n as u64, k as u64);
    let first = binomial(n + k - 1, k);
    let second = if k < 2 { Some(0) } else { binomial(n + k - 3, k - 2) };
    match (first, second) {
        (Some(a), Some(b)) => Ok(a - b),
        _ => Err(invalid("k", "harmonic dimension overflows 128 bits")),
    }
}

/// N(n,k) as a float via the subtraction-free form (2k+n-2)/k · C(k+n-3, k-1).
pub fn harmonic_dim_f64(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (nf, kf) = (n as f64, k as f64);
    let mut c = 1.0;
    for i in 0..(k - 1) {
        c *= (nf - 2.0 + i as f64 + 1.0) / (i as f64 + 1.0);
    }
    (2.0 * kf + nf - 2.0) / kf * c
}

/// f_u^{(k)}(x) = √N(n,k) · P_{n,k}(u·x), the unit-norm zonal harmonic.
pub fn zonal_eval(ev: &LegendreEvaluator, k: usize, u: &[f64], x: &[f64]) -> Result<f64> {
    ev.check_degree(k)?;
    same_dim(ev.dim(), u.len())?;
    same_dim(ev.dim(), x.len())?;
    Ok(harmonic_dim_f64(ev.dim(), k).sqrt() * legendre(ev.dim(), k, cosine(u, x)))
}

/// One term `coef · √N(n,k) · P_{n,k}(pole · x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalTerm {
    pub coef: f64,
    pub degree: usize,
    pub pole: UnitVector,
}

/// A finite sum of unit-norm zonal harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalSum {
    dim: usize,
    terms: Vec<ZonalTerm>,
}

impl ZonalSum {
    pub fn new(dim: usize, terms: Vec<ZonalTerm>) -> Result<Self> {
        check_dim(dim)?;
        for t in &terms {
            same_dim(dim, t.pole.dim())?;
        }
        Ok(Self { dim, terms })
    }

    pub fn single(coef: f64, degree: usize, pole: UnitVector) -> Self {
        Self { dim: pole.dim(), terms: vec![ZonalTerm { coef, degree, pole }] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[ZonalTerm] {
        &self.terms
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.iter().map(|t| t.degree).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * harmonic_dim_f64(self.dim, t.degree).sqrt()
                    * legendre(self.dim, t.degree, cosine(t.pole.coords(), x))
            })
            .sum()
    }

    /// The degree-k component, exactly.
    pub fn component(&self, k: usize) -> ZonalSum {
        let terms = self.terms.iter().filter(|t| t.degree == k).cloned().collect();
        ZonalSum { dim: self.dim, terms }
    }

    /// Multiplies the degree-k coefficients by `scale(k)`.
    pub fn scaled_by_degree(&self, scale: impl Fn(usize) -> f64) -> ZonalSum {
        let terms = self
            .terms
            .iter()
            .map(|t| ZonalTerm { coef: t.coef * scale(t.degree), ..t.clone() })
            .collect();
        ZonalSum { dim: self.dim, terms }
    }

    /// Exact ‖f^{(k)}‖₂², from E[f_u^{(k)} f_v^{(k)}] = P_{n,k}(u·v).
    pub fn energy(&self, k: usize) -> f64 {
        let c = self.component(k);
        let mut e = 0.0;
        for a in &c.terms {
            for b in &c.terms {
                e += a.coef * b.coef * legendre(self.dim, k, cosine(a.pole.coords(), b.pole.coords()));
            }
        }
        e
    }

    /// Exact ‖f‖₂².
    pub fn norm_sq(&self) -> f64 {
        self.degrees().into_iter().map(|k| self.energy(k)).sum()
    }

    /// Upper bound on sup|f| from the triangle inequality.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.abs() * harmonic_dim_f64(self.dim, t.degree).sqrt()).sum()
    }
}

/// Monte-Carlo projection onto the degree-k harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProjection {
    /// Estimates of f^{(k)} at each probe point.
    pub values: Vec<f64>,
    /// Estimate of ‖f^{(k)}‖₂².
    pub energy: f64,
    pub std_error: f64,
}

/// Estimates f^{(k)}(x) = N·E_y[P(x·y) f(y)] at the probe points (y over
/// `quad`) and ‖f^{(k)}‖² = N·E_{x,y}[P(x·y) f(x) f(y)] with x over `probe`.
pub fn project_degree<F>(f: F, k: usize, probe: &SampleSet, quad: &SampleSet) -> Result<DegreeProjection>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if probe.is_empty() || quad.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    same_dim(probe.dim(), quad.dim())?;
    let n = probe.dim();
    let big_n = harmonic_dim_f64(n, k);
    let fp = probe.map(&f);
    let fq = quad.map(&f);
    let (p, q) = (probe.count(), quad.count());

    // Per quad point y: row sums Σ_y P(x·y) f(y) for every probe x, plus the
    // y-side U-statistic projection z_y = N f(y) mean_x P(x·y) f(x).
    let acc = par_sum_vec(q, p + 2, |j, acc| {
        let y = quad.point(j);
        let mut col = 0.0;
        for (i, x) in probe.iter().enumerate() {
            let pk = legendre(n, k, cosine(x, y));
            acc[i] += pk * fq[j];
            col += pk * fp[i];
        }
        let z = big_n * fq[j] * col / p as f64;
        acc[p] += z;
        acc[p + 1] += z * z;
    });
    let values: Vec<f64> = acc[..p].iter().map(|s| big_n * s / q as f64).collect();
    let zx: Vec<f64> = fp.iter().zip(&values).map(|(a, b)| a * b).collect();
    let energy = zx.iter().sum::<f64>() / p as f64;
    let var_x = sample_variance(&zx);
    let mean_y = acc[p] / q as f64;
    let var_y = if q > 1 { (acc[p + 1] - q as f64 * mean_y * mean_y).max(0.0) / (q - 1) as f64 } else { f64::INFINITY };
    let std_error = (var_x / p as f64 + var_y / q as f64).sqrt();
    Ok(DegreeProjection { values, energy, std_error })
}

/// Unbiased sample variance; infinite for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}
