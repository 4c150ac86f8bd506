//! Gradient descent on the output weights of f(x) = Σ_{u∈W} a(u) φ(u·x).
//!
//! One step is a_{i+1}(u) = a_i(u) + (1/m) T_X H_i(u), which moves the network
//! by f_{i+1} - f_i = T_W T_X H_i. Residuals on X are updated incrementally.
//! Degree-k residual energies are tracked exactly in the network part: the
//! degree-k projection of φ(u·x) is N(n,k) λ_{n,k} P_{n,k}(u·x).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::{sigmoid, ActivationSpec};
use crate::error::{invalid, Error, Result};
use crate::rng::{chunk_rng, pairwise_sum, par_sum};
use crate::sphere::{
    cosine, harmonic_dim_f64, legendre, project_degree, sample_uniform_sphere, sample_variance, DegreeProjection,
    SampleSet, UnitVector, ZonalSum, ZonalTerm,
};
use crate::spectrum::{eigenvalue_quadrature, HarmonicSpectrum, DEFAULT_NODES, ZERO_THRESHOLD};

/// Kernel entries cached by default (8 bytes each).
pub const DEFAULT_KERNEL_CACHE: usize = 150_000_000;
/// Targets with estimated ‖g‖₂ below this are treated as zero.
pub const TRIVIAL_TARGET_NORM: f64 = 1e-9;

/// g(x) = Σ_j c_j sigmoid(v_j·x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherNet {
    dim: usize,
    coefs: Vec<f64>,
    /// Unit directions v_j / ‖v_j‖.
    directions: Vec<UnitVector>,
    norms: Vec<f64>,
}

impl TeacherNet {
    /// Builds a teacher from output weights and (not necessarily unit) hidden vectors.
    pub fn from_parts(coefs: Vec<f64>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if coefs.is_empty() || coefs.len() != vectors.len() {
            return Err(Error::LengthMismatch { expected: coefs.len(), found: vectors.len() });
        }
        let dim = vectors[0].len();
        let mut directions = Vec::with_capacity(vectors.len());
        let mut norms = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            norms.push(v.iter().map(|c| c * c).sum::<f64>().sqrt());
            directions.push(UnitVector::normalized(v)?);
        }
        Ok(Self { dim, coefs, directions, norms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn units(&self) -> usize {
        self.coefs.len()
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn l1_norm(&self) -> f64 {
        self.coefs.iter().map(|c| c.abs()).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coefs
            .iter()
            .zip(&self.directions)
            .zip(&self.norms)
            .map(|((c, v), b)| c * sigmoid(b * cosine(v.coords(), x)))
            .sum()
    }

    /// Exact degree-k component: sigmoid(b v̂·x) projects to N λ_k(sigmoid(b·)) P_k(v̂·x).
    pub fn component(&self, k: usize) -> Result<ZonalSum> {
        let mut lambdas: HashMap<u64, f64> = HashMap::new();
        let nodes = DEFAULT_NODES.max(k + 8);
        let mut terms = Vec::with_capacity(self.units());
        for ((c, v), b) in self.coefs.iter().zip(&self.directions).zip(&self.norms) {
            let lambda = match lambdas.get(&b.to_bits()) {
                Some(l) => *l,
                None => {
                    let l = eigenvalue_quadrature(self.dim, k, &ActivationSpec::scaled_sigmoid(*b)?, nodes)?.value;
                    lambdas.insert(b.to_bits(), l);
                    l
                }
            };
            let coef = c * harmonic_dim_f64(self.dim, k).sqrt() * lambda;
            terms.push(ZonalTerm { coef, degree: k, pole: v.clone() });
        }
        ZonalSum::new(self.dim, terms)
    }
}

/// A random teacher with positive output weights summing to `a` and hidden
/// vectors of norm exactly `b`.
pub fn make_teacher(n: usize, units: usize, a: f64, b: f64, seed: u64) -> Result<TeacherNet> {
    if units == 0 {
        return Err(invalid("units", "need at least one unit"));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid("a", "weight scale and direction norm must be positive"));
    }
    let mut rng = chunk_rng(seed, 0);
    let raw: Vec<f64> = (0..units).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let coefs = raw.iter().map(|c| a * c / total).collect();
    let vectors = (0..units)
        .map(|_| UnitVector::random(n, &mut rng).map(|u| u.coords().iter().map(|c| b * c).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    TeacherNet::from_parts(coefs, vectors)
}

type TargetFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The function g being learned.
#[derive(Clone)]
pub enum Target {
    Zonal(ZonalSum),
    Teacher(TeacherNet),
    Custom { label: String, f: TargetFn },
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zonal(z) => f.debug_tuple("Zonal").field(z).finish(),
            Self::Teacher(t) => f.debug_tuple("Teacher").field(t).finish(),
            Self::Custom { label, .. } => f.debug_struct("Custom").field("label", label).finish(),
        }
    }
}

impl Target {
    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::Custom { label: label.into(), f: Arc::new(f) }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Zonal(z) => z.eval(x),
            Self::Teacher(t) => t.eval(x),
            Self::Custom { f, .. } => f(x),
        }
    }

    /// Exact degree-k component when the target has a known expansion.
    pub fn component(&self, k: usize) -> Result<Option<ZonalSum>> {
        match self {
            Self::Zonal(z) => Ok(Some(z.component(k))),
            Self::Teacher(t) => t.component(k).map(Some),
            Self::Custom { .. } => Ok(None),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkState {
    hidden: SampleSet,
    weights: Vec<f64>,
    activation: ActivationSpec,
    iteration: usize,
}

/// m uniform hidden directions and zero output weights.
pub fn init_network(n: usize, m: usize, activation: ActivationSpec, seed: u64) -> Result<NetworkState> {
    let hidden = sample_uniform_sphere(n, m, seed)?;
    Ok(NetworkState { weights: vec![0.0; m], hidden, activation, iteration: 0 })
}

impl NetworkState {
    pub fn hidden(&self) -> &SampleSet {
        &self.hidden
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.activation
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    /// f(x) = Σ_u a(u) φ(u·x).
    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_with(&self.hidden, &self.activation, &self.weights, x)
    }
}

fn eval_with(hidden: &SampleSet, act: &ActivationSpec, weights: &[f64], x: &[f64]) -> f64 {
    hidden.iter().zip(weights).map(|(u, a)| a * act.eval(cosine(u, x))).sum()
}

/// Which degrees to follow and on which points.
#[derive(Debug, Clone)]
pub struct TrackerSpec {
    pub degrees: Vec<usize>,
    /// Points where degree components are evaluated; energies are means over them.
    pub probe: SampleSet,
    /// Second sample set for Monte-Carlo projection of targets without a
    /// known expansion.
    pub quad: Option<SampleSet>,
    pub spectrum: HarmonicSpectrum,
    /// Also track the full population residual ‖H_i‖² on the probe points.
    pub population: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Largest m·|X| for which φ(u·x) is cached.
    pub kernel_cache_limit: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { kernel_cache_limit: DEFAULT_KERNEL_CACHE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// mean_X H_i(x)².
    pub empirical_loss: f64,
    /// Estimated ‖H_i^{(k)}‖₂² per tracked degree.
    pub energies: Vec<f64>,
    /// Estimated ‖Δ_i^{(k)}‖₂² for the step i → i+1, once it has been taken.
    pub step_energies: Option<Vec<f64>>,
    /// max_u |a_i(u)|.
    pub alpha: f64,
    /// max_X |H_i(x)|.
    pub beta: f64,
    /// Estimated ‖H_i‖₂² with its standard error, when tracked.
    pub population_loss: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct DegreeTracker {
    degrees: Vec<usize>,
    lambdas: Vec<f64>,
    /// H^{(k)} at the probe points, per tracked degree.
    residual: Vec<Vec<f64>>,
    /// N λ_k P_k(u·p), row-major by probe; None when λ_k is zero.
    kernels: Vec<Option<Vec<f64>>>,
    /// H at the probe points and φ(u·p), when the population loss is tracked.
    population: Option<(Vec<f64>, Vec<f64>)>,
}

impl DegreeTracker {
    fn new(spec: &TrackerSpec, target: &Target, hidden: &SampleSet, act: &ActivationSpec) -> Result<Self> {
        let n = hidden.dim();
        if spec.probe.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: spec.probe.dim() });
        }
        if spec.probe.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let p = spec.probe.count();
        let m = hidden.count();
        let mut lambdas = Vec::new();
        let mut residual = Vec::new();
        let mut kernels = Vec::new();
        for &k in &spec.degrees {
            let lambda = spec.spectrum.lambda(k)?;
            let values = match target.component(k)? {
                Some(z) => spec.probe.map(|x| z.eval(x)),
                None => {
                    let quad = spec.quad.as_ref().ok_or_else(|| {
                        invalid("quad", "targets without a known expansion need a quadrature sample set")
                    })?;
                    project_degree(|x| target.eval(x), k, &spec.probe, quad)?.values
                }
            };
            let kernel = if lambda.abs() > ZERO_THRESHOLD * 1e-6 {
                let scale = harmonic_dim_f64(n, k) * lambda;
                let mut mat = vec![0.0; p * m];
                mat.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
                    let x = spec.probe.point(i);
                    for (j, u) in hidden.iter().enumerate() {
                        row[j] = scale * legendre(n, k, cosine(u, x));
                    }
                });
                Some(mat)
            } else {
                None
            };
            lambdas.push(lambda);
            residual.push(values);
            kernels.push(kernel);
        }
        let population = if spec.population {
            let g = spec.probe.map(|x| target.eval(x));
            let mut mat = vec![0.0; p * m];
            mat.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
                let x = spec.probe.point(i);
                for (j, u) in hidden.iter().enumerate() {
                    row[j] = act.eval(cosine(u, x));
                }
            });
            Some((g, mat))
        } else {
            None
        };
        Ok(Self { degrees: spec.degrees.clone(), lambdas, residual, kernels, population })
    }

    fn energies(&self) -> Vec<f64> {
        self.residual.iter().map(|h| mean_sq(h)).collect()
    }

    fn population_loss(&self) -> Option<(f64, f64)> {
        self.population.as_ref().map(|(h, _)| {
            let sq: Vec<f64> = h.iter().map(|v| v * v).collect();
            let mean = pairwise_sum(&sq) / sq.len() as f64;
            (mean, (sample_variance(&sq) / sq.len() as f64).sqrt())
        })
    }

    /// Applies a weight increment c; returns ‖Δ^{(k)}‖² estimates.
    fn advance(&mut self, c: &[f64]) -> Vec<f64> {
        let m = c.len();
        let mut out = Vec::with_capacity(self.degrees.len());
        for (h, kernel) in self.residual.iter_mut().zip(&self.kernels) {
            match kernel {
                Some(mat) => {
                    let delta: Vec<f64> = mat.par_chunks(m).map(|row| crate::sphere::dot(row, c)).collect();
                    h.iter_mut().zip(&delta).for_each(|(a, d)| *a -= d);
                    out.push(mean_sq(&delta));
                }
                None => out.push(0.0),
            }
        }
        if let Some((h, mat)) = self.population.as_mut() {
            let delta: Vec<f64> = mat.par_chunks(m).map(|row| crate::sphere::dot(row, c)).collect();
            h.iter_mut().zip(&delta).for_each(|(a, d)| *a -= d);
        }
        out
    }
}

fn mean_sq(xs: &[f64]) -> f64 {
    let sq: Vec<f64> = xs.iter().map(|v| v * v).collect();
    pairwise_sum(&sq) / xs.len() as f64
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// Columns of X processed together in the second averaging pass.
const COLUMN_BLOCK: usize = 256;

#[derive(Debug, Clone)]
pub struct TrainingRun {
    target: Target,
    data: SampleSet,
    labels: Vec<f64>,
    residual: Vec<f64>,
    state: NetworkState,
    /// φ(u·x), row-major by hidden unit.
    kernel: Option<Vec<f64>>,
    tracker: Option<DegreeTracker>,
    history: Vec<IterationRecord>,
    target_l2: f64,
    target_sup: f64,
}

impl TrainingRun {
    pub fn new(
        target: Target,
        state: NetworkState,
        data: SampleSet,
        tracker: Option<TrackerSpec>,
        options: RunOptions,
    ) -> Result<Self> {
        if data.dim() != state.hidden.dim() {
            return Err(Error::DimensionMismatch { expected: state.hidden.dim(), found: data.dim() });
        }
        let labels = data.map(|x| target.eval(x));
        let f0 = data.map(|x| state.eval(x));
        let residual: Vec<f64> = labels.iter().zip(&f0).map(|(g, f)| g - f).collect();
        let (m, nx) = (state.width(), data.count());
        let kernel = (m.saturating_mul(nx) <= options.kernel_cache_limit).then(|| {
            let mut k = vec![0.0; m * nx];
            k.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                let u = state.hidden.point(j);
                for (i, x) in data.iter().enumerate() {
                    row[i] = state.activation.eval(cosine(u, x));
                }
            });
            k
        });
        let tracker = tracker.map(|t| DegreeTracker::new(&t, &target, &state.hidden, &state.activation)).transpose()?;
        let target_l2 = mean_sq(&labels).sqrt();
        let target_sup = max_abs(&labels);
        let mut run = Self {
            target,
            data,
            labels,
            residual,
            state,
            kernel,
            tracker,
            history: Vec::new(),
            target_l2,
            target_sup,
        };
        run.history.push(run.record());
        Ok(run)
    }

    fn record(&self) -> IterationRecord {
        IterationRecord {
            iteration: self.state.iteration,
            empirical_loss: mean_sq(&self.residual),
            energies: self.tracker.as_ref().map(|t| t.energies()).unwrap_or_default(),
            step_energies: None,
            alpha: max_abs(&self.state.weights),
            beta: max_abs(&self.residual),
            population_loss: self.tracker.as_ref().and_then(|t| t.population_loss()),
        }
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn data(&self) -> &SampleSet {
        &self.data
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    pub fn tracked_degrees(&self) -> &[usize] {
        self.tracker.as_ref().map_or(&[], |t| &t.degrees)
    }

    pub fn tracked_lambdas(&self) -> &[f64] {
        self.tracker.as_ref().map_or(&[], |t| &t.lambdas)
    }

    pub fn kernel_cached(&self) -> bool {
        self.kernel.is_some()
    }

    /// Monte-Carlo estimate of ‖g‖₂ over X.
    pub fn target_l2(&self) -> f64 {
        self.target_l2
    }

    /// max over X of |g|.
    pub fn target_sup(&self) -> f64 {
        self.target_sup
    }

    #[inline]
    fn phi(&self, j: usize, i: usize) -> f64 {
        match &self.kernel {
            Some(k) => k[j * self.data.count() + i],
            None => self.state.activation.eval(cosine(self.state.hidden.point(j), self.data.point(i))),
        }
    }

    /// T_X h(u_j) for every hidden unit j.
    pub fn tx(&self, h: &[f64]) -> Vec<f64> {
        let nx = self.data.count();
        (0..self.state.width())
            .into_par_iter()
            .map(|j| match &self.kernel {
                Some(k) => crate::sphere::dot(&k[j * nx..(j + 1) * nx], h) / nx as f64,
                None => {
                    let row: Vec<f64> = (0..nx).map(|i| self.phi(j, i)).collect();
                    crate::sphere::dot(&row, h) / nx as f64
                }
            })
            .collect()
    }

    /// Σ_u c(u) φ(u·x) for every x in X.
    fn apply_weights_on_data(&self, c: &[f64]) -> Vec<f64> {
        let nx = self.data.count();
        let mut out = vec![0.0; nx];
        out.par_chunks_mut(COLUMN_BLOCK).enumerate().for_each(|(b, block)| {
            let start = b * COLUMN_BLOCK;
            for (j, cj) in c.iter().enumerate() {
                match &self.kernel {
                    Some(k) => {
                        let row = &k[j * nx + start..j * nx + start + block.len()];
                        block.iter_mut().zip(row).for_each(|(o, p)| *o += cj * p);
                    }
                    None => {
                        for (t, o) in block.iter_mut().enumerate() {
                            *o += cj * self.phi(j, start + t);
                        }
                    }
                }
            }
        });
        out
    }

    /// The weight increment (1/m) T_X H_i of the next step.
    pub fn step_increment(&self) -> Vec<f64> {
        let m = self.state.width() as f64;
        self.tx(&self.residual).into_iter().map(|v| v / m).collect()
    }

    /// ∂L/∂a(u) = -2 T_X H(u) for the empirical loss L = mean_X H².
    pub fn loss_gradient(&self) -> Vec<f64> {
        self.tx(&self.residual).into_iter().map(|v| -2.0 * v).collect()
    }

    /// Empirical loss for arbitrary output weights, evaluated from scratch.
    pub fn empirical_loss_at(&self, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.state.width() {
            return Err(Error::LengthMismatch { expected: self.state.width(), found: weights.len() });
        }
        let nx = self.data.count();
        Ok(par_sum(nx, |i| {
            let f: f64 = (0..self.state.width()).map(|j| weights[j] * self.phi(j, i)).sum();
            let h = self.labels[i] - f;
            h * h
        }) / nx as f64)
    }

    /// One gradient step with learning rate 1/(2m).
    pub fn gd_step(&mut self) {
        let c = self.step_increment();
        let df = self.apply_weights_on_data(&c);
        self.residual.iter_mut().zip(&df).for_each(|(h, d)| *h -= d);
        self.state.weights.iter_mut().zip(&c).for_each(|(a, d)| *a += d);
        let step = self.tracker.as_mut().map(|t| t.advance(&c));
        if let Some(last) = self.history.last_mut() {
            last.step_energies = Some(step.unwrap_or_default());
        }
        self.state.iteration += 1;
        let rec = self.record();
        self.history.push(rec);
    }

    /// Largest gap between the incremental residual and g - f_i recomputed on X.
    pub fn residual_drift(&self) -> f64 {
        let fresh = self.data.map(|x| self.state.eval(x));
        self.labels
            .iter()
            .zip(&fresh)
            .zip(&self.residual)
            .map(|((g, f), h)| (g - f - h).abs())
            .fold(0.0, f64::max)
    }

    /// Replaces the incremental residual with a full recomputation.
    pub fn recompute_residual(&mut self) {
        let fresh = self.data.map(|x| self.state.eval(x));
        self.residual = self.labels.iter().zip(&fresh).map(|(g, f)| g - f).collect();
    }

    /// H_i(x) = g(x) - f_i(x) at an arbitrary point.
    pub fn residual_at(&self, x: &[f64]) -> f64 {
        self.target.eval(x) - self.state.eval(x)
    }

    /// Independent estimate of ‖H_i^{(k)}‖² by zonal-kernel Monte Carlo.
    pub fn audit_energy(&self, k: usize, probe: &SampleSet, quad: &SampleSet) -> Result<DegreeProjection> {
        project_degree(|x| self.residual_at(x), k, probe, quad)
    }

    /// Sum of tracked energies over degrees in the activation's support.
    fn supported_energy(&self) -> Option<f64> {
        let t = self.tracker.as_ref()?;
        let last = self.history.last()?;
        Some(
            t.lambdas
                .iter()
                .zip(&last.energies)
                .filter(|(l, _)| l.abs() > ZERO_THRESHOLD)
                .map(|(_, e)| e)
                .sum(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    /// Tracked supported energy (or empirical loss when untracked) fell below the floor.
    Converged,
    /// The target is numerically zero; no steps were taken.
    TrivialTarget,
    /// The iteration budget ran out before the floor was reached.
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub status: TrainStatus,
    pub iterations: usize,
}

/// Runs gradient steps until the energy floor or the iteration budget.
pub fn train(run: &mut TrainingRun, max_iters: usize, floor: f64) -> Result<TrainOutcome> {
    if max_iters == 0 {
        return Err(invalid("max_iters", "must be at least 1"));
    }
    if run.target_l2 < TRIVIAL_TARGET_NORM {
        return Ok(TrainOutcome { status: TrainStatus::TrivialTarget, iterations: 0 });
    }
    let start = run.state.iteration;
    let below = |run: &TrainingRun| {
        let e = run.supported_energy().unwrap_or_else(|| run.history.last().map_or(f64::INFINITY, |r| r.empirical_loss));
        e < floor
    };
    for _ in 0..max_iters {
        if below(run) {
            return Ok(TrainOutcome { status: TrainStatus::Converged, iterations: run.state.iteration - start });
        }
        run.gd_step();
    }
    let status = if below(run) { TrainStatus::Converged } else { TrainStatus::BudgetExhausted };
    Ok(TrainOutcome { status, iterations: run.state.iteration - start })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmitReason {
    /// Degree-k residual energy at or below the floor.
    LowerDegreeBelowFloor,
    /// Degree-ℓ residual energy at or below the floor.
    UpperDegreeBelowFloor,
    /// No step has been taken from this iteration yet.
    NoStep,
    /// The degree-ℓ step energy is zero, so the ratio is undefined.
    ZeroStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub iteration: usize,
    pub step_energy_k: Option<f64>,
    pub step_energy_l: Option<f64>,
    pub rate: Option<f64>,
    pub omitted: Option<OmitReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub k: usize,
    pub l: usize,
    /// (λ_{n,k} / λ_{n,ℓ})².
    pub predicted_rate: f64,
    pub rows: Vec<BiasRow>,
}

impl BiasReport {
    pub fn valid_rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }

    pub fn median_rate(&self) -> Option<f64> {
        median(&self.valid_rates())
    }
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

/// r_i = (‖Δ_i^{(k)}‖/‖H_i^{(k)}‖) / (‖Δ_i^{(ℓ)}‖/‖H_i^{(ℓ)}‖) at every iteration
/// where both residual energies exceed `floor`.
pub fn spectral_bias(run: &TrainingRun, k: usize, l: usize, floor: f64) -> Result<BiasReport> {
    if l < k {
        return Err(invalid("l", "the second degree must not be below the first"));
    }
    let degrees = run.tracked_degrees();
    let pos = |d: usize| {
        degrees.iter().position(|&x| x == d).ok_or_else(|| invalid("degree", format!("degree {d} is not tracked")))
    };
    let (ik, il) = (pos(k)?, pos(l)?);
    let lambdas = run.tracked_lambdas();
    let predicted_rate = (lambdas[ik] / lambdas[il]).powi(2);
    let rows = run
        .history
        .iter()
        .map(|rec| {
            let (ek, el) = (rec.energies[ik], rec.energies[il]);
            let (sk, sl) = match &rec.step_energies {
                Some(s) => (Some(s[ik]), Some(s[il])),
                None => (None, None),
            };
            let omitted = if ek <= floor {
                Some(OmitReason::LowerDegreeBelowFloor)
            } else if el <= floor {
                Some(OmitReason::UpperDegreeBelowFloor)
            } else if sk.is_none() {
                Some(OmitReason::NoStep)
            } else if k != l && sl == Some(0.0) {
                Some(OmitReason::ZeroStep)
            } else {
                None
            };
            let rate = match (omitted, sk, sl) {
                (None, _, _) if k == l => Some(1.0),
                (None, Some(a), Some(b)) => Some((a / ek).sqrt() / (b / el).sqrt()),
                _ => None,
            };
            BiasRow { iteration: rec.iteration, step_energy_k: sk, step_energy_l: sl, rate, omitted }
        })
        .collect();
    Ok(BiasReport { k, l, predicted_rate, rows })
}
