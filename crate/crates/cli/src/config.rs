//! Experiment recipes. A config is a TOML file with a master seed and one
//! `[experiment]` table whose `kind` selects the experiment; unknown fields
//! anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sphgd_core::activation::{ActivationKind, ActivationSpec};
use sphgd_core::spectrum::SpectrumMethod;
use sphgd_core::sq::{AdversaryPolicy, OracleKind, SdaConvention};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it and a component name.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum(SpectrumConfig),
    FunkCheck(FunkCheckConfig),
    Train(TrainConfig),
    Bias(BiasConfig),
    Realizable(RealizableConfig),
    SqFamily(SqFamilyConfig),
    SqRun(SqRunConfig),
    Sda(SdaConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum(_) => "spectrum",
            Self::FunkCheck(_) => "funk-check",
            Self::Train(_) => "train",
            Self::Bias(_) => "bias",
            Self::Realizable(_) => "realizable",
            Self::SqFamily(_) => "sq-family",
            Self::SqRun(_) => "sq-run",
            Self::Sda(_) => "sda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Softplus,
    Relu,
    Step,
}

impl Activation {
    pub fn spec(self) -> ActivationSpec {
        match self {
            Self::Sigmoid => ActivationSpec::sigmoid(),
            Self::Softplus => ActivationSpec::softplus(),
            Self::Relu => ActivationSpec::relu(),
            Self::Step => ActivationSpec::step(),
        }
    }

    pub fn kind(self) -> ActivationKind {
        self.spec().kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    BetaSeries,
}

impl Method {
    pub fn core(self) -> SpectrumMethod {
        match self {
            Self::Quadrature => SpectrumMethod::Quadrature,
            Self::BetaSeries => SpectrumMethod::BetaSeries,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Quadrature => "quadrature",
            Self::BetaSeries => "beta-series",
        }
    }
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Quadrature]
}
fn default_nodes() -> usize {
    sphgd_core::spectrum::DEFAULT_NODES
}
fn default_mc_samples() -> usize {
    1_000_000
}
fn default_one() -> usize {
    1
}
fn default_sigmas() -> f64 {
    3.0
}
fn default_sigmoid() -> Activation {
    Activation::Sigmoid
}
fn default_probe() -> usize {
    512
}
fn default_true() -> bool {
    true
}
fn default_max_tries() -> usize {
    10
}
fn default_ten() -> usize {
    10
}
fn default_hundred() -> usize {
    100
}
fn default_trials() -> usize {
    20
}
fn default_bits() -> usize {
    400
}
fn default_ell() -> u32 {
    2
}
fn default_conventions() -> Vec<Convention> {
    vec![Convention::IncludeDiagonal, Convention::OffDiagonal]
}
fn default_loss_ratio() -> f64 {
    0.05
}
fn default_kernel_cache() -> usize {
    sphgd_core::gd::DEFAULT_KERNEL_CACHE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub n: usize,
    pub activation: Activation,
    pub k_max: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Gauss–Jacobi nodes; the error estimate doubles them.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunkCheckConfig {
    pub n: OneOrMany<usize>,
    pub activation: OneOrMany<Activation>,
    pub k_max: usize,
    #[serde(default = "default_mc_samples")]
    pub samples: usize,
    /// Random (u, v) pairs per dimension and activation.
    #[serde(default = "default_one")]
    pub pairs: usize,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
}

/// A pole: a basis index, explicit coordinates, or (omitted) a seeded random direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coef: f64,
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    /// Σ coef · √N(n,k) P_{n,k}(pole · x).
    Zonal { terms: Vec<TermConfig> },
    /// Σ_j c_j sigmoid(v_j · x), Σ c_j = a, ‖v_j‖ = b.
    Teacher { units: usize, a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub n: usize,
    /// Hidden units |W|.
    pub m: usize,
    /// Training points |X|.
    pub data: usize,
    #[serde(default = "default_sigmoid")]
    pub activation: Activation,
    pub target: TargetConfig,
    pub iterations: usize,
    /// Stop once the tracked in-support energy (or the loss) drops below this.
    #[serde(default)]
    pub floor: f64,
    /// Degrees whose residual energy is tracked.
    #[serde(default)]
    pub degrees: Vec<usize>,
    #[serde(default = "default_probe")]
    pub probe: usize,
    /// Also track the population residual on the probe points.
    #[serde(default)]
    pub population: bool,
    #[serde(default = "default_kernel_cache")]
    pub kernel_cache_limit: usize,
    #[serde(default = "default_true")]
    pub chart: bool,
    /// Independent Monte-Carlo energy estimates at the first and last iterate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<EnergyAuditConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyAuditConfig {
    pub degrees: Vec<usize>,
    /// Points where the projected residual is evaluated.
    pub probe: usize,
    /// Points averaged over to project onto a degree.
    pub quad: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    pub k: usize,
    pub l: usize,
    /// Iterations with a tracked residual energy at or below this are skipped.
    pub energy_floor: f64,
    pub run: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizableConfig {
    pub n: usize,
    pub units: usize,
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub data: usize,
    pub iterations: usize,
    /// One independent trial per entry.
    pub trials: Vec<u64>,
    #[serde(default = "default_loss_ratio")]
    pub loss_ratio: f64,
    #[serde(default = "default_kernel_cache")]
    pub kernel_cache_limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub y: f64,
    pub widths: Vec<f64>,
    pub calibration: f64,
    #[serde(default = "default_ell")]
    pub ell: u32,
    pub samples: usize,
    #[serde(default = "default_one")]
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub sigmas: Vec<f64>,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_steps: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqFamilyConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    #[serde(default = "default_max_tries")]
    pub max_tries: usize,
    /// Random pairs whose correlation is Monte-Carlo checked.
    #[serde(default = "default_ten")]
    pub pairs: usize,
    #[serde(default = "default_mc_samples")]
    pub samples: usize,
    /// Random (t, k, n) triples for the analytic correlation bound.
    #[serde(default = "default_hundred")]
    pub bound_triples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<SmoothingConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleConfig {
    Vstat { t: f64 },
    OneStatGauss { variance: f64 },
    InnerProduct { tolerance: f64 },
}

impl OracleConfig {
    pub fn core(self) -> OracleKind {
        match self {
            Self::Vstat { t } => OracleKind::Vstat { t },
            Self::OneStatGauss { variance } => OracleKind::OneStatGauss { variance },
            Self::InnerProduct { tolerance } => OracleKind::InnerProduct { tolerance },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    TowardReference,
    RandomBoundary,
}

impl Policy {
    pub fn core(self) -> AdversaryPolicy {
        match self {
            Self::TowardReference => AdversaryPolicy::TowardReference,
            Self::RandomBoundary => AdversaryPolicy::RandomBoundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Average answer over the family.
    Family,
    /// Answer for g ≡ 0.
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqRunConfig {
    pub n: usize,
    pub k: usize,
    pub d: OneOrMany<usize>,
    pub oracle: OracleConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    #[serde(default = "default_reference")]
    pub reference: ReferenceKind,
    /// Audit every response against an independent estimate (also `--audit`).
    #[serde(default)]
    pub audit: bool,
    #[serde(default = "default_bits")]
    pub bits_per_candidate: usize,
    #[serde(default = "default_max_tries")]
    pub max_tries: usize,
}

fn default_policy() -> Policy {
    Policy::TowardReference
}
fn default_reference() -> ReferenceKind {
    ReferenceKind::Family
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    IncludeDiagonal,
    OffDiagonal,
}

impl Convention {
    pub fn core(self) -> SdaConvention {
        match self {
            Self::IncludeDiagonal => SdaConvention::IncludeDiagonal,
            Self::OffDiagonal => SdaConvention::OffDiagonal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::IncludeDiagonal => "include-diagonal",
            Self::OffDiagonal => "off-diagonal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdaConfig {
    /// Random families to enumerate.
    pub families: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub n: usize,
    pub degrees: Vec<usize>,
    pub gammas: Vec<f64>,
    #[serde(default = "default_conventions")]
    pub conventions: Vec<Convention>,
}

fn field_err(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config { field: Some(format!("experiment.{field}")), message: reason.into() }
}

fn positive(field: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(field_err(field, "must be positive"));
    }
    Ok(())
}

fn dim(field: &str, n: usize) -> Result<(), CliError> {
    if n < sphgd_core::sphere::MIN_DIM {
        return Err(field_err(field, format!("dimension must be at least {}", sphgd_core::sphere::MIN_DIM)));
    }
    Ok(())
}

fn pos_real(field: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(field_err(field, "must be a positive number"));
    }
    Ok(())
}

impl TrainConfig {
    fn validate(&self, prefix: &str) -> Result<(), CliError> {
        let f = |name: &str| format!("{prefix}{name}");
        dim(&f("n"), self.n)?;
        positive(&f("m"), self.m)?;
        positive(&f("data"), self.data)?;
        positive(&f("iterations"), self.iterations)?;
        positive(&f("probe"), self.probe)?;
        if let Some(a) = &self.audit {
            if a.degrees.is_empty() {
                return Err(field_err(&f("audit.degrees"), "needs at least one degree"));
            }
            positive(&f("audit.probe"), a.probe)?;
            if a.quad < 2 {
                return Err(field_err(&f("audit.quad"), "needs at least two points"));
            }
        }
        if self.floor.is_nan() || self.floor < 0.0 {
            return Err(field_err(&f("floor"), "must be non-negative"));
        }
        match &self.target {
            TargetConfig::Zonal { terms } => {
                if terms.is_empty() {
                    return Err(field_err(&f("target.terms"), "needs at least one term"));
                }
                for (i, t) in terms.iter().enumerate() {
                    let name = f(&format!("target.terms[{i}]"));
                    if t.basis.is_some() && t.pole.is_some() {
                        return Err(field_err(&name, "give either basis or pole, not both"));
                    }
                    if t.basis.is_some_and(|b| b >= self.n) {
                        return Err(field_err(&format!("{name}.basis"), "index out of range"));
                    }
                    if t.pole.as_ref().is_some_and(|p| p.len() != self.n) {
                        return Err(field_err(&format!("{name}.pole"), format!("needs {} coordinates", self.n)));
                    }
                }
            }
            TargetConfig::Teacher { units, a, b } => {
                positive(&f("target.units"), *units)?;
                pos_real(&f("target.a"), *a)?;
                pos_real(&f("target.b"), *b)?;
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.experiment {
            Experiment::Spectrum(c) => {
                dim("n", c.n)?;
                if c.methods.is_empty() {
                    return Err(field_err("methods", "needs at least one method"));
                }
                if c.nodes < c.k_max + 8 {
                    return Err(field_err("nodes", "must be at least k_max + 8"));
                }
                if c.methods.contains(&Method::BetaSeries) && c.activation.spec().taylor().is_none() {
                    return Err(field_err("methods", "beta-series needs an activation with a Taylor series"));
                }
            }
            Experiment::FunkCheck(c) => {
                for n in c.n.to_vec() {
                    dim("n", n)?;
                }
                if c.samples < 2 {
                    return Err(field_err("samples", "needs at least two samples"));
                }
                positive("pairs", c.pairs)?;
                pos_real("sigmas", c.sigmas)?;
            }
            Experiment::Train(c) => c.validate("")?,
            Experiment::Bias(c) => {
                c.run.validate("run.")?;
                if c.l < c.k {
                    return Err(field_err("l", "must be at least k"));
                }
                if c.energy_floor.is_nan() || c.energy_floor < 0.0 {
                    return Err(field_err("energy_floor", "must be non-negative"));
                }
            }
            Experiment::Realizable(c) => {
                dim("n", c.n)?;
                positive("units", c.units)?;
                pos_real("a", c.a)?;
                pos_real("b", c.b)?;
                positive("m", c.m)?;
                positive("data", c.data)?;
                positive("iterations", c.iterations)?;
                if c.trials.is_empty() {
                    return Err(field_err("trials", "needs at least one seed"));
                }
                pos_real("loss_ratio", c.loss_ratio)?;
            }
            Experiment::SqFamily(c) => {
                dim("n", c.n)?;
                if c.d < 2 {
                    return Err(field_err("d", "a family needs at least two directions"));
                }
                if c.samples < 2 {
                    return Err(field_err("samples", "needs at least two samples"));
                }
                if let Some(cov) = &c.covariance {
                    if cov.widths.is_empty() {
                        return Err(field_err("covariance.widths", "needs at least one width"));
                    }
                    for w in &cov.widths {
                        pos_real("covariance.widths", *w)?;
                    }
                    pos_real("covariance.calibration", cov.calibration)?;
                    if cov.samples < 2 {
                        return Err(field_err("covariance.samples", "needs at least two samples"));
                    }
                }
                if let Some(s) = &c.smoothing {
                    for sigma in &s.sigmas {
                        pos_real("smoothing.sigmas", *sigma)?;
                    }
                    if s.grid_max.partial_cmp(&s.grid_min) != Some(std::cmp::Ordering::Greater) || s.grid_steps == 0 {
                        return Err(field_err("smoothing.grid_steps", "grid must be a non-empty increasing range"));
                    }
                    if s.samples < 2 {
                        return Err(field_err("smoothing.samples", "needs at least two samples"));
                    }
                }
            }
            Experiment::SqRun(c) => {
                dim("n", c.n)?;
                let ds = c.d.to_vec();
                if ds.is_empty() || ds.iter().any(|&d| d < 2) {
                    return Err(field_err("d", "family sizes must be at least 2"));
                }
                positive("trials", c.trials)?;
                match c.oracle {
                    OracleConfig::Vstat { t } if !(t >= 1.0 && t.is_finite()) => {
                        return Err(field_err("oracle.t", "must be at least 1"))
                    }
                    OracleConfig::OneStatGauss { variance } if !(variance >= 0.0 && variance.is_finite()) => {
                        return Err(field_err("oracle.variance", "must be non-negative"))
                    }
                    OracleConfig::InnerProduct { tolerance } if !(tolerance > 0.0 && tolerance.is_finite()) => {
                        return Err(field_err("oracle.tolerance", "must be positive"))
                    }
                    _ => {}
                }
                positive("bits_per_candidate", c.bits_per_candidate)?;
            }
            Experiment::Sda(c) => {
                dim("n", c.n)?;
                if c.min_size == 0 || c.max_size < c.min_size {
                    return Err(field_err("min_size", "need 1 ≤ min_size ≤ max_size"));
                }
                if c.max_size > sphgd_core::sq::SDA_CAP {
                    return Err(field_err("max_size", format!("exact enumeration caps at {}", sphgd_core::sq::SDA_CAP)));
                }
                if c.degrees.is_empty() || c.degrees.contains(&0) {
                    return Err(field_err("degrees", "need at least one degree, all positive"));
                }
                if c.gammas.is_empty() {
                    return Err(field_err("gammas", "need at least one threshold"));
                }
                for g in &c.gammas {
                    pos_real("gammas", *g)?;
                }
                if c.conventions.is_empty() {
                    return Err(field_err("conventions", "need at least one convention"));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config { field: None, message: e.to_string() })?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "experiment" {
                if let Some(err) = experiment_error(text) {
                    return err;
                }
            }
            CliError::Config { field: (path != ".").then_some(path), message: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

/// The tagged experiment enum buffers its body, which hides the failing field
/// from path tracking. Re-deserialize the concrete variant to recover it.
fn experiment_error(text: &str) -> Option<CliError> {
    fn probe<T: serde::de::DeserializeOwned>(body: toml::Value) -> Option<CliError> {
        serde_path_to_error::deserialize::<_, T>(body).err().map(|e| {
            let inner = e.path().to_string();
            let field = if inner == "." { "experiment".to_string() } else { format!("experiment.{inner}") };
            CliError::Config { field: Some(field), message: e.into_inner().to_string() }
        })
    }
    let mut doc: toml::Table = text.parse().ok()?;
    let mut body = doc.remove("experiment")?;
    let kind = body.as_table_mut()?.remove("kind")?;
    match kind.as_str()? {
        "spectrum" => probe::<SpectrumConfig>(body),
        "funk-check" => probe::<FunkCheckConfig>(body),
        "train" => probe::<TrainConfig>(body),
        "bias" => probe::<BiasConfig>(body),
        "realizable" => probe::<RealizableConfig>(body),
        "sq-family" => probe::<SqFamilyConfig>(body),
        "sq-run" => probe::<SqRunConfig>(body),
        "sda" => probe::<SdaConfig>(body),
        _ => None,
    }
}
