//! One function per experiment kind. Each returns its tables in memory; the
//! runner writes them and builds the manifest.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sphgd_core::gd::{
    init_network, make_teacher, median, spectral_bias, train, RunOptions, Target, TrackerSpec, TrainingRun,
};
use sphgd_core::operator::funk_hecke_check;
use sphgd_core::rng::{chunk_rng, derive_index, derive_seed, par_sample_sum};
use sphgd_core::sphere::{fill_uniform, legendre, sample_uniform_sphere, UnitVector, ZonalSum, ZonalTerm};
use sphgd_core::spectrum::{build_spectrum, build_spectrum_with, SpectrumMethod};
use sphgd_core::sq::{
    correlation_bound, correlation_scan_learner, covariance_check, generate_hard_family, noise_smoothing_check,
    sda_bounds, sda_bruteforce, HardFamily, LearnerConfig, SoftIndicator, TranscriptRecord,
};

use crate::chart::{render_chart, ChartSpec};
use crate::config::*;
use crate::error::CliError;

/// Files and findings produced by one experiment.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: serde_json::Map<String, Value>,
    /// Failed checks; a non-empty list makes the run exit with status 3.
    pub flags: Vec<String>,
    pub phases: Vec<(String, f64)>,
}

impl Outputs {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    fn table(&mut self, name: &str, t: Table) -> Result<(), CliError> {
        if let Some(spec) = &t.chart {
            let svg = render_chart(&t.headers, &t.rows, spec)?;
            self.files.push((name.replace(".csv", ".svg"), svg.into_bytes()));
        }
        self.files.push((name.to_string(), t.into_bytes()?));
        Ok(())
    }

    fn note(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(v).expect("summary values serialize"));
    }
}

/// A CSV table kept as strings so it can also feed a chart.
#[derive(Debug)]
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
    chart: Option<ChartSpec>,
}

impl Table {
    fn new<S: AsRef<str>>(headers: &[S]) -> Self {
        Self { headers: headers.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new(), chart: None }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.headers.len());
        self.rows.push(cells);
    }

    fn chart(mut self, title: &str, x: &str, columns: &[String], log_y: bool) -> Self {
        self.chart = Some(ChartSpec { title: title.into(), x_column: x.into(), columns: columns.to_vec(), log_y });
        self
    }

    fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Csv(e.to_string()))
    }
}

/// CSV cell text. Floats use the shortest round-trip form, with an exponent
/// for very small or large magnitudes.
trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_cell!(usize, u64, bool);

impl<T: Cell + ?Sized> Cell for &T {
    fn cell(&self) -> String {
        (**self).cell()
    }
}

fn s<T: Cell>(v: T) -> String {
    v.cell()
}

fn opt<T: Cell>(v: Option<T>) -> String {
    v.map(|x| x.cell()).unwrap_or_default()
}

fn pass(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.into()
}

pub fn execute(cfg: &ExperimentConfig, audit: bool) -> Result<Outputs, CliError> {
    let mut out = Outputs::default();
    let seed = cfg.seed;
    match &cfg.experiment {
        Experiment::Spectrum(c) => spectrum(c, &mut out)?,
        Experiment::FunkCheck(c) => funk_check(c, seed, &mut out)?,
        Experiment::Train(c) => {
            let mut run = out.time("setup", || build_run(c, seed))?;
            match &c.audit {
                None => train_and_record(c, &mut run, &mut out)?,
                Some(a) => {
                    let probe = sample_uniform_sphere(c.n, a.probe, derive_seed(seed, "audit-probe"))?;
                    let quad = sample_uniform_sphere(c.n, a.quad, derive_seed(seed, "audit-quad"))?;
                    let mut t = Table::new(&["iteration", "degree", "energy", "std_error", "tracked"]);
                    let mut audit_rows = |run: &TrainingRun, out: &mut Outputs| -> Result<(), CliError> {
                        let last = run.history().last().expect("history is never empty");
                        for &k in &a.degrees {
                            let p = out.time(&format!("audit k={k} i={}", last.iteration), || run.audit_energy(k, &probe, &quad))?;
                            let tracked = run.tracked_degrees().iter().position(|&d| d == k).map(|i| last.energies[i]);
                            t.row(vec![s(last.iteration), s(k), s(p.energy), s(p.std_error), opt(tracked)]);
                        }
                        Ok(())
                    };
                    audit_rows(&run, &mut out)?;
                    train_and_record(c, &mut run, &mut out)?;
                    audit_rows(&run, &mut out)?;
                    out.table("energy_audit.csv", t)?;
                }
            }
        }
        Experiment::Bias(c) => bias(c, seed, &mut out)?,
        Experiment::Realizable(c) => realizable(c, seed, &mut out)?,
        Experiment::SqFamily(c) => sq_family(c, seed, &mut out)?,
        Experiment::SqRun(c) => sq_run(c, seed, audit, &mut out)?,
        Experiment::Sda(c) => sda(c, seed, &mut out)?,
    }
    Ok(out)
}

fn spectrum(c: &SpectrumConfig, out: &mut Outputs) -> Result<(), CliError> {
    let act = c.activation.spec();
    let mut t = Table::new(&["n", "k", "lambda", "method", "error_estimate"]);
    for m in &c.methods {
        let spec = out.time(m.name(), || build_spectrum_with(c.n, &act, c.k_max, m.core(), c.nodes))?;
        for e in &spec.entries {
            t.row(vec![s(c.n), s(e.k), s(e.lambda), m.name().into(), s(e.error_estimate)]);
            if !e.converged {
                out.flags.push(format!("{} k={} did not converge (error estimate {})", m.name(), e.k, e.error_estimate));
            }
        }
        out.note(&format!("support_{}", m.name()), spec.support());
    }
    out.table("spectrum.csv", t)
}

fn random_pair(n: usize, seed: u64) -> Result<(UnitVector, UnitVector), CliError> {
    let mut rng = chunk_rng(seed, 0);
    Ok((UnitVector::random(n, &mut rng)?, UnitVector::random(n, &mut rng)?))
}

fn funk_check(c: &FunkCheckConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let mut t = Table::new(&[
        "n", "activation", "pair", "k", "u_dot_v", "mc_mean", "std_error", "predicted", "z_score", "result",
    ]);
    let mut all_ok = true;
    let mut worst_z: f64 = 0.0;
    for n in c.n.to_vec() {
        for a in c.activation.to_vec() {
            let act = a.spec();
            let name = a.kind().to_string();
            let spec = build_spectrum(n, &act, c.k_max, SpectrumMethod::Quadrature)?;
            for p in 0..c.pairs {
                let pair_seed = derive_seed(seed, &format!("funk-check/{n}/{name}/{p}"));
                let (u, v) = random_pair(n, pair_seed)?;
                for k in 0..=c.k_max {
                    let chk = out.time(&format!("n={n} {name} pair={p} k={k}"), || {
                        funk_hecke_check(k, &act, spec.entries[k].lambda, u.coords(), v.coords(), c.samples, derive_index(pair_seed, k as u64))
                    })?;
                    let ok = chk.within(c.sigmas);
                    all_ok &= ok;
                    worst_z = worst_z.max(chk.z_score().abs());
                    t.row(vec![
                        s(n),
                        name.clone(),
                        s(p),
                        s(k),
                        s(u.dot(&v)?),
                        s(chk.mc_mean),
                        s(chk.std_error),
                        s(chk.predicted),
                        s(chk.z_score()),
                        pass(ok),
                    ]);
                }
            }
        }
    }
    t.row(vec!["all".into(), "all".into(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), s(worst_z), pass(all_ok)]);
    out.note("result", pass(all_ok));
    out.note("max_abs_z", worst_z);
    if !all_ok {
        out.flags.push(format!("some Funk–Hecke deviations exceed {} standard errors", c.sigmas));
    }
    out.table("funk_check.csv", t)
}

fn build_target(c: &TrainConfig, seed: u64) -> Result<Target, CliError> {
    Ok(match &c.target {
        TargetConfig::Zonal { terms } => {
            let mut zt = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                let pole = match (&t.basis, &t.pole) {
                    (Some(b), _) => UnitVector::basis(c.n, *b)?,
                    (None, Some(p)) => UnitVector::normalized(p.clone())?,
                    (None, None) => UnitVector::random(c.n, &mut chunk_rng(derive_seed(seed, "target-pole"), i as u64))?,
                };
                zt.push(ZonalTerm { coef: t.coef, degree: t.degree, pole });
            }
            Target::Zonal(ZonalSum::new(c.n, zt)?)
        }
        TargetConfig::Teacher { units, a, b } => Target::Teacher(make_teacher(c.n, *units, *a, *b, derive_seed(seed, "teacher"))?),
    })
}

/// Assembles a training run; X, W, and the probe set use independent seeds.
fn build_run(c: &TrainConfig, seed: u64) -> Result<TrainingRun, CliError> {
    let act = c.activation.spec();
    let target = build_target(c, seed)?;
    let state = init_network(c.n, c.m, act.clone(), derive_seed(seed, "hidden"))?;
    let data = sample_uniform_sphere(c.n, c.data, derive_seed(seed, "data"))?;
    let tracker = if c.degrees.is_empty() {
        None
    } else {
        let k_max = *c.degrees.iter().max().expect("non-empty");
        Some(TrackerSpec {
            degrees: c.degrees.clone(),
            probe: sample_uniform_sphere(c.n, c.probe, derive_seed(seed, "probe"))?,
            quad: None,
            spectrum: build_spectrum(c.n, &act, k_max, SpectrumMethod::Quadrature)?,
            population: c.population,
        })
    };
    Ok(TrainingRun::new(target, state, data, tracker, RunOptions { kernel_cache_limit: c.kernel_cache_limit })?)
}

fn history_table(run: &TrainingRun, chart: bool) -> Table {
    let degrees = run.tracked_degrees().to_vec();
    let mut headers = vec!["iteration".to_string(), "empirical_loss".to_string()];
    headers.extend(degrees.iter().map(|k| format!("energy_deg_{k}")));
    headers.extend(["alpha_i".to_string(), "beta_i".to_string()]);
    let mut t = Table::new(&headers);
    for r in run.history() {
        let mut row = vec![s(r.iteration), s(r.empirical_loss)];
        row.extend(r.energies.iter().map(s));
        row.extend([s(r.alpha), s(r.beta)]);
        t.row(row);
    }
    if chart {
        let cols: Vec<String> = headers[1..headers.len() - 2].to_vec();
        t = t.chart("Residual energies", "iteration", &cols, true);
    }
    t
}

fn train_and_record(c: &TrainConfig, run: &mut TrainingRun, out: &mut Outputs) -> Result<(), CliError> {
    let outcome = out.time("train", || train(run, c.iterations, c.floor))?;
    let hist = run.history();
    out.note("status", outcome.status);
    out.note("iterations", outcome.iterations);
    out.note("initial_loss", hist.first().map(|r| r.empirical_loss));
    out.note("final_loss", hist.last().map(|r| r.empirical_loss));
    out.note("target_l2_estimate", run.target_l2());
    out.note("target_sup_estimate", run.target_sup());
    out.note("kernel_cached", run.kernel_cached());
    out.note("tracked_lambdas", run.tracked_lambdas());
    if c.population {
        let mut p = Table::new(&["iteration", "population_loss", "std_error"]);
        for r in hist {
            if let Some((l, e)) = r.population_loss {
                p.row(vec![s(r.iteration), s(l), s(e)]);
            }
        }
        out.table("population.csv", p)?;
    }
    out.table("history.csv", history_table(run, c.chart))
}

fn bias(c: &BiasConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let mut rc = c.run.clone();
    for d in [c.k, c.l] {
        if !rc.degrees.contains(&d) {
            rc.degrees.push(d);
        }
    }
    rc.degrees.sort_unstable();
    let mut run = out.time("setup", || build_run(&rc, seed))?;
    train_and_record(&rc, &mut run, out)?;
    let report = spectral_bias(&run, c.k, c.l, c.energy_floor)?;
    let mut t = Table::new(&["iteration", "rate", "predicted_rate", "valid_flag"]);
    for r in &report.rows {
        let flag = match r.omitted {
            None => "valid".to_string(),
            Some(reason) => serde_json::to_value(reason).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        };
        t.row(vec![s(r.iteration), opt(r.rate), s(report.predicted_rate), flag]);
    }
    let median_rate = report.median_rate();
    out.note("predicted_rate", report.predicted_rate);
    out.note("median_rate", median_rate);
    out.note("valid_iterations", report.valid_rates().len());
    out.note("median_over_predicted", median_rate.map(|m| m / report.predicted_rate));
    let t = if rc.chart {
        t.chart("Relative progress rate", "iteration", &["rate".into(), "predicted_rate".into()], true)
    } else {
        t
    };
    out.table("bias.csv", t)
}

fn realizable(c: &RealizableConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let mut t = Table::new(&["trial", "initial_loss", "final_loss", "loss_ratio", "first_below", "reached"]);
    let mut ratios = Vec::new();
    for &trial in &c.trials {
        let trial_seed = derive_index(derive_seed(seed, "realizable"), trial);
        let tc = TrainConfig {
            n: c.n,
            m: c.m,
            data: c.data,
            activation: Activation::Sigmoid,
            target: TargetConfig::Teacher { units: c.units, a: c.a, b: c.b },
            iterations: c.iterations,
            floor: 0.0,
            degrees: Vec::new(),
            probe: 1,
            population: false,
            kernel_cache_limit: c.kernel_cache_limit,
            chart: false,
            audit: None,
        };
        let mut run = build_run(&tc, trial_seed)?;
        out.time(&format!("trial {trial}"), || train(&mut run, c.iterations, 0.0))?;
        let hist = run.history();
        let initial = hist[0].empirical_loss;
        let last = hist.last().expect("history is never empty").empirical_loss;
        let first_below = hist.iter().find(|r| r.empirical_loss < c.loss_ratio * initial).map(|r| r.iteration);
        ratios.push(last / initial);
        t.row(vec![s(trial), s(initial), s(last), s(last / initial), opt(first_below), s(first_below.is_some())]);
        let h = history_table(&run, trial == c.trials[0]);
        out.table(&format!("history_trial_{trial}.csv"), h)?;
    }
    let med = median(&ratios).expect("at least one trial");
    out.note("median_loss_ratio", med);
    out.note("target_loss_ratio", c.loss_ratio);
    out.note("result", pass(med < c.loss_ratio));
    if med >= c.loss_ratio {
        out.flags.push(format!("median final/initial loss {med} is not below {}", c.loss_ratio));
    }
    out.table("realizable.csv", t)
}

fn family_table(f: &HardFamily) -> Table {
    let mut headers = vec!["index".to_string()];
    headers.extend((0..f.dim()).map(|i| format!("x{i}")));
    let mut t = Table::new(&headers);
    for (i, u) in f.directions().iter().enumerate() {
        let mut row = vec![s(i)];
        row.extend(u.coords().iter().map(s));
        t.row(row);
    }
    t
}

fn sq_family(c: &SqFamilyConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let fam = out.time("generate", || generate_hard_family(c.n, c.k, c.d, derive_seed(seed, "family"), c.max_tries))?;
    out.note("max_coherence", fam.max_coherence());
    out.note("coherence_target", fam.coherence_target());
    out.note("coherence_target_met", fam.coherence_target_met());
    out.note("tries", fam.tries());
    out.table("family.csv", family_table(&fam))?;

    // Correlations ρ(f_u, f_v) = P_{n,k}(u·v) and norms, by Monte Carlo.
    let mut rng = chunk_rng(derive_seed(seed, "pairs"), 0);
    let mut pairs = Vec::new();
    for _ in 0..c.pairs {
        let i = rng.random_range(0..fam.len());
        let mut j = rng.random_range(0..fam.len() - 1);
        if j >= i {
            j += 1;
        }
        pairs.push((i, i));
        pairs.push((i, j));
    }
    let mut t = Table::new(&["i", "j", "u_dot_v", "predicted", "mc_mean", "std_error", "z_score", "within"]);
    let mut all_within = true;
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let n = fam.dim();
        let acc = out.time(&format!("pair {p}"), || {
            par_sample_sum(derive_index(derive_seed(seed, "pair-mc"), p as u64), c.samples, 2, |rng, count, acc| {
                let mut x = vec![0.0; n];
                for _ in 0..count {
                    fill_uniform(rng, &mut x);
                    let v = fam.eval(i, &x) * fam.eval(j, &x);
                    acc[0] += v;
                    acc[1] += v * v;
                }
            })
        });
        let m = c.samples as f64;
        let mean = acc[0] / m;
        let se = ((acc[1] / m - mean * mean).max(0.0) / (m - 1.0)).sqrt();
        let predicted = fam.correlation(i, j);
        let z = (mean - predicted) / se;
        let ok = (mean - predicted).abs() <= 3.0 * se;
        all_within &= ok;
        let dot = fam.directions()[i].dot(&fam.directions()[j])?;
        t.row(vec![s(i), s(j), s(dot), s(predicted), s(mean), s(se), s(z), s(ok)]);
    }
    out.note("correlations_within_3se", all_within);
    if !all_within {
        out.flags.push("a Monte-Carlo correlation is more than 3 standard errors from P_{n,k}(u·v)".into());
    }
    out.table("family_checks.csv", t)?;

    let mut b = Table::new(&["n", "k", "t", "abs_legendre", "bound", "holds"]);
    let mut rng = chunk_rng(derive_seed(seed, "bound-triples"), 0);
    let mut bound_ok = true;
    for _ in 0..c.bound_triples {
        let n = rng.random_range(3..=200usize);
        let k = rng.random_range(0..=16usize);
        let t: f64 = rng.random_range(-1.0..=1.0);
        let lhs = legendre(n, k, t).abs();
        let rhs = correlation_bound(n, k, t);
        let holds = lhs <= rhs * (1.0 + 1e-12) + 1e-15;
        bound_ok &= holds;
        b.row(vec![s(n), s(k), s(t), s(lhs), s(rhs), s(holds)]);
    }
    out.note("correlation_bound_holds", bound_ok);
    if !bound_ok {
        out.flags.push("the recurrence-based correlation bound failed on a triple".into());
    }
    out.table("bound_checks.csv", b)?;

    if let Some(cov) = &c.covariance {
        let mut t = Table::new(&[
            "i", "j", "u_dot_v", "width", "mu0", "mu0_std_error", "mu_y_min", "mu_y_max", "covariance", "std_error", "bound", "within", "flag",
        ]);
        let mut rng = chunk_rng(derive_seed(seed, "covariance-pairs"), 0);
        for p in 0..cov.pairs {
            let i = rng.random_range(0..fam.len());
            let mut j = rng.random_range(0..fam.len() - 1);
            if j >= i {
                j += 1;
            }
            for (w, &eps) in cov.widths.iter().enumerate() {
                let chi = SoftIndicator::new(cov.y, eps)?;
                let r = out.time(&format!("covariance {p} width {w}"), || {
                    covariance_check(&fam, i, j, chi, cov.ell, cov.calibration, cov.samples, derive_index(derive_seed(seed, "covariance"), (p * 1000 + w) as u64))
                })?;
                let flag = serde_json::to_value(r.flag)?.as_str().unwrap_or_default().to_string();
                t.row(vec![
                    s(i), s(j), s(r.inner), s(eps), s(r.mu0), s(r.mu0_std_error), s(r.mu_y.0), s(r.mu_y.1), s(r.covariance), s(r.std_error), s(r.bound), s(r.within), flag,
                ]);
            }
        }
        out.table("covariance.csv", t)?;
    }

    if let Some(sm) = &c.smoothing {
        let grid: Vec<f64> = (0..=sm.grid_steps).map(|i| sm.grid_min + (sm.grid_max - sm.grid_min) * i as f64 / sm.grid_steps as f64).collect();
        let mut t = Table::new(&["sigma", "estimate", "std_error", "at", "bound", "within"]);
        for (i, &sigma) in sm.sigmas.iter().enumerate() {
            let r = out.time(&format!("smoothing sigma={sigma}"), || {
                noise_smoothing_check(|y| y > 0.0, sigma, &grid, sm.samples, derive_index(derive_seed(seed, "smoothing"), i as u64))
            })?;
            if !r.within {
                out.flags.push(format!("smoothed slope {} exceeds 1/(2σ) = {} at σ = {sigma}", r.estimate, r.bound));
            }
            t.row(vec![s(sigma), s(r.estimate), s(r.std_error), s(r.at), s(r.bound), s(r.within)]);
        }
        out.table("smoothing.csv", t)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TranscriptLine<'a> {
    d: usize,
    trial: usize,
    #[serde(flatten)]
    record: &'a TranscriptRecord,
}

fn sq_run(c: &SqRunConfig, seed: u64, audit: bool, out: &mut Outputs) -> Result<(), CliError> {
    let mut t = Table::new(&[
        "d", "trial", "secret", "identified", "best_guess", "queries_used", "correct", "audited", "audit_failures",
    ]);
    let mut transcript = Vec::new();
    let mut medians = Vec::new();
    let mut audit_failures = 0usize;
    let mut audited_total = 0usize;
    for d in c.d.to_vec() {
        let fam = generate_hard_family(c.n, c.k, d, derive_seed(seed, &format!("sq-run/family/{d}")), c.max_tries)?;
        let mut used = Vec::new();
        for trial in 0..c.trials {
            let lc = LearnerConfig {
                budget: c.budget.unwrap_or(usize::MAX),
                seed: derive_index(derive_seed(seed, &format!("sq-run/trial/{d}")), trial as u64),
                policy: c.policy.core(),
                family_reference: c.reference == ReferenceKind::Family,
                audit: c.audit || audit,
                bits_per_candidate: c.bits_per_candidate,
            };
            let o = out.time(&format!("d={d} trial={trial}"), || correlation_scan_learner(&fam, c.oracle.core(), &lc))?;
            let audited = o.transcript.iter().filter(|r| r.within_tolerance.is_some()).count();
            let failures = o.transcript.iter().filter(|r| r.within_tolerance == Some(false)).count();
            audited_total += audited;
            audit_failures += failures;
            used.push(o.queries_used as f64);
            t.row(vec![
                s(d),
                s(trial),
                opt(o.secret),
                opt(o.identified),
                opt(o.best_guess),
                s(o.queries_used),
                opt(o.correct()),
                s(audited),
                s(failures),
            ]);
            for r in &o.transcript {
                transcript.extend(serde_json::to_vec(&TranscriptLine { d, trial, record: r })?);
                transcript.push(b'\n');
            }
        }
        medians.push((d, median(&used).expect("trials > 0")));
    }
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1].1 / w[0].1).collect();
    out.note("median_queries", medians.iter().map(|(d, m)| json!({"d": d, "median": m})).collect::<Vec<_>>());
    out.note("median_ratios", ratios);
    out.note("audited_responses", audited_total);
    out.note("audit_failures", audit_failures);
    if audit_failures > 0 {
        out.flags.push(format!("{audit_failures} audited responses violated their tolerance"));
    }
    out.files.push(("transcript.jsonl".into(), transcript));
    out.table("sq_run.csv", t)
}

fn sda(c: &SdaConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let mut t = Table::new(&["family", "size", "n", "k", "gamma", "convention", "sda", "lower_bound", "upper_bound"]);
    let mut rng = chunk_rng(derive_seed(seed, "sda"), 0);
    let mut bounds_ok = true;
    for f in 0..c.families {
        let size = rng.random_range(c.min_size..=c.max_size);
        let k = c.degrees[rng.random_range(0..c.degrees.len())];
        let dirs = (0..size).map(|_| UnitVector::random(c.n, &mut rng)).collect::<Result<Vec<_>, _>>()?;
        let fam = HardFamily::from_directions(k, dirs)?;
        let rho = fam.correlation_matrix();
        for &g in &c.gammas {
            for conv in &c.conventions {
                let exact = out.time(&format!("family {f}"), || sda_bruteforce(&fam, g, conv.core()))?;
                let b = sda_bounds(&rho, g, conv.core())?;
                bounds_ok &= b.lower <= exact && exact <= b.upper;
                t.row(vec![s(f), s(size), s(c.n), s(k), s(g), conv.name().into(), s(exact), s(b.lower), s(b.upper)]);
            }
        }
    }
    out.note("bounds_bracket_exact", bounds_ok);
    if !bounds_ok {
        out.flags.push("an SDA bound failed to bracket the exact value".into());
    }
    out.table("sda.csv", t)
}
