//! Simulation designs, ground truths and a seeded experiment runner.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bands::{simultaneous_band, DEFAULT_BAND_SAMPLES};
use crate::error::{invalid, GpError, Result};
use crate::gp::{Dataset, DerivPosterior, FittedGp, NoiseModel};
use crate::hyperparam::{
    default_lambda_grid, optimize_evidence, sample_posterior_hyper_with, EvidenceProfile,
    HyperPriors, HyperSample, MhConfig,
};
use crate::kernels::{default_nu_grid, Kernel, KernelConfig};
use crate::model_select::{score_candidate, select_nu, LambdaPolicy};
use crate::scalar::linspace;
use crate::spectral::{fourier_basis_deriv, make_poly_kernel};
use crate::spline::{default_knot_grid, select_knots_on, BsplineModel, Domain};

/// Terms kept in the Holder-series truth.
pub const HOLDER_TERMS: usize = 1000;
/// Terms kept in the periodic Fourier truth.
pub const PERIODIC_TERMS: usize = 1000;
/// Evaluation grid length for RMSE.
pub const EVAL_GRID_LEN: usize = 100;

/// `f_0(x) = sqrt(2) sum_i i^-4 sin(i) cos((i - 1/2) pi x)` and its derivative.
pub fn truth_holder(x: f64, k: usize) -> f64 {
    truth_holder_terms(x, k, HOLDER_TERMS)
}

pub fn truth_holder_terms(x: f64, k: usize, terms: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let s: f64 = (1..=terms)
        .map(|i| {
            let fi = i as f64;
            let c = fi.powi(-4) * fi.sin();
            let w = (fi - 0.5) * pi;
            match k {
                0 => c * (w * x).cos(),
                1 => -c * w * (w * x).sin(),
                _ => panic!("truth_holder supports k = 0 or 1"),
            }
        })
        .sum();
    2f64.sqrt() * s
}

/// `x sin(x) / 10` and its derivative.
pub fn truth_xsinx(x: f64, k: usize) -> f64 {
    match k {
        0 => x * x.sin() / 10.0,
        1 => (x.sin() + x * x.cos()) / 10.0,
        _ => panic!("truth_xsinx supports k = 0 or 1"),
    }
}

/// Periodic truth `sum_i i^-3 sin(i) psi_i(x)` in the Fourier basis of the
/// spectral kernels.
pub fn truth_periodic(x: f64, k: usize) -> f64 {
    (1..=PERIODIC_TERMS)
        .map(|i| {
            let fi = i as f64;
            fi.powi(-3) * fi.sin() * fourier_basis_deriv(i, k, x)
        })
        .sum()
}

pub fn rmse(estimate: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(
        estimate.len(),
        truth.len(),
        "rmse needs equal-length vectors"
    );
    let ss: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    (ss / estimate.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// Uniform covariates on `[0, 1]`, Holder-series truth.
    HolderSeries,
    /// Regular grid on `[0, 10]`, `x sin(x) / 10`.
    XSinX,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::HolderSeries => "holder",
            Design::XSinX => "xsinx",
        }
    }

    pub fn domain(self) -> (f64, f64) {
        match self {
            Design::HolderSeries => (0.0, 1.0),
            Design::XSinX => (0.0, 10.0),
        }
    }

    pub fn truth(self, x: f64, k: usize) -> f64 {
        match self {
            Design::HolderSeries => truth_holder(x, k),
            Design::XSinX => truth_xsinx(x, k),
        }
    }

    /// `t / 99` on the unit interval, 100 equally spaced points on `[0, 10]`.
    pub fn eval_grid(self) -> Vec<f64> {
        let (a, b) = self.domain();
        linspace(a, b, EVAL_GRID_LEN)
    }

    /// Noise sd used when none is given: variance 0.1 for the Holder design.
    pub fn default_noise_sd(self) -> f64 {
        match self {
            Design::HolderSeries => 0.1f64.sqrt(),
            Design::XSinX => 0.1,
        }
    }
}

impl FromStr for Design {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holder" => Ok(Design::HolderSeries),
            "xsinx" => Ok(Design::XSinX),
            other => Err(invalid(format!(
                "unknown design '{other}', expected holder or xsinx"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Matérn with `nu` chosen by leave-one-out.
    Matern,
    Se,
    Sobolev,
    /// Leave-one-out choice among the three kernels.
    Cv,
    Bspline,
    /// Fully Bayesian variants: posterior mean averaged over an MH chain.
    MaternFb,
    SeFb,
    SobolevFb,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Matern,
        Method::Se,
        Method::Sobolev,
        Method::Cv,
        Method::Bspline,
        Method::MaternFb,
        Method::SeFb,
        Method::SobolevFb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Matern => "matern",
            Method::Se => "se",
            Method::Sobolev => "sobolev",
            Method::Cv => "cv",
            Method::Bspline => "bspline",
            Method::MaternFb => "matern-fb",
            Method::SeFb => "se-fb",
            Method::SobolevFb => "sobolev-fb",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown method '{s}', valid methods: {}",
                    Method::valid_names()
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    F,
    FPrime,
}

impl Target {
    pub fn order(self) -> usize {
        match self {
            Target::F => 0,
            Target::FPrime => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::F => "f",
            Target::FPrime => "df",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub design: Design,
    pub n: usize,
    pub noise_sd: f64,
    pub n_reps: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Chain settings for the fully Bayesian methods (its seed is replaced
    /// per repetition).
    pub mh: MhConfig,
}

impl ExperimentConfig {
    pub fn new(design: Design, n: usize, n_reps: usize, methods: Vec<Method>, seed: u64) -> Self {
        ExperimentConfig {
            design,
            n,
            noise_sd: design.default_noise_sd(),
            n_reps,
            methods,
            seed,
            mh: MhConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(invalid(format!("need n >= 10, got {}", self.n)));
        }
        if self.n_reps < 1 {
            return Err(invalid("need at least one repetition"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(invalid(format!(
                "noise sd must be nonnegative, got {}",
                self.noise_sd
            )));
        }
        if self.methods.is_empty() {
            return Err(invalid("no methods requested"));
        }
        Ok(())
    }
}

fn rep_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Data for repetition `rep`, a pure function of `(config.seed, rep)`.
pub fn gen_data(config: &ExperimentConfig, rep: usize) -> Result<Dataset<f64>> {
    let mut rng = rep_rng(config.seed, rep as u64);
    let n = config.n;
    let x: Vec<f64> = match config.design {
        Design::HolderSeries => (0..n).map(|_| rng.random::<f64>()).collect(),
        Design::XSinX => linspace(0.0, 10.0, n),
    };
    let y = x
        .iter()
        .map(|&xi| {
            let z: f64 = rng.sample(StandardNormal);
            config.design.truth(xi, 0) + config.noise_sd * z
        })
        .collect();
    Dataset::new(x, y)
}

/// A fitted estimator from one of the simulation methods.
#[derive(Debug, Clone)]
pub enum Estimate {
    Gp(Box<FittedGp<f64>>),
    Bspline(BsplineModel<f64>),
    /// Posterior mean averaged over sampled `lambda`s.
    Averaged {
        data: Dataset<f64>,
        kernel: KernelConfig<f64>,
        lambdas: Vec<f64>,
    },
}

impl Estimate {
    pub fn deriv_mean(&self, k: usize, grid: &[f64]) -> Result<DVector<f64>> {
        match self {
            Estimate::Gp(fit) => fit.posterior_mean_deriv(k, grid),
            Estimate::Bspline(m) => m.deriv_mean(k, grid),
            Estimate::Averaged {
                data,
                kernel,
                lambdas,
            } => EvidenceProfile::new(data, kernel)
                .averaged_mean_deriv(kernel, &data.x, k, grid, lambdas),
        }
    }

    /// Posterior of `f^(k)`; unavailable for the averaged estimator.
    pub fn posterior(&self, k: usize, grid: &[f64]) -> Result<DerivPosterior<f64>> {
        match self {
            Estimate::Gp(fit) => fit.posterior(k, grid),
            Estimate::Bspline(m) => m.posterior(k, grid),
            Estimate::Averaged { .. } => {
                Err(invalid("no closed-form posterior for averaged estimates"))
            }
        }
    }

    /// Kernel label, `bspline(N)` or `fb:<kernel>`.
    pub fn label(&self) -> String {
        match self {
            Estimate::Gp(fit) => fit.kernel.label(),
            Estimate::Bspline(m) => format!("bspline({})", m.interior_knots()),
            Estimate::Averaged { kernel, .. } => format!("fb:{}", kernel.label()),
        }
    }
}

fn evidence_fit(data: &Dataset<f64>, kernel: KernelConfig<f64>) -> Result<Estimate> {
    let c = optimize_evidence(data, &kernel, &default_lambda_grid())?;
    let fit = FittedGp::fit(
        data.clone(),
        kernel,
        c.lambda,
        c.sigma2,
        NoiseModel::Homoscedastic,
    )?;
    Ok(Estimate::Gp(Box::new(fit)))
}

fn fully_bayes(data: &Dataset<f64>, kernel: KernelConfig<f64>, mh: &MhConfig) -> Result<Estimate> {
    let profile = EvidenceProfile::new(data, &kernel);
    let start = profile.optimize(&default_lambda_grid())?;
    let init = HyperSample {
        sigma2: start.sigma2,
        lambda: start.lambda,
    };
    let chain = sample_posterior_hyper_with(&profile, &HyperPriors::default(), mh, init)?;
    Ok(Estimate::Averaged {
        data: data.clone(),
        kernel,
        lambdas: chain.lambdas(),
    })
}

/// Memoized per-repetition state so that methods sharing a step (the `nu`
/// search) do it once.
struct RepContext<'a> {
    data: &'a Dataset<f64>,
    design: Design,
    mh: MhConfig,
    matern: Option<KernelConfig<f64>>,
}

impl RepContext<'_> {
    fn selected_matern(&mut self) -> Result<KernelConfig<f64>> {
        if let Some(k) = &self.matern {
            return Ok(*k);
        }
        let sel = select_nu(self.data, &default_nu_grid(), &LambdaPolicy::default())?;
        self.matern = Some(sel.best.kernel);
        Ok(sel.best.kernel)
    }

    fn fit(&mut self, method: Method) -> Result<Estimate> {
        let data = self.data;
        match method {
            Method::Matern => {
                let k = self.selected_matern()?;
                evidence_fit(data, k)
            }
            Method::Se => evidence_fit(data, KernelConfig::squared_exponential()),
            Method::Sobolev => evidence_fit(data, KernelConfig::sobolev()),
            Method::Cv => {
                let policy = LambdaPolicy::default();
                let candidates = [
                    self.selected_matern()?,
                    KernelConfig::squared_exponential(),
                    KernelConfig::sobolev(),
                ];
                let mut best: Option<crate::model_select::CandidateScore<f64>> = None;
                for k in &candidates {
                    let s = score_candidate(data, k, &policy)?;
                    if best.as_ref().is_none_or(|b| s.score < b.score) {
                        best = Some(s);
                    }
                }
                let b = best.expect("three candidates");
                let fit = FittedGp::fit(
                    data.clone(),
                    b.kernel,
                    b.lambda,
                    b.sigma2,
                    NoiseModel::Homoscedastic,
                )?;
                Ok(Estimate::Gp(Box::new(fit)))
            }
            Method::Bspline => {
                let (a, b) = self.design.domain();
                let m = select_knots_on(data, &default_knot_grid(), Domain::new(a, b)?)?;
                Ok(Estimate::Bspline(m))
            }
            Method::MaternFb => {
                let k = self.selected_matern()?;
                fully_bayes(data, k, &self.mh)
            }
            Method::SeFb => fully_bayes(data, KernelConfig::squared_exponential(), &self.mh),
            Method::SobolevFb => fully_bayes(data, KernelConfig::sobolev(), &self.mh),
        }
    }
}

/// One repetition's RMSE for one method and target.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub method: Method,
    pub target: Target,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepFailure {
    pub rep: usize,
    pub method: Method,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub target: Target,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<RepRecord>,
    pub failures: Vec<RepFailure>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn row(&self, method: Method, target: Target) -> Option<&AggregateRow> {
        self.aggregate
            .iter()
            .find(|r| r.method == method && r.target == target)
    }

    pub fn rmses(&self, method: Method, target: Target) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.method == method && r.target == target)
            .map(|r| r.rmse)
            .collect()
    }

    /// `rep,method,target,rmse`, shortest round-trip formatting.
    pub fn write_per_rep_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rep", "method", "target", "rmse"])?;
        for r in &self.records {
            out.write_record([
                r.rep.to_string(),
                r.method.name().to_string(),
                r.target.name().to_string(),
                r.rmse.to_string(),
            ])?;
        }
        out.flush()
    }

    pub fn write_aggregate_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "method",
            "target",
            "mean_rmse",
            "sd_rmse",
            "median_rmse",
            "n_ok",
            "n_failed",
        ])?;
        for r in &self.aggregate {
            out.write_record([
                r.method.name().to_string(),
                r.target.name().to_string(),
                r.mean.to_string(),
                r.sd.to_string(),
                r.median.to_string(),
                r.n_ok.to_string(),
                r.n_failed.to_string(),
            ])?;
        }
        out.flush()
    }

    pub fn write_failures_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rep", "method", "error"])?;
        for f in &self.failures {
            out.write_record([
                f.rep.to_string(),
                f.method.name().to_string(),
                f.message.clone(),
            ])?;
        }
        out.flush()
    }
}

/// Mean, sample sd and median; NaN where undefined.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    (mean, sd, median(values))
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

type RepOutcome = (Vec<RepRecord>, Vec<RepFailure>);

fn run_rep(config: &ExperimentConfig, rep: usize) -> RepOutcome {
    let grid = config.design.eval_grid();
    let truths: Vec<(Target, Vec<f64>)> = [Target::F, Target::FPrime]
        .into_iter()
        .map(|t| {
            (
                t,
                grid.iter()
                    .map(|&x| config.design.truth(x, t.order()))
                    .collect(),
            )
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let data = match gen_data(config, rep) {
        Ok(d) => d,
        Err(e) => {
            for &m in &config.methods {
                failures.push(RepFailure {
                    rep,
                    method: m,
                    message: e.to_string(),
                });
            }
            return (records, failures);
        }
    };
    let mut mh = config.mh;
    mh.seed = config.seed ^ (rep as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut ctx = RepContext {
        data: &data,
        design: config.design,
        mh,
        matern: None,
    };
    for &method in &config.methods {
        let outcome = ctx.fit(method).and_then(|est| {
            truths
                .iter()
                .map(|(t, truth)| {
                    let est_vals = est.deriv_mean(t.order(), &grid)?;
                    let value = rmse(est_vals.as_slice(), truth);
                    if value.is_finite() {
                        Ok((*t, value))
                    } else {
                        Err(invalid("non-finite RMSE"))
                    }
                })
                .collect::<Result<Vec<_>>>()
        });
        match outcome {
            Ok(values) => records.extend(values.into_iter().map(|(target, value)| RepRecord {
                rep,
                method,
                target,
                rmse: value,
            })),
            Err(e) => failures.push(RepFailure {
                rep,
                method,
                message: e.to_string(),
            }),
        }
    }
    (records, failures)
}

/// Runs every repetition (in parallel) and aggregates per method and target.
/// A method that fails in a repetition is excluded from that repetition's
/// aggregates and counted in `n_failed`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let outcomes: Vec<RepOutcome> = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| run_rep(config, rep))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in outcomes {
        records.extend(r);
        failures.extend(f);
    }
    let mut aggregate = Vec::new();
    for &method in &config.methods {
        let n_failed = failures.iter().filter(|f| f.method == method).count();
        for target in [Target::F, Target::FPrime] {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.target == target)
                .map(|r| r.rmse)
                .collect();
            let (mean, sd, median) = summarize(&vals);
            aggregate.push(AggregateRow {
                method,
                target,
                mean,
                sd,
                median,
                n_ok: vals.len(),
                n_failed,
            });
        }
    }
    Ok(ExperimentResult {
        config: config.clone(),
        records,
        failures,
        aggregate,
    })
}

/// Whether the simultaneous band of `f^(k)` covers the truth on the whole
/// evaluation grid, per repetition (`None` when the fit failed).
pub fn band_coverage(
    config: &ExperimentConfig,
    method: Method,
    k: usize,
    level: f64,
    n_samples: usize,
) -> Result<Vec<Option<bool>>> {
    config.validate()?;
    if k > 1 {
        return Err(GpError::OrderExceeded {
            requested: k,
            max: 1,
        });
    }
    let grid = config.design.eval_grid();
    let truth: Vec<f64> = grid.iter().map(|&x| config.design.truth(x, k)).collect();
    Ok((0..config.n_reps)
        .into_par_iter()
        .map(|rep| {
            let data = gen_data(config, rep).ok()?;
            let mut ctx = RepContext {
                data: &data,
                design: config.design,
                mh: config.mh,
                matern: None,
            };
            let est = ctx.fit(method).ok()?;
            let post = est.posterior(k, &grid).ok()?;
            let seed = config.seed.wrapping_add(rep as u64);
            let band = simultaneous_band(&post, level, n_samples, seed).ok()?;
            Some(band.contains(&truth))
        })
        .collect())
}

/// [`band_coverage`] with the default sample count.
pub fn band_coverage_default(
    config: &ExperimentConfig,
    method: Method,
    k: usize,
    level: f64,
) -> Result<Vec<Option<bool>>> {
    band_coverage(config, method, k, level, DEFAULT_BAND_SAMPLES)
}

/// Posterior-mean accuracy of the polynomial spectral kernel as `n` grows,
/// with `lambda = (log n / n)^(2 alpha / (2 alpha + 1))` and the periodic truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionConfig {
    pub alpha: f64,
    pub ns: Vec<usize>,
    pub n_seeds: usize,
    pub seed: u64,
    pub noise_sd: f64,
    /// Mercer truncation of the fitted kernel.
    pub truncation: usize,
    pub k: usize,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        ContractionConfig {
            alpha: 2.0,
            ns: vec![100, 200, 400, 800],
            n_seeds: 10,
            seed: 0,
            noise_sd: 0.1f64.sqrt(),
            truncation: 1000,
            k: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionPoint {
    pub n: usize,
    pub lambda: f64,
    pub rmses: Vec<f64>,
    pub median: f64,
}

pub fn contraction_lambda(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    (n.ln() / n).powf(2.0 * alpha / (2.0 * alpha + 1.0))
}

pub fn contraction_study(config: &ContractionConfig) -> Result<Vec<ContractionPoint>> {
    if config.ns.is_empty() || config.n_seeds == 0 {
        return Err(invalid("need at least one sample size and one seed"));
    }
    let kernel = make_poly_kernel(config.alpha, config.truncation)?;
    kernel.check_order(config.k)?;
    let grid = linspace(0.0, 1.0, EVAL_GRID_LEN);
    let truth: Vec<f64> = grid.iter().map(|&x| truth_periodic(x, config.k)).collect();
    config
        .ns
        .iter()
        .map(|&n| {
            let lambda = contraction_lambda(n, config.alpha);
            let rmses = (0..config.n_seeds)
                .into_par_iter()
                .map(|s| {
                    let mut rng = rep_rng(config.seed, ((n as u64) << 32) | s as u64);
                    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                    let y = x
                        .iter()
                        .map(|&xi| {
                            let z: f64 = rng.sample(StandardNormal);
                            truth_periodic(xi, 0) + config.noise_sd * z
                        })
                        .collect();
                    let data = Dataset::new(x, y)?;
                    // the mean does not depend on sigma^2
                    let fit = FittedGp::fit(
                        data,
                        kernel.clone(),
                        lambda,
                        1.0,
                        NoiseModel::Homoscedastic,
                    )?;
                    let est = fit.posterior_mean_deriv(config.k, &grid)?;
                    Ok(rmse(est.as_slice(), &truth))
                })
                .collect::<Result<Vec<f64>>>()?;
            let median = median(&rmses);
            Ok(ContractionPoint {
                n,
                lambda,
                rmses,
                median,
            })
        })
        .collect()
}
