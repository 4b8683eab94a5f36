use std::fs;
use std::io::{self, Write};
use std::path::Path;

use plugin_gp::bands::{pointwise_band, simultaneous_band, CredibleBand};
use plugin_gp::hyperparam::{
    default_lambda_grid, log_marginal_with, mmle_sigma2, optimize_evidence,
    optimize_evidence_hetero,
};
use plugin_gp::kernels::default_nu_grid;
use plugin_gp::model_select::{select_kernel, select_nu, LambdaPolicy};
use plugin_gp::scalar::linspace;
use plugin_gp::sim::{run_experiment, Design, ExperimentConfig, Method};
use plugin_gp::{Dataset, FittedGp, KernelConfig, NoiseModel};

use crate::error::{CliError, CliResult};
use crate::input::read_dataset;
use crate::model::ModelFile;
use crate::{AutoOr, BandArg, Command, KernelArg};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Fit {
            input,
            kernel,
            nu,
            lambda,
            sigma2,
            hetero,
            out,
        } => fit(&input, kernel, nu, lambda, sigma2, hetero, &out),
        Command::Predict {
            model,
            k,
            grid,
            band,
            level,
            samples,
            seed,
            out,
        } => predict(&model, k, grid, band, level, samples, seed, out.as_deref()),
        Command::Select {
            input,
            kernels,
            nu_grid,
            out,
        } => select(&input, &kernels, nu_grid, out.as_deref()),
        Command::Simulate {
            design,
            n,
            sigma,
            reps,
            seed,
            methods,
            out,
        } => simulate(design, n, sigma, reps, seed, methods, &out),
    }
}

fn with_output(
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CliResult<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = io::BufWriter::new(file);
            body(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Best `lambda` on the default grid at a fixed `sigma^2`; ties go to the
/// larger `lambda`.
fn lambda_at_fixed_sigma2(
    data: &Dataset<f64>,
    kernel: &KernelConfig<f64>,
    sigma2: f64,
    noise: NoiseModel,
) -> CliResult<f64> {
    let mut best: Option<(f64, f64)> = None;
    for lambda in default_lambda_grid::<f64>() {
        let Ok(lm) = log_marginal_with(data, kernel, lambda, sigma2, noise) else {
            continue;
        };
        if lm.is_finite() && best.is_none_or(|(_, b)| lm >= b) {
            best = Some((lambda, lm));
        }
    }
    best.map(|(l, _)| l).ok_or_else(|| {
        CliError::Model(plugin_gp::GpError::AllCandidatesFailed(
            "no lambda on the grid gave a finite evidence".into(),
        ))
    })
}

fn tune(
    data: &Dataset<f64>,
    kernel: &KernelConfig<f64>,
    lambda: AutoOr,
    sigma2: AutoOr,
    noise: NoiseModel,
) -> CliResult<(f64, f64)> {
    Ok(match (noise, lambda, sigma2) {
        (_, AutoOr::Value(l), AutoOr::Value(s)) => (l, s),
        (NoiseModel::Homoscedastic, AutoOr::Auto, AutoOr::Auto) => {
            let c = optimize_evidence(data, kernel, &default_lambda_grid())?;
            (c.lambda, c.sigma2)
        }
        (NoiseModel::Homoscedastic, AutoOr::Value(l), AutoOr::Auto) => {
            (l, mmle_sigma2(data, kernel, l)?)
        }
        (NoiseModel::Heteroscedastic, AutoOr::Auto, AutoOr::Auto) => {
            let c = optimize_evidence_hetero(data, kernel, &default_lambda_grid())?;
            (c.lambda, c.sigma2)
        }
        (NoiseModel::Heteroscedastic, AutoOr::Value(l), AutoOr::Auto) => {
            let c = optimize_evidence_hetero(data, kernel, &[l])?;
            (c.lambda, c.sigma2)
        }
        (_, AutoOr::Auto, AutoOr::Value(s)) => (lambda_at_fixed_sigma2(data, kernel, s, noise)?, s),
    })
}

fn fit(
    input: &Path,
    kernel: KernelArg,
    nu: AutoOr,
    lambda: AutoOr,
    sigma2: AutoOr,
    hetero: bool,
    out: &Path,
) -> CliResult<()> {
    let data = read_dataset(input, hetero)?;
    let noise = if hetero {
        NoiseModel::Heteroscedastic
    } else {
        NoiseModel::Homoscedastic
    };
    let config = match (kernel, nu) {
        (KernelArg::Matern, AutoOr::Value(v)) => KernelConfig::matern(v)?,
        (KernelArg::Matern, AutoOr::Auto) => {
            // smoothness is chosen with the homoscedastic smoother
            let policy = match lambda {
                AutoOr::Value(l) => LambdaPolicy::Fixed {
                    lambda: l,
                    sigma2: 1.0,
                },
                AutoOr::Auto => LambdaPolicy::default(),
            };
            select_nu(&data, &default_nu_grid(), &policy)?.best.kernel
        }
        (KernelArg::Se, _) => KernelConfig::squared_exponential(),
        (KernelArg::Sobolev, _) => KernelConfig::sobolev(),
    };
    let (lambda, sigma2) = tune(&data, &config, lambda, sigma2, noise)?;
    let fitted = FittedGp::fit(data, config, lambda, sigma2, noise)?;
    ModelFile::from_fit(&fitted).save(out)?;
    eprintln!(
        "fitted {} with lambda = {lambda:e}, sigma2 = {sigma2:e} on {} points",
        fitted.kernel.label(),
        fitted.n()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn predict(
    model_path: &Path,
    k: usize,
    grid: Option<(f64, f64, usize)>,
    band: BandArg,
    level: f64,
    samples: usize,
    seed: u64,
    out: Option<&Path>,
) -> CliResult<()> {
    if band != BandArg::None && !(level > 0.0 && level < 1.0) {
        return Err(CliError::Usage(format!(
            "--level must lie in (0, 1), got {level}"
        )));
    }
    if band == BandArg::Simultaneous && samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let model = ModelFile::load(model_path)?;
    let fit = model.refit()?;
    let xs = match grid {
        Some((a, b, m)) => linspace(a, b, m),
        None => fit.data.x.clone(),
    };
    let (mean, band): (Vec<f64>, Option<CredibleBand<f64>>) = match band {
        BandArg::None => (
            fit.posterior_mean_deriv(k, &xs)?.iter().copied().collect(),
            None,
        ),
        BandArg::Pointwise => {
            let post = fit.posterior(k, &xs)?;
            let b = pointwise_band(&post, level)?;
            (post.mean.iter().copied().collect(), Some(b))
        }
        BandArg::Simultaneous => {
            let post = fit.posterior(k, &xs)?;
            let b = simultaneous_band(&post, level, samples, seed)?;
            (post.mean.iter().copied().collect(), Some(b))
        }
    };
    with_output(out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        match &band {
            None => csv.write_record(["x", "mean"]),
            Some(_) => csv.write_record(["x", "mean", "lower", "upper"]),
        }
        .map_err(csv_io)?;
        for (i, x) in xs.iter().enumerate() {
            let mut row = vec![x.to_string(), mean[i].to_string()];
            if let Some(b) = &band {
                let r = b.radius_at(i);
                row.push((mean[i] - r).to_string());
                row.push((mean[i] + r).to_string());
            }
            csv.write_record(&row).map_err(csv_io)?;
        }
        csv.flush()
    })
}

fn select(
    input: &Path,
    kernels: &[KernelArg],
    nu_grid: Option<Vec<f64>>,
    out: Option<&Path>,
) -> CliResult<()> {
    let data = read_dataset(input, false)?;
    let mut nus = nu_grid.unwrap_or_else(default_nu_grid);
    nus.sort_by(f64::total_cmp);
    let mut candidates = Vec::new();
    for kernel in kernels {
        match kernel {
            KernelArg::Matern => {
                for &nu in &nus {
                    candidates.push(KernelConfig::matern(nu)?);
                }
            }
            KernelArg::Se => candidates.push(KernelConfig::squared_exponential()),
            KernelArg::Sobolev => candidates.push(KernelConfig::sobolev()),
        }
    }
    if candidates.is_empty() {
        return Err(CliError::Usage("no candidate kernels".into()));
    }
    let selection = select_kernel(&data, &candidates, &LambdaPolicy::default())?;
    eprintln!("selected {}", selection.best.kernel.label());
    with_output(out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["kernel", "lambda", "sigma2", "loocv", "selected"])
            .map_err(csv_io)?;
        for c in &selection.candidates {
            csv.write_record([
                c.kernel.label(),
                c.lambda.to_string(),
                c.sigma2.to_string(),
                c.score.to_string(),
                (*c == selection.best).to_string(),
            ])
            .map_err(csv_io)?;
        }
        csv.flush()
    })
}

fn simulate(
    design: Design,
    n: usize,
    sigma: Option<f64>,
    reps: usize,
    seed: u64,
    methods: Vec<Method>,
    out: &Path,
) -> CliResult<()> {
    let mut config = ExperimentConfig::new(design, n, reps, methods, seed);
    if let Some(s) = sigma {
        config.noise_sd = s;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let result = run_experiment(&config)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let write = |name: &str, f: &dyn Fn(&mut fs::File) -> io::Result<()>| -> CliResult<()> {
        let path = out.join(name);
        let mut file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f(&mut file).map_err(|e| CliError::io(&path, e))
    };
    write("per_rep.csv", &|f| result.write_per_rep_csv(f))?;
    write("aggregate.csv", &|f| result.write_aggregate_csv(f))?;
    write("failures.csv", &|f| result.write_failures_csv(f))?;
    result
        .write_aggregate_csv(io::stdout().lock())
        .map_err(|e| CliError::io("<stdout>", e))
}
