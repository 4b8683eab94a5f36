mod common;

use common::{max_abs_diff, table};
use nalgebra::SymmetricEigen;
use plugin_gp::hyperparam::{
    default_lambda_grid, log_marginal, log_marginal_with, mmle_sigma2, optimize_evidence,
    EvidenceProfile,
};
use plugin_gp::scalar::linspace;
use plugin_gp::{Dataset, FittedGp, Kernel, KernelConfig, NoiseModel};
use proptest::prelude::*;
use rand::Rng;

const HOMO: NoiseModel = NoiseModel::Homoscedastic;

fn kernels() -> Vec<KernelConfig<f64>> {
    vec![
        KernelConfig::matern(2.0).unwrap(),
        KernelConfig::matern(2.5).unwrap(),
        KernelConfig::matern(4.0).unwrap(),
        KernelConfig::squared_exponential(),
        KernelConfig::sobolev(),
    ]
}

fn any_kernel() -> impl Strategy<Value = KernelConfig<f64>> {
    prop::sample::select(kernels())
}

fn dataset(seed: u64, n: usize) -> Dataset<f64> {
    let mut rng = common::rng(seed);
    let (x, y) = common::noisy_sine(&mut rng, n);
    Dataset::new(x, y).unwrap()
}

#[test]
fn one_point_example() {
    let data = Dataset::new(vec![0.0f64], vec![1.0]).unwrap();
    let fit = FittedGp::fit(data, KernelConfig::squared_exponential(), 1.0, 0.7, HOMO).unwrap();
    assert!((fit.alpha()[0] - 0.5).abs() < 1e-15);
    assert!((fit.posterior_mean_deriv(0, &[0.0]).unwrap()[0] - 0.5).abs() < 1e-15);
    assert!((fit.posterior_cov_deriv(0, &[0.0]).unwrap()[(0, 0)] - 0.35).abs() < 1e-15);
}

#[test]
fn zero_response_gives_zero_mean() {
    let data = Dataset::new(vec![0.1, 0.5, 0.9], vec![0.0; 3]).unwrap();
    for kernel in kernels() {
        let fit = FittedGp::fit(data.clone(), kernel, 0.01, 1.0, HOMO).unwrap();
        assert!(fit.alpha().iter().all(|&a| a == 0.0));
        assert!(fit
            .posterior_mean_deriv(1, &linspace(0.0, 1.0, 7))
            .unwrap()
            .iter()
            .all(|&m| m == 0.0));
    }
}

#[test]
fn weights_match_dense_solve() {
    for (seed, kernel) in kernels().into_iter().enumerate() {
        let data = dataset(seed as u64, 5);
        let lambda = 0.01;
        let fit = FittedGp::fit(data.clone(), kernel, lambda, 1.0, HOMO).unwrap();
        let a = table(5, 5, |i, j| {
            kernel.eval(data.x[i], data.x[j]) + if i == j { 5.0 * lambda } else { 0.0 }
        });
        let oracle = common::solve_vec(&a, &data.y);
        assert!(max_abs_diff(fit.alpha().as_slice(), &oracle) <= 1e-10);
        // residual bound from the fitted weights
        let resid: Vec<f64> = common::matvec(&a, fit.alpha().as_slice());
        let norm = data.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(max_abs_diff(&resid, &data.y) <= 1e-8 * norm);
    }
}

#[test]
fn interpolation_limit() {
    let x = linspace(0.0f64, 1.0, 5);
    let y: Vec<f64> = x.iter().map(|&v| (3.0 * v).cos()).collect();
    let data = Dataset::new(x.clone(), y.clone()).unwrap();
    for kernel in kernels() {
        let sigma2 = 0.3;
        let fit = FittedGp::fit(data.clone(), kernel, 1e-8, sigma2, HOMO).unwrap();
        let mean = fit.posterior_mean_deriv(0, &x).unwrap();
        assert!(max_abs_diff(mean.as_slice(), &y) <= 1e-4, "{kernel:?}");
        // the bracket K - K A^{-1} K vanishes; the scaled covariance is sigma^2 K A^{-1}
        let cov = fit.posterior_cov_deriv(0, &x).unwrap();
        let bracket = &cov / fit.prior_scale();
        assert!(
            bracket.diagonal().iter().all(|&v| v.abs() <= 1e-4),
            "{kernel:?}"
        );
        let gram = kernel.gram(&x);
        let hat = &gram * fit.solve(&nalgebra::DVector::from_column_slice(&y));
        assert!(max_abs_diff(hat.as_slice(), mean.as_slice()) <= 1e-12);
        for i in 0..5 {
            let mut e = nalgebra::DVector::zeros(5);
            e[i] = 1.0;
            let h_ii = (&gram * fit.solve(&e))[i];
            assert!(
                (cov[(i, i)] - sigma2 * h_ii).abs() <= 1e-6 * sigma2,
                "{kernel:?}"
            );
        }
    }
}

#[test]
fn derivative_of_mean_matches_finite_differences() {
    let h = 1e-4;
    for kernel in kernels() {
        let fit = FittedGp::fit(dataset(3, 30), kernel, 1e-3, 1.0, HOMO).unwrap();
        let grid = linspace(0.05, 0.95, 19);
        for k in 1..=kernel.max_deriv_order().min(3) {
            let exact = fit.posterior_mean_deriv(k, &grid).unwrap();
            let up: Vec<f64> = grid.iter().map(|g| g + h).collect();
            let down: Vec<f64> = grid.iter().map(|g| g - h).collect();
            let hi = fit.posterior_mean_deriv(k - 1, &up).unwrap();
            let lo = fit.posterior_mean_deriv(k - 1, &down).unwrap();
            let scale = exact.amax().max(1.0);
            for i in 0..grid.len() {
                let fd = (hi[i] - lo[i]) / (2.0 * h);
                assert!(
                    (fd - exact[i]).abs() <= 1e-3 * scale,
                    "{kernel:?} k={k}: {fd} vs {}",
                    exact[i]
                );
            }
        }
    }
}

#[test]
fn data_scale_equivariance() {
    let data = dataset(8, 12);
    for kernel in kernels() {
        let grid = linspace(0.0, 1.0, 9);
        let base = FittedGp::fit(data.clone(), kernel, 0.01, 1.0, HOMO).unwrap();
        let scaled = FittedGp::fit(data.scaled(8.0), kernel, 0.01, 1.0, HOMO).unwrap();
        for k in 0..=kernel.max_deriv_order().min(2) {
            let a = base.posterior_mean_deriv(k, &grid).unwrap() * 8.0;
            let b = scaled.posterior_mean_deriv(k, &grid).unwrap();
            assert_eq!(a, b);
        }
        let c = -2.7;
        let a = base.posterior_mean_deriv(0, &grid).unwrap() * c;
        let b = FittedGp::fit(data.scaled(c), kernel, 0.01, 1.0, HOMO)
            .unwrap()
            .posterior_mean_deriv(0, &grid)
            .unwrap();
        assert!((&a - &b).amax() <= 1e-12 * b.amax());
    }
}

#[test]
fn heteroscedastic_matches_dense_solve() {
    let mut data = dataset(21, 15);
    let mut rng = common::rng(2);
    let sd: Vec<f64> = (0..15).map(|_| 0.05 + 0.3 * rng.random::<f64>()).collect();
    data.obs_sd = Some(sd.clone());
    let kernel = KernelConfig::matern(2.5).unwrap();
    let (lambda, sigma2) = (0.02, 0.04);
    let fit = FittedGp::fit(
        data.clone(),
        kernel,
        lambda,
        sigma2,
        NoiseModel::Heteroscedastic,
    )
    .unwrap();
    // prior s K, noise diag(sd^2 + sigma^2)
    let s = sigma2 / (15.0 * lambda);
    let cov_y = table(15, 15, |i, j| {
        s * kernel.eval(data.x[i], data.x[j]) + if i == j { sd[i] * sd[i] + sigma2 } else { 0.0 }
    });
    let w = common::solve_vec(&cov_y, &data.y);
    let grid = linspace(0.0, 1.0, 11);
    for k in 0..=2 {
        let oracle: Vec<f64> = grid
            .iter()
            .map(|&g| {
                (0..15)
                    .map(|i| s * kernel.eval_deriv(k, 0, g, data.x[i]).unwrap() * w[i])
                    .sum()
            })
            .collect();
        let mean = fit.posterior_mean_deriv(k, &grid).unwrap();
        assert!(max_abs_diff(mean.as_slice(), &oracle) <= 1e-10 * (1.0 + mean.amax()));
    }
}

#[test]
fn heteroscedastic_with_zero_sds_reduces_to_homoscedastic() {
    let data = dataset(4, 20);
    let zero = Dataset::with_obs_sd(data.x.clone(), data.y.clone(), vec![0.0; 20]).unwrap();
    let grid = linspace(0.0, 1.0, 25);
    for kernel in kernels() {
        let homo = FittedGp::fit(data.clone(), kernel, 0.003, 0.2, HOMO).unwrap();
        let het = FittedGp::fit(
            zero.clone(),
            kernel,
            0.003,
            0.2,
            NoiseModel::Heteroscedastic,
        )
        .unwrap();
        for k in 0..=kernel.max_deriv_order().min(2) {
            let a = homo.posterior(k, &grid).unwrap();
            let b = het.posterior(k, &grid).unwrap();
            assert!((a.mean - b.mean).amax() <= 1e-10);
            assert!((a.cov - b.cov).amax() <= 1e-10);
        }
        let lm_a = log_marginal(&data, &kernel, 0.003, 0.2).unwrap();
        let lm_b =
            log_marginal_with(&zero, &kernel, 0.003, 0.2, NoiseModel::Heteroscedastic).unwrap();
        assert!((lm_a - lm_b).abs() <= 1e-10 * lm_a.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn posterior_matches_textbook_oracle(
        kernel in any_kernel(),
        seed in 0u64..1000,
        n in 1usize..=20,
        log_lambda in -3.0f64..0.0,
        sigma2 in 0.01f64..2.0,
        k in 0usize..3,
    ) {
        prop_assume!(k <= kernel.max_deriv_order());
        let data = dataset(seed, n);
        let lambda = 10f64.powf(log_lambda);
        let fit = FittedGp::fit(data.clone(), kernel, lambda, sigma2, HOMO).unwrap();
        let grid = linspace(-0.1, 1.1, 13);
        let (mean, cov) = common::textbook_posterior(&kernel, &data, lambda, sigma2, k, &grid);
        let post = fit.posterior(k, &grid).unwrap();
        prop_assert!(max_abs_diff(post.mean.as_slice(), &mean) <= 1e-10 * post.mean.amax().max(1.0));
        for i in 0..grid.len() {
            prop_assert!(max_abs_diff(post.cov.row(i).transpose().as_slice(), &cov[i]) <= 1e-10 * post.cov.amax().max(1.0));
        }
    }

    #[test]
    fn covariance_properties(kernel in any_kernel(), seed in 0u64..1000, n in 2usize..30, k in 0usize..3) {
        prop_assume!(k <= kernel.max_deriv_order());
        let fit = FittedGp::fit(dataset(seed, n), kernel, 1e-4, 0.5, HOMO).unwrap();
        let grid = linspace(0.0, 1.0, 21);
        let cov = fit.posterior_cov_deriv(k, &grid).unwrap();
        prop_assert_eq!(&cov, &cov.transpose());
        let prior = kernel.deriv_gram(k, &grid).unwrap() * fit.prior_scale();
        let max_prior = prior.diagonal().max();
        for i in 0..grid.len() {
            prop_assert!(cov[(i, i)] >= -1e-8 * max_prior);
            prop_assert!(cov[(i, i)] <= prior[(i, i)] + 1e-10);
        }
        let mut jittered = cov.clone();
        let bump = 1e-10 * cov.diagonal().max().max(1e-300);
        for i in 0..grid.len() {
            jittered[(i, i)] += bump;
        }
        // symmetric eigenvalues within roundoff of the jitter
        prop_assert!(SymmetricEigen::new(jittered).eigenvalues.min() >= -1e-8 * max_prior);
    }

    #[test]
    fn log_marginal_permutation_invariant(kernel in any_kernel(), seed in 0u64..1000, n in 2usize..15) {
        let data = dataset(seed, n);
        let rev = Dataset::new(data.x.iter().rev().copied().collect(), data.y.iter().rev().copied().collect()).unwrap();
        let a = log_marginal(&data, &kernel, 0.01, 0.3).unwrap();
        let b = log_marginal(&rev, &kernel, 0.01, 0.3).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn evidence_is_grid_order_invariant(kernel in any_kernel(), seed in 0u64..1000, grid in Just(default_lambda_grid::<f64>()).prop_shuffle()) {
        let data = dataset(seed, 25);
        let sorted = optimize_evidence(&data, &kernel, &default_lambda_grid()).unwrap();
        let shuffled = optimize_evidence(&data, &kernel, &grid).unwrap();
        prop_assert_eq!(sorted, shuffled);
    }
}

#[test]
fn mmle_worked_values() {
    let se = KernelConfig::<f64>::squared_exponential();
    let zero = Dataset::new(vec![0.2, 0.4], vec![0.0, 0.0]).unwrap();
    assert_eq!(mmle_sigma2(&zero, &se, 0.1).unwrap(), 0.0);
    let one = Dataset::new(vec![0.0], vec![1.0]).unwrap();
    assert!((mmle_sigma2(&one, &se, 1.0).unwrap() - 0.5).abs() < 1e-15);
    let data = dataset(9, 17);
    for kernel in kernels() {
        let base = mmle_sigma2(&data, &kernel, 0.05).unwrap();
        assert_eq!(
            mmle_sigma2(&data.scaled(4.0), &kernel, 0.05).unwrap(),
            16.0 * base
        );
        let c = 1.3;
        let scaled = mmle_sigma2(&data.scaled(c), &kernel, 0.05).unwrap();
        assert!((scaled - c * c * base).abs() <= 1e-12 * scaled);
    }
}

#[test]
fn log_marginal_matches_dense_density() {
    let zero = Dataset::new(vec![0.0f64], vec![0.0]).unwrap();
    let lm = log_marginal(&zero, &KernelConfig::squared_exponential(), 1.0, 1.0).unwrap();
    assert!((lm + 0.5 * (4.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    for (seed, kernel) in kernels().into_iter().enumerate() {
        let data = dataset(seed as u64 + 40, 12);
        let (lambda, sigma2) = (0.02, 0.15);
        let s = sigma2 / (12.0 * lambda);
        let cov = table(12, 12, |i, j| {
            s * kernel.eval(data.x[i], data.x[j]) + if i == j { sigma2 } else { 0.0 }
        });
        let oracle = common::gaussian_log_density(&cov, &data.y);
        let lm = log_marginal(&data, &kernel, lambda, sigma2).unwrap();
        assert!(
            (lm - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
            "{kernel:?}: {lm} vs {oracle}"
        );
        let profile = EvidenceProfile::new(&data, &kernel);
        assert!(
            (profile.log_marginal(lambda, sigma2) - oracle).abs() <= 1e-9 * oracle.abs().max(1.0)
        );
        assert!(
            (profile.mmle_sigma2(lambda) - mmle_sigma2(&data, &kernel, lambda).unwrap()).abs()
                <= 1e-10
        );
    }
}

/// Golden-section search written independently of the library.
fn golden_argmax(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[test]
fn mmle_is_the_profile_maximizer() {
    for seed in 0..5u64 {
        let n = 10 + 8 * seed as usize;
        let data = dataset(100 + seed, n);
        let kernel = kernels()[seed as usize % 5];
        let lambda = 0.01;
        let s_hat = mmle_sigma2(&data, &kernel, lambda).unwrap();
        let f = |t: f64| log_marginal(&data, &kernel, lambda, t.exp()).unwrap();
        let found = golden_argmax(f, (s_hat * 1e-3).ln(), (s_hat * 1e3).ln()).exp();
        assert!((found - s_hat).abs() <= 1e-4 * s_hat, "{found} vs {s_hat}");
        // stationarity of the evidence at the MMLE
        let h = 1e-4 * s_hat;
        let value = log_marginal(&data, &kernel, lambda, s_hat).unwrap();
        let slope = (log_marginal(&data, &kernel, lambda, s_hat + h).unwrap()
            - log_marginal(&data, &kernel, lambda, s_hat - h).unwrap())
            / (2.0 * h);
        assert!(
            slope.abs() * s_hat <= 1e-4 * value.abs(),
            "slope {slope} at {s_hat}"
        );
    }
}

#[test]
fn evidence_search_is_exhaustive() {
    let data = dataset(77, 40);
    let grid = default_lambda_grid::<f64>();
    for kernel in kernels() {
        let best = optimize_evidence(&data, &kernel, &grid).unwrap();
        for &l in &grid {
            let s = mmle_sigma2(&data, &kernel, l).unwrap();
            let lm = log_marginal(&data, &kernel, l, s).unwrap();
            assert!(lm <= best.log_marginal + 1e-9 * lm.abs(), "{kernel:?} {l}");
        }
        let single = optimize_evidence(&data, &kernel, &[0.3]).unwrap();
        assert_eq!(single.lambda, 0.3);
        assert!((single.sigma2 - mmle_sigma2(&data, &kernel, 0.3).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn evidence_recovers_noise_variance() {
    let kernel = KernelConfig::matern(2.5).unwrap();
    let mut estimates: Vec<f64> = (0..20u64)
        .map(|seed| {
            let mut rng = common::rng(500 + seed);
            let x = common::uniform_points(&mut rng, 200);
            let y = x
                .iter()
                .map(|&v| {
                    (2.0 * std::f64::consts::PI * v).sin()
                        + 0.1 * rng.sample::<f64, _>(rand_distr::StandardNormal)
                })
                .collect();
            let data = Dataset::new(x, y).unwrap();
            optimize_evidence(&data, &kernel, &default_lambda_grid())
                .unwrap()
                .sigma2
        })
        .collect();
    estimates.sort_by(f64::total_cmp);
    let median = 0.5 * (estimates[9] + estimates[10]);
    assert!(median > 0.005 && median < 0.02, "median sigma2 {median}");
}

#[test]
fn single_precision_fit() {
    let d64 = dataset(6, 20);
    let d32 = Dataset::<f32>::new(
        d64.x.iter().map(|&v| v as f32).collect(),
        d64.y.iter().map(|&v| v as f32).collect(),
    )
    .unwrap();
    let grid64 = linspace(0.0, 1.0, 11);
    let grid32: Vec<f32> = grid64.iter().map(|&v| v as f32).collect();
    let f64_fit = FittedGp::fit(d64, KernelConfig::sobolev(), 0.01, 0.1, HOMO).unwrap();
    let f32_fit = FittedGp::fit(d32, KernelConfig::sobolev(), 0.01f32, 0.1, HOMO).unwrap();
    let a = f64_fit.posterior_mean_deriv(1, &grid64).unwrap();
    let b = f32_fit.posterior_mean_deriv(1, &grid32).unwrap();
    for i in 0..11 {
        assert!((a[i] - b[i] as f64).abs() <= 1e-3 * a.amax());
    }
}
