use plugin_gp::hyperparam::{
    chain_average_mean, sample_posterior_hyper, sample_posterior_hyper_with, EvidenceProfile,
    HyperPriors, HyperSample, MhConfig,
};
use plugin_gp::sim::{gen_data, Design, ExperimentConfig, Method};
use plugin_gp::{Dataset, KernelConfig};

fn appendix_data(n: usize, rep: usize) -> Dataset<f64> {
    let mut config = ExperimentConfig::new(Design::XSinX, n, 1, vec![Method::Sobolev], 31);
    config.noise_sd = 0.1;
    gen_data(&config, rep).unwrap()
}

fn kernels() -> Vec<KernelConfig<f64>> {
    vec![
        KernelConfig::matern(2.5).unwrap(),
        KernelConfig::squared_exponential(),
        KernelConfig::sobolev(),
    ]
}

#[test]
fn default_priors() {
    let p = HyperPriors::<f64>::default();
    assert_eq!(
        (p.sigma2_shape, p.sigma2_rate, p.lambda_shape, p.lambda_rate),
        (20.0, 1.0, 1.0, 1000.0)
    );
    assert!(p.validate().is_ok());
    let bad = HyperPriors {
        lambda_rate: 0.0,
        ..p
    };
    assert!(bad.validate().is_err());
    let c = MhConfig::default();
    assert_eq!((c.n_samples, c.burn_in, c.step), (10_000, 1000, 0.2));
}

#[test]
fn chain_length_and_acceptance() {
    let data = appendix_data(100, 0);
    for kernel in kernels() {
        let chain =
            sample_posterior_hyper(&data, &kernel, &HyperPriors::default(), 10_000, 1000, 3)
                .unwrap();
        assert_eq!(chain.samples.len(), 10_000);
        assert_eq!(chain.proposals, 11_000);
        let rate = chain.acceptance_rate();
        assert!(rate > 0.05 && rate < 0.95, "{kernel:?}: acceptance {rate}");
        assert!(chain
            .samples
            .iter()
            .all(|s| s.sigma2 > 0.0 && s.lambda > 0.0));
    }
}

#[test]
fn chain_is_reproducible() {
    let data = appendix_data(60, 1);
    let kernel = KernelConfig::sobolev();
    let a = sample_posterior_hyper(&data, &kernel, &HyperPriors::default(), 2000, 100, 9).unwrap();
    let b = sample_posterior_hyper(&data, &kernel, &HyperPriors::default(), 2000, 100, 9).unwrap();
    let c = sample_posterior_hyper(&data, &kernel, &HyperPriors::default(), 2000, 100, 10).unwrap();
    let bits = |ch: &plugin_gp::hyperparam::HyperChain<f64>| {
        ch.samples
            .iter()
            .map(|s| (s.sigma2.to_bits(), s.lambda.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn zero_step_chain_is_constant() {
    let data = appendix_data(40, 2);
    let profile = EvidenceProfile::new(&data, &KernelConfig::matern(3.0).unwrap());
    let init = HyperSample {
        sigma2: 0.0123,
        lambda: 4.5e-3,
    };
    let config = MhConfig {
        n_samples: 500,
        burn_in: 50,
        step: 0.0,
        seed: 1,
    };
    let chain =
        sample_posterior_hyper_with(&profile, &HyperPriors::default(), &config, init).unwrap();
    assert_eq!(chain.samples.len(), 500);
    assert!(chain.samples.iter().all(|s| *s == init));
}

#[test]
fn averaged_mean_of_a_constant_chain_is_the_plain_mean() {
    let data = appendix_data(50, 3);
    let kernel = KernelConfig::sobolev();
    let profile = EvidenceProfile::new(&data, &kernel);
    let init = HyperSample {
        sigma2: 0.01,
        lambda: 1e-4,
    };
    let config = MhConfig {
        n_samples: 20,
        burn_in: 0,
        step: 0.0,
        seed: 0,
    };
    let chain =
        sample_posterior_hyper_with(&profile, &HyperPriors::default(), &config, init).unwrap();
    let grid = [0.5, 2.5, 7.0];
    let averaged = chain_average_mean(&data, &kernel, &chain, 1, &grid).unwrap();
    let fit = plugin_gp::FittedGp::fit(
        data,
        kernel,
        1e-4,
        0.01,
        plugin_gp::NoiseModel::Homoscedastic,
    )
    .unwrap();
    let plain = fit.posterior_mean_deriv(1, &grid).unwrap();
    assert!((averaged - &plain).amax() <= 1e-8 * plain.amax().max(1.0));
}
