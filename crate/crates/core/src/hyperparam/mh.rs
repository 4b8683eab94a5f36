use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{default_lambda_grid, EvidenceProfile};
use crate::error::{invalid, Result};
use crate::gp::Dataset;
use crate::kernels::Kernel;
use crate::scalar::Real;

/// Inverse-gamma prior on `sigma^2` and gamma prior on `lambda`, both in
/// (shape, rate) form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperPriors<T> {
    pub sigma2_shape: T,
    pub sigma2_rate: T,
    pub lambda_shape: T,
    pub lambda_rate: T,
}

impl<T: Real> Default for HyperPriors<T> {
    /// `sigma^2 ~ InvGamma(20, 1)`, `lambda ~ Gamma(1, 1000)`.
    fn default() -> Self {
        HyperPriors {
            sigma2_shape: T::lit(20.0),
            sigma2_rate: T::one(),
            lambda_shape: T::one(),
            lambda_rate: T::lit(1000.0),
        }
    }
}

impl<T: Real> HyperPriors<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sigma2_shape,
            self.sigma2_rate,
            self.lambda_shape,
            self.lambda_rate,
        ];
        if all.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(invalid("prior parameters must be positive"));
        }
        Ok(())
    }

    /// Joint log prior density of `(log sigma^2, log lambda)`, Jacobian included.
    pub fn log_density_log_scale(&self, log_sigma2: f64, log_lambda: f64) -> f64 {
        let (a, b) = (self.sigma2_shape.as_f64(), self.sigma2_rate.as_f64());
        let (c, d) = (self.lambda_shape.as_f64(), self.lambda_rate.as_f64());
        let ln_gamma = statrs::function::gamma::ln_gamma;
        let s2 = log_sigma2.exp();
        let lam = log_lambda.exp();
        // InvGamma: a ln b - lnG(a) - (a+1) ln x - b/x, plus ln x
        let inv_gamma = a * b.ln() - ln_gamma(a) - a * log_sigma2 - b / s2;
        // Gamma: c ln d - lnG(c) + (c-1) ln x - d x, plus ln x
        let gamma = c * d.ln() - ln_gamma(c) + c * log_lambda - d * lam;
        inv_gamma + gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    /// Proposal sd on each log-parameter.
    pub step: f64,
    pub seed: u64,
}

impl Default for MhConfig {
    fn default() -> Self {
        MhConfig {
            n_samples: 10_000,
            burn_in: 1000,
            step: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperSample<T> {
    pub sigma2: T,
    pub lambda: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperChain<T> {
    pub samples: Vec<HyperSample<T>>,
    pub initial: HyperSample<T>,
    /// Accepted proposals over the whole run, burn-in included.
    pub accepted: usize,
    pub proposals: usize,
}

impl<T: Real> HyperChain<T> {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub fn lambdas(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.lambda).collect()
    }
}

/// Random-walk Metropolis-Hastings on `(log sigma^2, log lambda)` targeting the
/// marginal likelihood times the priors. Starts at the empirical-Bayes optimum
/// over the default lambda grid.
pub fn sample_posterior_hyper<T: Real, K: Kernel<T>>(
    data: &Dataset<T>,
    kernel: &K,
    priors: &HyperPriors<T>,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<HyperChain<T>> {
    let profile = EvidenceProfile::new(data, kernel);
    let start = profile.optimize(&default_lambda_grid())?;
    let config = MhConfig {
        n_samples,
        burn_in,
        seed,
        ..MhConfig::default()
    };
    sample_posterior_hyper_with(
        &profile,
        priors,
        &config,
        HyperSample {
            sigma2: start.sigma2,
            lambda: start.lambda,
        },
    )
}

pub fn sample_posterior_hyper_with<T: Real>(
    profile: &EvidenceProfile<T>,
    priors: &HyperPriors<T>,
    config: &MhConfig,
    init: HyperSample<T>,
) -> Result<HyperChain<T>> {
    priors.validate()?;
    if config.n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    if !(config.step >= 0.0) {
        return Err(invalid("proposal step must be nonnegative"));
    }
    if !(init.sigma2 > T::zero()) || !(init.lambda > T::zero()) {
        return Err(invalid("initial hyperparameters must be positive"));
    }
    let log_target = |ls2: f64, ll: f64| -> f64 {
        let lm = profile
            .log_marginal(T::lit(ll.exp()), T::lit(ls2.exp()))
            .as_f64();
        let v = lm + priors.log_density_log_scale(ls2, ll);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = (init.sigma2.as_f64().ln(), init.lambda.as_f64().ln());
    let mut current = log_target(state.0, state.1);
    let mut held = init;
    let mut accepted = 0;
    let total = config.burn_in + config.n_samples;
    let mut samples = Vec::with_capacity(config.n_samples);
    for iter in 0..total {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let proposal = (state.0 + config.step * z1, state.1 + config.step * z2);
        if proposal != state {
            let candidate = log_target(proposal.0, proposal.1);
            if candidate.is_finite() && u.ln() < candidate - current {
                state = proposal;
                current = candidate;
                held = HyperSample {
                    sigma2: T::lit(state.0.exp()),
                    lambda: T::lit(state.1.exp()),
                };
                accepted += 1;
            }
        }
        if iter >= config.burn_in {
            samples.push(held);
        }
    }
    Ok(HyperChain {
        samples,
        initial: init,
        accepted,
        proposals: total,
    })
}

/// Fully Bayesian estimate of `f^(k)`: the posterior mean averaged over the
/// chain's `lambda` draws.
pub fn chain_average_mean<T: Real, K: Kernel<T>>(
    data: &Dataset<T>,
    kernel: &K,
    chain: &HyperChain<T>,
    k: usize,
    grid: &[T],
) -> Result<DVector<T>> {
    let profile = EvidenceProfile::new(data, kernel);
    profile.averaged_mean_deriv(kernel, &data.x, k, grid, &chain.lambdas())
}
