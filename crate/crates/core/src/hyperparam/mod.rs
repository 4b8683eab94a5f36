//! Empirical-Bayes tuning of `sigma^2` and `lambda`, and a fully Bayesian
//! Metropolis-Hastings alternative.
//!
//! The marginal likelihood is `Y | X ~ N(0, sigma^2 (n lambda)^{-1} K(X, X) + sigma^2 I)`
//! and, for fixed `lambda`, it is maximized in closed form by
//! `sigma_hat^2 = lambda Y^T [K(X, X) + n lambda I]^{-1} Y`.

mod mh;

pub use mh::{
    chain_average_mean, sample_posterior_hyper, sample_posterior_hyper_with, HyperChain,
    HyperPriors, HyperSample, MhConfig,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, GpError, Result};
use crate::gp::{factor_system, system_diagonal, Dataset, NoiseModel};
use crate::kernels::Kernel;
use crate::linalg::{chol_logdet, cholesky_with_jitter, mean_diagonal, GramSpectrum};
use crate::scalar::{logspace, Real};

/// Number of points in the default regularization grid.
pub const DEFAULT_LAMBDA_GRID_LEN: usize = 40;

/// 40 log-spaced values spanning `[1e-8, 1]`.
pub fn default_lambda_grid<T: Real>() -> Vec<T> {
    logspace(T::lit(1e-8), T::one(), DEFAULT_LAMBDA_GRID_LEN)
}

fn ln_2pi<T: Real>() -> T {
    T::lit((2.0 * std::f64::consts::PI).ln())
}

/// Closed-form MMLE of `sigma^2` at fixed `lambda` (homoscedastic model).
pub fn mmle_sigma2<T: Real, K: Kernel<T>>(data: &Dataset<T>, kernel: &K, lambda: T) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(invalid("lambda must be positive"));
    }
    let diag = system_diagonal(data, lambda, T::one(), NoiseModel::Homoscedastic)?;
    let factor = factor_system(kernel, &data.x, &diag)?;
    let y = data.y_vector();
    let quad = y.dot(&factor.chol.solve(&y));
    Ok(lambda * quad)
}

/// Exact Gaussian log-density of `y`, computed from one Cholesky factorization.
///
/// Homoscedastic: covariance `sigma^2 [(n lambda)^{-1} K + I]`.
/// Heteroscedastic: covariance `sigma^2 (n lambda)^{-1} K + diag(sigma_y_i^2 + sigma^2)`.
pub fn log_marginal_with<T: Real, K: Kernel<T>>(
    data: &Dataset<T>,
    kernel: &K,
    lambda: T,
    sigma2: T,
    noise_model: NoiseModel,
) -> Result<T> {
    let gram = kernel.gram(&data.x);
    log_marginal_from_gram(&gram, data, lambda, sigma2, noise_model)
}

/// [`log_marginal_with`] for the homoscedastic model.
pub fn log_marginal<T: Real, K: Kernel<T>>(
    data: &Dataset<T>,
    kernel: &K,
    lambda: T,
    sigma2: T,
) -> Result<T> {
    log_marginal_with(data, kernel, lambda, sigma2, NoiseModel::Homoscedastic)
}

fn log_marginal_from_gram<T: Real>(
    gram: &DMatrix<T>,
    data: &Dataset<T>,
    lambda: T,
    sigma2: T,
    noise_model: NoiseModel,
) -> Result<T> {
    if !(lambda > T::zero()) || !(sigma2 > T::zero()) {
        return Err(invalid("hyperparameters must be positive"));
    }
    let n = data.len();
    let n_lambda = T::from_usize_lossy(n) * lambda;
    // M = (n lambda)^{-1} K + D / sigma^2, covariance = sigma^2 M
    let mut m = gram / n_lambda;
    match noise_model {
        NoiseModel::Homoscedastic => {
            for i in 0..n {
                m[(i, i)] += T::one();
            }
        }
        NoiseModel::Heteroscedastic => {
            let sd = data
                .obs_sd
                .as_ref()
                .ok_or_else(|| invalid("heteroscedastic noise needs per-observation sds"))?;
            for i in 0..n {
                m[(i, i)] += (sd[i] * sd[i] + sigma2) / sigma2;
            }
        }
    }
    let scale = mean_diagonal(&m);
    let factor = cholesky_with_jitter(&m, scale, 1e-10, 1e-6, true)?;
    let y = data.y_vector();
    let quad = y.dot(&factor.chol.solve(&y)) / sigma2;
    let nf = T::from_usize_lossy(n);
    let logdet = nf * sigma2.ln() + chol_logdet(&factor.chol);
    Ok(-T::lit(0.5) * (nf * ln_2pi::<T>() + logdet + quad))
}

/// Outcome of an evidence search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceChoice<T> {
    pub lambda: T,
    pub sigma2: T,
    pub log_marginal: T,
}

/// Homoscedastic evidence as a function of `(lambda, sigma^2)` after a single
/// eigendecomposition of `K(X, X)`.
#[derive(Debug, Clone)]
pub struct EvidenceProfile<T: Real> {
    spectrum: GramSpectrum<T>,
    rotated: DVector<T>,
}

impl<T: Real> EvidenceProfile<T> {
    pub fn new<K: Kernel<T>>(data: &Dataset<T>, kernel: &K) -> Self {
        Self::from_gram(kernel.gram(&data.x), &data.y_vector())
    }

    pub fn from_gram(gram: DMatrix<T>, y: &DVector<T>) -> Self {
        let spectrum = GramSpectrum::new(gram);
        let rotated = spectrum.rotate(y);
        EvidenceProfile { spectrum, rotated }
    }

    pub fn n(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn spectrum(&self) -> &GramSpectrum<T> {
        &self.spectrum
    }

    /// `U^T y`.
    pub fn rotated(&self) -> &DVector<T> {
        &self.rotated
    }

    fn shift(&self, lambda: T) -> T {
        T::from_usize_lossy(self.n()) * lambda
    }

    /// `y^T (K + c I)^{-1} y`.
    pub fn quad(&self, shift: T) -> T {
        self.spectrum
            .values
            .iter()
            .zip(self.rotated.iter())
            .fold(T::zero(), |acc, (&s, &z)| acc + z * z / (s + shift))
    }

    /// `log det (K + c I)`.
    pub fn logdet(&self, shift: T) -> T {
        self.spectrum
            .values
            .iter()
            .fold(T::zero(), |acc, &s| acc + (s + shift).ln())
    }

    pub fn mmle_sigma2(&self, lambda: T) -> T {
        lambda * self.quad(self.shift(lambda))
    }

    pub fn log_marginal(&self, lambda: T, sigma2: T) -> T {
        let c = self.shift(lambda);
        let nf = T::from_usize_lossy(self.n());
        // cov = (sigma^2 / c) (K + c I)
        let logdet = nf * (sigma2 / c).ln() + self.logdet(c);
        let quad = c / sigma2 * self.quad(c);
        -T::lit(0.5) * (nf * ln_2pi::<T>() + logdet + quad)
    }

    /// Best `(lambda, sigma_hat^2(lambda))` over `grid`. Ties go to the larger
    /// `lambda`, so the result does not depend on grid order.
    pub fn optimize(&self, grid: &[T]) -> Result<EvidenceChoice<T>> {
        if grid.is_empty() {
            return Err(invalid("lambda grid is empty"));
        }
        let mut best: Option<EvidenceChoice<T>> = None;
        for &lambda in grid {
            if !(lambda > T::zero()) {
                return Err(invalid(format!(
                    "lambda grid entries must be positive, got {lambda}"
                )));
            }
            let sigma2 = self.mmle_sigma2(lambda);
            if !(sigma2 > T::zero()) || !sigma2.is_finite() {
                continue;
            }
            let lm = self.log_marginal(lambda, sigma2);
            if !lm.is_finite() {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => lm > b.log_marginal || (lm == b.log_marginal && lambda > b.lambda),
            };
            if better {
                best = Some(EvidenceChoice {
                    lambda,
                    sigma2,
                    log_marginal: lm,
                });
            }
        }
        best.ok_or_else(|| {
            GpError::AllCandidatesFailed("no lambda on the grid gave a finite evidence".into())
        })
    }

    /// Posterior mean of `f^(k)` on `grid`, averaged over several `lambda`
    /// values. Linear in `(K + n lambda I)^{-1}`, so the average collapses to
    /// one weighted solve in the eigenbasis.
    pub fn averaged_mean_deriv<K: Kernel<T>>(
        &self,
        kernel: &K,
        x: &[T],
        k: usize,
        grid: &[T],
        lambdas: &[T],
    ) -> Result<DVector<T>> {
        if lambdas.is_empty() {
            return Err(invalid("need at least one lambda"));
        }
        let n = self.n();
        let count = T::from_usize_lossy(lambdas.len());
        let shifts: Vec<T> = lambdas.iter().map(|&l| self.shift(l)).collect();
        let weights = DVector::from_fn(n, |i, _| {
            let s = self.spectrum.values[i];
            let avg = shifts
                .iter()
                .fold(T::zero(), |acc, &c| acc + T::one() / (s + c))
                / count;
            avg * self.rotated[i]
        });
        let cross = kernel.cross_gram(k, grid, x)?;
        Ok(cross * (&self.spectrum.vectors * weights))
    }
}

/// Empirical-Bayes search: `sigma^2` profiled by its MMLE at every `lambda`
/// of the grid, returning the pair with the largest evidence.
pub fn optimize_evidence<T: Real, K: Kernel<T>>(
    data: &Dataset<T>,
    kernel: &K,
    lambda_grid: &[T],
) -> Result<EvidenceChoice<T>> {
    if lambda_grid.is_empty() {
        return Err(invalid("lambda grid is empty"));
    }
    EvidenceProfile::new(data, kernel).optimize(lambda_grid)
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max<T: Real>(mut f: impl FnMut(T) -> T, lo: T, hi: T, iters: usize) -> (T, T) {
    let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Joint evidence maximization for the heteroscedastic model: `lambda` over
/// the grid, `sigma^2` by golden-section search in `log sigma^2` at each
/// grid point.
pub fn optimize_evidence_hetero<T: Real, K: Kernel<T>>(
    data: &Dataset<T>,
    kernel: &K,
    lambda_grid: &[T],
) -> Result<EvidenceChoice<T>> {
    if lambda_grid.is_empty() {
        return Err(invalid("lambda grid is empty"));
    }
    if data.obs_sd.is_none() {
        return Err(invalid(
            "heteroscedastic evidence needs per-observation sds",
        ));
    }
    let gram = kernel.gram(&data.x);
    let n = T::from_usize_lossy(data.len());
    let mean_sq = data.y.iter().fold(T::zero(), |a, &v| a + v * v) / n;
    let scale = if mean_sq > T::zero() {
        mean_sq
    } else {
        T::one()
    };
    let (lo, hi) = ((scale * T::lit(1e-8)).ln(), (scale * T::lit(10.0)).ln());
    let neg_inf = T::lit(f64::NEG_INFINITY);
    let mut best: Option<EvidenceChoice<T>> = None;
    for &lambda in lambda_grid {
        let eval = |log_s2: T| {
            log_marginal_from_gram(
                &gram,
                data,
                lambda,
                log_s2.exp(),
                NoiseModel::Heteroscedastic,
            )
            .ok()
            .filter(|v| v.is_finite())
            .unwrap_or(neg_inf)
        };
        let (log_s2, lm) = golden_max(eval, lo, hi, 60);
        if !lm.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => lm > b.log_marginal || (lm == b.log_marginal && lambda > b.lambda),
        };
        if better {
            best = Some(EvidenceChoice {
                lambda,
                sigma2: log_s2.exp(),
                log_marginal: lm,
            });
        }
    }
    best.ok_or_else(|| {
        GpError::AllCandidatesFailed("heteroscedastic evidence failed on every lambda".into())
    })
}
