//! Closed-form plug-in posterior for `f` and its derivatives.
//!
//! With prior `f ~ GP(0, sigma^2 (n lambda)^{-1} K)` and Gaussian noise, the
//! posterior of `f^(k)` is again Gaussian with
//!
//! ```text
//! mean(x)    = K_{k0}(x, X) A^{-1} Y
//! cov(x, x') = sigma^2 (n lambda)^{-1} { K_{kk}(x, x') - K_{k0}(x, X) A^{-1} K_{0k}(X, x') }
//! ```
//!
//! where `A = K(X, X) + n lambda I` for homoscedastic noise and
//! `A = K(X, X) + n lambda sigma^{-2} D`, `D = diag(sigma_y_i^2 + sigma^2)`,
//! for the heteroscedastic model. One factorization of `A` serves every `k`
//! and every grid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernels::{Kernel, KernelConfig};
use crate::linalg::{cholesky_with_jitter, mean_diagonal, JitteredCholesky};
use crate::scalar::Real;

/// Observed covariates, responses and optional per-observation noise sds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_sd: Option<Vec<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        Self::build(x, y, None)
    }

    pub fn with_obs_sd(x: Vec<T>, y: Vec<T>, obs_sd: Vec<T>) -> Result<Self> {
        Self::build(x, y, Some(obs_sd))
    }

    fn build(x: Vec<T>, y: Vec<T>, obs_sd: Option<Vec<T>>) -> Result<Self> {
        if x.is_empty() {
            return Err(invalid("dataset needs at least one observation"));
        }
        if x.len() != y.len() {
            return Err(invalid(format!(
                "x has {} entries but y has {}",
                x.len(),
                y.len()
            )));
        }
        if let Some(sd) = &obs_sd {
            if sd.len() != x.len() {
                return Err(invalid(format!(
                    "obs_sd has {} entries, expected {}",
                    sd.len(),
                    x.len()
                )));
            }
            if sd.iter().any(|s| !(*s >= T::zero())) {
                return Err(invalid("observation sds must be nonnegative"));
            }
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(invalid("dataset contains non-finite values"));
        }
        Ok(Dataset { x, y, obs_sd })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn y_vector(&self) -> DVector<T> {
        DVector::from_column_slice(&self.y)
    }

    /// Copy with responses multiplied by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Dataset {
            x: self.x.clone(),
            y: self.y.iter().map(|&v| v * c).collect(),
            obs_sd: self.obs_sd.clone(),
        }
    }

    /// Copy without observation `i`.
    pub fn without(&self, i: usize) -> Self {
        let drop = |v: &Vec<T>| {
            v.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &a)| a)
                .collect::<Vec<_>>()
        };
        Dataset {
            x: drop(&self.x),
            y: drop(&self.y),
            obs_sd: self.obs_sd.as_ref().map(drop),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Homoscedastic,
    /// Noise variance `sigma_y_i^2 + sigma^2` per observation.
    Heteroscedastic,
}

/// A fitted plug-in GP: data, kernel, hyperparameters and the cached
/// factorization of the regularized system.
#[derive(Debug, Clone)]
pub struct FittedGp<T: Real, K = KernelConfig<T>> {
    pub data: Dataset<T>,
    pub kernel: K,
    pub lambda: T,
    pub sigma2: T,
    pub noise_model: NoiseModel,
    factor: JitteredCholesky<T>,
    alpha: DVector<T>,
}

/// Posterior of `f^(k)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivPosterior<T: Real> {
    pub k: usize,
    pub grid: Vec<T>,
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

impl<T: Real> DerivPosterior<T> {
    pub fn variances(&self) -> DVector<T> {
        self.cov.diagonal()
    }
}

/// Diagonal added to `K(X, X)` to form the system matrix.
pub(crate) fn system_diagonal<T: Real>(
    data: &Dataset<T>,
    lambda: T,
    sigma2: T,
    noise_model: NoiseModel,
) -> Result<Vec<T>> {
    let n_lambda = T::from_usize_lossy(data.len()) * lambda;
    match noise_model {
        NoiseModel::Homoscedastic => Ok(vec![n_lambda; data.len()]),
        NoiseModel::Heteroscedastic => {
            let sd = data
                .obs_sd
                .as_ref()
                .ok_or_else(|| invalid("heteroscedastic noise needs per-observation sds"))?;
            let ratio = n_lambda / sigma2;
            Ok(sd.iter().map(|&s| ratio * (s * s + sigma2)).collect())
        }
    }
}

fn validate_hyper<T: Real>(lambda: T, sigma2: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(())
}

/// Factorizes `K(X,X) + diag` with the escalating jitter policy
/// (`1e-10` to `1e-6` times the mean diagonal).
pub(crate) fn factor_system<T: Real, K: Kernel<T>>(
    kernel: &K,
    x: &[T],
    diag: &[T],
) -> Result<JitteredCholesky<T>> {
    let mut a = kernel.gram(x);
    for (i, d) in diag.iter().enumerate() {
        a[(i, i)] += *d;
    }
    let scale = mean_diagonal(&a);
    cholesky_with_jitter(&a, scale, 1e-10, 1e-6, true)
}

impl<T: Real, K: Kernel<T>> FittedGp<T, K> {
    pub fn fit(
        data: Dataset<T>,
        kernel: K,
        lambda: T,
        sigma2: T,
        noise_model: NoiseModel,
    ) -> Result<Self> {
        validate_hyper(lambda, sigma2)?;
        let diag = system_diagonal(&data, lambda, sigma2, noise_model)?;
        let factor = factor_system(&kernel, &data.x, &diag)?;
        let alpha = factor.chol.solve(&data.y_vector());
        Ok(FittedGp {
            data,
            kernel,
            lambda,
            sigma2,
            noise_model,
            factor,
            alpha,
        })
    }

    /// Weights `A^{-1} Y`.
    pub fn alpha(&self) -> &DVector<T> {
        &self.alpha
    }

    /// Jitter that was needed to factorize the system (zero in the usual case).
    pub fn jitter(&self) -> T {
        self.factor.jitter
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// `sigma^2 (n lambda)^{-1}`, the prior scale.
    pub fn prior_scale(&self) -> T {
        self.sigma2 / (T::from_usize_lossy(self.n()) * self.lambda)
    }

    /// Solves the system matrix against `b`.
    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        self.factor.chol.solve(b)
    }

    /// `f_hat^(k)` on `grid`.
    pub fn posterior_mean_deriv(&self, k: usize, grid: &[T]) -> Result<DVector<T>> {
        let cross = self.kernel.cross_gram(k, grid, &self.data.x)?;
        Ok(cross * &self.alpha)
    }

    /// Posterior covariance of `f^(k)` on `grid`, symmetrized.
    pub fn posterior_cov_deriv(&self, k: usize, grid: &[T]) -> Result<DMatrix<T>> {
        let cross = self.kernel.cross_gram(k, grid, &self.data.x)?;
        let prior = self.kernel.deriv_gram(k, grid)?;
        Ok(self.cov_from_parts(&cross, prior))
    }

    fn cov_from_parts(&self, cross: &DMatrix<T>, prior: DMatrix<T>) -> DMatrix<T> {
        // V = L^{-1} K_{0k}(X, grid); cov = s (K_kk - V^T V)
        let v = self
            .factor
            .chol
            .l_dirty()
            .solve_lower_triangular(&cross.transpose())
            .expect("Cholesky factor has a nonzero diagonal");
        let cov = (prior - v.tr_mul(&v)) * self.prior_scale();
        (&cov + cov.transpose()) * T::lit(0.5)
    }

    /// Mean and covariance of `f^(k)` on `grid`.
    pub fn posterior(&self, k: usize, grid: &[T]) -> Result<DerivPosterior<T>> {
        let cross = self.kernel.cross_gram(k, grid, &self.data.x)?;
        let prior = self.kernel.deriv_gram(k, grid)?;
        let mean = &cross * &self.alpha;
        let cov = self.cov_from_parts(&cross, prior);
        Ok(DerivPosterior {
            k,
            grid: grid.to_vec(),
            mean,
            cov,
        })
    }

    /// Posterior mean of `f` at the training covariates.
    pub fn fitted_values(&self) -> DVector<T> {
        self.posterior_mean_deriv(0, &self.data.x)
            .expect("order zero is always supported")
    }
}

/// [`FittedGp::fit`] as a free function.
pub fn fit<T: Real, K: Kernel<T>>(
    data: Dataset<T>,
    kernel: K,
    lambda: T,
    sigma2: T,
    noise_model: NoiseModel,
) -> Result<FittedGp<T, K>> {
    FittedGp::fit(data, kernel, lambda, sigma2, noise_model)
}
