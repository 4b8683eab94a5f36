//! Leave-one-out cross validation for picking the Matérn `nu`, the kernel
//! family and the spline knot count.
//!
//! All scores use the linear-smoother identity: for `y_hat = H y`, the
//! leave-one-out residual at `i` is `(y_i - y_hat_i) / (1 - H_ii)`.

use nalgebra::DVector;

use crate::error::{invalid, GpError, Result};
use crate::gp::{factor_system, system_diagonal, Dataset, NoiseModel};
use crate::hyperparam::{default_lambda_grid, EvidenceProfile};
use crate::kernels::{Kernel, KernelConfig};
use crate::scalar::Real;
use crate::spline::{bspline_loocv, Domain};

/// Leverages at or above `1 - LEVERAGE_MARGIN` make the identity unusable.
pub const LEVERAGE_MARGIN: f64 = 1e-12;

/// A linear smoother whose leave-one-out score can be computed.
#[derive(Debug, Clone, PartialEq)]
pub enum SmootherModel<T: Real> {
    /// GP posterior mean; `sigma2` does not enter the mean and is carried
    /// only for bookkeeping.
    Gp {
        kernel: KernelConfig<T>,
        lambda: T,
        sigma2: T,
    },
    Bspline {
        n_basis: usize,
        domain: Domain<T>,
    },
}

/// Mean squared leave-one-out residual from residuals `y - H y` and the
/// complements `1 - H_ii`.
pub(crate) fn loo_from_parts<T: Real>(residuals: &[T], one_minus_h: &[T]) -> Result<T> {
    let n = residuals.len();
    let mut total = T::zero();
    for i in 0..n {
        if !(one_minus_h[i] > T::lit(LEVERAGE_MARGIN)) {
            return Err(GpError::DegenerateLeverage {
                index: i,
                value: (T::one() - one_minus_h[i]).as_f64(),
            });
        }
        let r = residuals[i] / one_minus_h[i];
        total += r * r;
    }
    Ok(total / T::from_usize_lossy(n))
}

pub(crate) fn loo_from_smoother<T: Real>(y: &[T], fitted: &[T], leverage: &[T]) -> Result<T> {
    let resid: Vec<T> = y.iter().zip(fitted).map(|(&a, &b)| a - b).collect();
    let comp: Vec<T> = leverage.iter().map(|&h| T::one() - h).collect();
    loo_from_parts(&resid, &comp)
}

/// GP leave-one-out score from one Cholesky factorization of
/// `A = K + n lambda I`: the residual is `alpha_i / (A^{-1})_ii`.
pub fn gp_loocv_score<T: Real, K: Kernel<T>>(
    data: &Dataset<T>,
    kernel: &K,
    lambda: T,
) -> Result<T> {
    check_loo_input(data)?;
    if !(lambda > T::zero()) {
        return Err(invalid("lambda must be positive"));
    }
    let diag = system_diagonal(data, lambda, T::one(), NoiseModel::Homoscedastic)?;
    let factor = factor_system(kernel, &data.x, &diag)?;
    let a_inv = factor.chol.inverse();
    let alpha = factor.chol.solve(&data.y_vector());
    let c = T::from_usize_lossy(data.len()) * lambda;
    // y - H y = c alpha and 1 - H_ii = c (A^{-1})_ii
    let resid: Vec<T> = alpha.iter().map(|&a| c * a).collect();
    let comp: Vec<T> = (0..data.len()).map(|i| c * a_inv[(i, i)]).collect();
    loo_from_parts(&resid, &comp)
}

/// GP leave-one-out score read off an existing eigendecomposition.
pub fn gp_loocv_from_profile<T: Real>(profile: &EvidenceProfile<T>, lambda: T) -> Result<T> {
    let n = profile.n();
    if n < 2 {
        return Err(invalid("leave-one-out needs at least two observations"));
    }
    let spec = profile.spectrum();
    let c = T::from_usize_lossy(n) * lambda;
    let shrink: Vec<T> = spec.values.iter().map(|&s| c / (s + c)).collect();
    let weighted = DVector::from_fn(n, |j, _| profile.rotated()[j] * shrink[j]);
    let resid = &spec.vectors * weighted;
    let comp: Vec<T> = (0..n)
        .map(|i| {
            spec.vectors
                .row(i)
                .iter()
                .zip(&shrink)
                .fold(T::zero(), |acc, (&u, &w)| acc + u * u * w)
        })
        .collect();
    loo_from_parts(resid.as_slice(), &comp)
}

fn check_loo_input<T: Real>(data: &Dataset<T>) -> Result<()> {
    if data.len() < 2 {
        return Err(invalid("leave-one-out needs at least two observations"));
    }
    Ok(())
}

/// Mean squared leave-one-out prediction error of the order-0 posterior mean.
pub fn loocv_score<T: Real>(data: &Dataset<T>, model: &SmootherModel<T>) -> Result<T> {
    check_loo_input(data)?;
    match model {
        SmootherModel::Gp { kernel, lambda, .. } => gp_loocv_score(data, kernel, *lambda),
        SmootherModel::Bspline { n_basis, domain } => bspline_loocv(data, *n_basis, *domain),
    }
}

/// How `(lambda, sigma^2)` are set for each candidate kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaPolicy<T> {
    /// Maximize the evidence over this `lambda` grid, `sigma^2` at its MMLE.
    Evidence(Vec<T>),
    Fixed {
        lambda: T,
        sigma2: T,
    },
}

impl<T: Real> Default for LambdaPolicy<T> {
    fn default() -> Self {
        LambdaPolicy::Evidence(default_lambda_grid())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore<T: Real> {
    pub kernel: KernelConfig<T>,
    pub lambda: T,
    pub sigma2: T,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T: Real> {
    pub best: CandidateScore<T>,
    /// Every candidate in evaluation order.
    pub candidates: Vec<CandidateScore<T>>,
}

/// Tunes `kernel` under `policy` and scores it by leave-one-out.
pub fn score_candidate<T: Real>(
    data: &Dataset<T>,
    kernel: &KernelConfig<T>,
    policy: &LambdaPolicy<T>,
) -> Result<CandidateScore<T>> {
    check_loo_input(data)?;
    let profile = EvidenceProfile::new(data, kernel);
    let (lambda, sigma2) = match policy {
        LambdaPolicy::Evidence(grid) => {
            let c = profile.optimize(grid)?;
            (c.lambda, c.sigma2)
        }
        LambdaPolicy::Fixed { lambda, sigma2 } => (*lambda, *sigma2),
    };
    let score = gp_loocv_from_profile(&profile, lambda)?;
    Ok(CandidateScore {
        kernel: *kernel,
        lambda,
        sigma2,
        score,
    })
}

/// Lowest leave-one-out score wins; ties go to the earliest candidate.
pub fn select_kernel<T: Real>(
    data: &Dataset<T>,
    candidates: &[KernelConfig<T>],
    policy: &LambdaPolicy<T>,
) -> Result<Selection<T>> {
    if candidates.is_empty() {
        return Err(invalid("no candidate kernels"));
    }
    let scored = candidates
        .iter()
        .map(|k| score_candidate(data, k, policy))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, c) in scored.iter().enumerate() {
        if c.score < scored[best].score {
            best = i;
        }
    }
    Ok(Selection {
        best: scored[best].clone(),
        candidates: scored,
    })
}

/// Matérn smoothness by leave-one-out; ties go to the smaller `nu`.
pub fn select_nu<T: Real>(
    data: &Dataset<T>,
    nu_grid: &[T],
    policy: &LambdaPolicy<T>,
) -> Result<Selection<T>> {
    if nu_grid.is_empty() {
        return Err(invalid("nu grid is empty"));
    }
    let mut nus = nu_grid.to_vec();
    nus.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let candidates = nus
        .into_iter()
        .map(KernelConfig::matern)
        .collect::<Result<Vec<_>>>()?;
    select_kernel(data, &candidates, policy)
}
