//! Posterior path sampling and credible bands for `f^(k)` on a grid.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, GpError, Result};
use crate::gp::DerivPosterior;
use crate::linalg::{cholesky_with_jitter, max_diagonal};
use crate::scalar::Real;

/// Posterior draws per band when the caller has no preference.
pub const DEFAULT_BAND_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    Pointwise,
    Simultaneous,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Radius<T: Real> {
    /// One sup-norm radius for the whole grid.
    Scalar(T),
    PerPoint(DVector<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand<T: Real> {
    pub k: usize,
    pub grid: Vec<T>,
    pub center: DVector<T>,
    pub radius: Radius<T>,
    pub level: T,
    pub kind: BandKind,
}

impl<T: Real> CredibleBand<T> {
    pub fn radius_at(&self, i: usize) -> T {
        match &self.radius {
            Radius::Scalar(r) => *r,
            Radius::PerPoint(r) => r[i],
        }
    }

    pub fn lower(&self) -> DVector<T> {
        DVector::from_fn(self.center.len(), |i, _| self.center[i] - self.radius_at(i))
    }

    pub fn upper(&self) -> DVector<T> {
        DVector::from_fn(self.center.len(), |i, _| self.center[i] + self.radius_at(i))
    }

    /// Whether `values` lies inside the band at every grid point.
    pub fn contains(&self, values: &[T]) -> bool {
        values.len() == self.center.len()
            && values
                .iter()
                .enumerate()
                .all(|(i, &v)| (v - self.center[i]).abs() <= self.radius_at(i))
    }

    /// Largest radius over the grid.
    pub fn max_radius(&self) -> T {
        match &self.radius {
            Radius::Scalar(r) => *r,
            Radius::PerPoint(r) => r.iter().fold(T::zero(), |a, &b| if b > a { b } else { a }),
        }
    }

    /// Same band with every radius multiplied by `factor`.
    pub fn inflated(mut self, factor: T) -> Self {
        self.radius = match self.radius {
            Radius::Scalar(r) => Radius::Scalar(r * factor),
            Radius::PerPoint(r) => Radius::PerPoint(r * factor),
        };
        self
    }
}

fn check_level<T: Real>(level: T) -> Result<()> {
    if !(level > T::zero() && level < T::one()) {
        return Err(invalid(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// `n_samples x m` matrix of posterior draws, one path per row.
pub fn sample_paths<T: Real>(
    post: &DerivPosterior<T>,
    n_samples: usize,
    seed: u64,
) -> Result<DMatrix<T>> {
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let m = post.mean.len();
    let scale = max_diagonal(&post.cov);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(m, n_samples, |_, _| {
        T::lit(rng.sample::<f64, _>(StandardNormal))
    });
    let devs = if scale > T::zero() {
        let factor = cholesky_with_jitter(&post.cov, scale, 1e-10, 1e-3, false)?;
        factor.chol.l() * z
    } else {
        DMatrix::zeros(m, n_samples)
    };
    Ok(DMatrix::from_fn(n_samples, m, |s, i| {
        post.mean[i] + devs[(i, s)]
    }))
}

/// `max_i |path_i - center_i|` for every row of `samples`.
pub fn sup_deviations<T: Real>(samples: &DMatrix<T>, center: &DVector<T>) -> Vec<T> {
    samples
        .row_iter()
        .map(|row| {
            row.iter()
                .zip(center.iter())
                .fold(T::zero(), |acc, (&s, &c)| {
                    let d = (s - c).abs();
                    if d > acc {
                        d
                    } else {
                        acc
                    }
                })
        })
        .collect()
}

/// Order statistic at 1-based index `ceil(level * n)`.
pub fn empirical_quantile<T: Real>(values: &[T], level: T) -> Result<T> {
    check_level(level)?;
    if values.is_empty() {
        return Err(invalid("quantile of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = sorted.len();
    // small guard so that e.g. 0.95 * 2000 is not rounded up to 1901
    let idx = (level.as_f64() * n as f64 - 1e-9).ceil() as usize;
    Ok(sorted[idx.clamp(1, n) - 1])
}

/// Simultaneous band from an existing sample matrix.
pub fn simultaneous_band_from_samples<T: Real>(
    post: &DerivPosterior<T>,
    samples: &DMatrix<T>,
    level: T,
) -> Result<CredibleBand<T>> {
    if samples.ncols() != post.mean.len() {
        return Err(invalid("sample paths do not match the posterior grid"));
    }
    let radius = empirical_quantile(&sup_deviations(samples, &post.mean), level)?;
    Ok(CredibleBand {
        k: post.k,
        grid: post.grid.clone(),
        center: post.mean.clone(),
        radius: Radius::Scalar(radius),
        level,
        kind: BandKind::Simultaneous,
    })
}

/// L-infinity credible band: the `level` quantile of the sup-norm distance
/// between posterior draws and the posterior mean.
pub fn simultaneous_band<T: Real>(
    post: &DerivPosterior<T>,
    level: T,
    n_samples: usize,
    seed: u64,
) -> Result<CredibleBand<T>> {
    check_level(level)?;
    let samples = sample_paths(post, n_samples, seed)?;
    simultaneous_band_from_samples(post, &samples, level)
}

/// Analytic pointwise band `mean +- z_{(1+level)/2} sd`.
pub fn pointwise_band<T: Real>(post: &DerivPosterior<T>, level: T) -> Result<CredibleBand<T>> {
    check_level(level)?;
    let z = Normal::standard().inverse_cdf((1.0 + level.as_f64()) / 2.0);
    let var = post.variances();
    let largest = var
        .iter()
        .fold(T::zero(), |a, &b| if b.abs() > a { b.abs() } else { a });
    let tol = largest * T::lit(1e-8) + T::lit(1e-300);
    let mut radius = DVector::zeros(var.len());
    for (i, &v) in var.iter().enumerate() {
        if v < -tol {
            return Err(GpError::NegativeVariance {
                index: i,
                value: v.as_f64(),
            });
        }
        radius[i] = T::lit(z) * if v > T::zero() { v.sqrt() } else { T::zero() };
    }
    Ok(CredibleBand {
        k: post.k,
        grid: post.grid.clone(),
        center: post.mean.clone(),
        radius: Radius::PerPoint(radius),
        level,
        kind: BandKind::Pointwise,
    })
}
