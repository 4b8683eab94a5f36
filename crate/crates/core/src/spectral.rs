//! Truncated Mercer-series kernels on `[0, 1]` with the Fourier eigenbasis
//! `psi_1 = 1`, `psi_2j = sqrt(2) cos(2 pi j x)`, `psi_2j+1 = sqrt(2) sin(2 pi j x)`,
//! and effective dimensions of their equivalent kernels.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::kernels::Kernel;
use crate::scalar::Real;

/// Truncation used by [`make_exp_kernel`] callers that have no preference.
pub const DEFAULT_EXP_TRUNCATION: usize = 5000;
/// Truncation for polynomial decay; the remainder of `kappa_hat` is added
/// analytically.
pub const DEFAULT_POLY_TRUNCATION: usize = 100_000;
/// Grid points used for the supremum in `kappa_tilde`.
pub const SUP_GRID_LEN: usize = 2001;
/// Derivative cap for the exponential family.
pub const EXP_MAX_DERIV_ORDER: usize = 8;
const TRUNCATION_WARN_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralFamily {
    /// `mu_i = exp(-2 gamma i)`.
    Exp,
    /// `mu_i = i^(-2 alpha)`.
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Decay {
    Unknown,
    Exp(f64),
    Poly(f64),
}

/// Kernel `sum_i mu_i psi_i(x) psi_i(x')` truncated after `M` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernel<T: Real> {
    mu: Vec<T>,
    decay: Decay,
    /// Set on equivalent kernels: their tail is bounded by `mu_i / lambda`.
    equivalent_lambda: Option<f64>,
    max_order: usize,
}

/// Frequency `j` of `psi_i` and whether it is a cosine (`i = 1` counts as
/// the constant cosine).
fn frequency(i: usize) -> (usize, bool) {
    (i / 2, i.is_multiple_of(2) || i == 1)
}

/// `psi_i^(k)(x)` for the 1-based index `i`.
pub fn fourier_basis_deriv<T: Real>(i: usize, k: usize, x: T) -> T {
    assert!(i >= 1, "Fourier basis is indexed from 1");
    if i == 1 {
        return if k == 0 { T::one() } else { T::zero() };
    }
    let (j, is_cos) = frequency(i);
    let omega = T::lit(2.0 * PI) * T::from_usize_lossy(j);
    let phase = omega * x + T::lit(k as f64 * PI / 2.0);
    let trig = if is_cos { phase.cos() } else { phase.sin() };
    T::lit(2f64.sqrt()) * omega.powi(k as i32) * trig
}

fn poly_max_order(alpha: f64) -> usize {
    // largest m with 2 alpha - 2 m > 1
    let t = alpha - 0.5;
    if t.fract() == 0.0 {
        (t as usize).saturating_sub(1)
    } else {
        t.floor().max(0.0) as usize
    }
}

/// Eigenvalues that underflow to zero are dropped, so the stored truncation
/// can be shorter than `m`.
pub fn make_exp_kernel<T: Real>(gamma: T, m: usize) -> Result<SpectralKernel<T>> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let mu = (1..=m)
        .map(|i| (-T::lit(2.0) * gamma * T::from_usize_lossy(i)).exp())
        .take_while(|&v| v > T::zero())
        .collect();
    let mut sk = SpectralKernel::from_eigenvalues(mu)?;
    sk.decay = Decay::Exp(gamma.as_f64());
    sk.max_order = EXP_MAX_DERIV_ORDER;
    Ok(sk)
}

pub fn make_poly_kernel<T: Real>(alpha: T, m: usize) -> Result<SpectralKernel<T>> {
    if !(alpha > T::lit(0.5)) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must exceed 1/2, got {alpha}")));
    }
    let mu = (1..=m)
        .map(|i| T::from_usize_lossy(i).powf(-T::lit(2.0) * alpha))
        .collect();
    let mut sk = SpectralKernel::from_eigenvalues(mu)?;
    sk.decay = Decay::Poly(alpha.as_f64());
    sk.max_order = poly_max_order(alpha.as_f64());
    Ok(sk)
}

/// `kappa_tilde^2` and `kappa_hat^2` of the equivalent kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDimension<T> {
    pub kappa_tilde_sq: T,
    pub kappa_hat_sq: T,
}

impl<T: Real> SpectralKernel<T> {
    /// Kernel with arbitrary positive nonincreasing eigenvalues.
    pub fn from_eigenvalues(mu: Vec<T>) -> Result<Self> {
        if mu.is_empty() {
            return Err(invalid("need at least one eigenvalue"));
        }
        if mu.iter().any(|&m| !(m > T::zero()) || !m.is_finite()) {
            return Err(invalid("eigenvalues must be positive and finite"));
        }
        if mu.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("eigenvalues must be nonincreasing"));
        }
        Ok(SpectralKernel {
            mu,
            decay: Decay::Unknown,
            equivalent_lambda: None,
            max_order: EXP_MAX_DERIV_ORDER,
        })
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.mu
    }

    /// Truncation length `M`.
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn family(&self) -> Option<SpectralFamily> {
        match self.decay {
            Decay::Unknown => None,
            Decay::Exp(_) => Some(SpectralFamily::Exp),
            Decay::Poly(_) => Some(SpectralFamily::Poly),
        }
    }

    /// Same eigenfunctions, eigenvalues `mu_i / (lambda + mu_i)`.
    pub fn equivalent_kernel(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        let prior = self.equivalent_lambda.unwrap_or(1.0);
        Ok(SpectralKernel {
            mu: self.mu.iter().map(|&m| m / (lambda + m)).collect(),
            decay: self.decay,
            equivalent_lambda: Some(prior / lambda.as_f64()),
            max_order: self.max_order,
        })
    }

    /// Bound on the dropped tail `sum_{i > M}` relative to the partial sum,
    /// for the derivative weight `(k1, k2)`. `None` when the decay is not
    /// known.
    pub fn truncation_ratio(&self, k1: usize, k2: usize) -> Option<f64> {
        let p = (k1 + k2) as i32;
        let m = self.len() as f64;
        // |psi_i^(k)| <= sqrt(2) (pi i)^k
        let tail = match self.decay {
            Decay::Unknown => return None,
            Decay::Poly(alpha) => {
                let e = 2.0 * alpha - p as f64 - 1.0;
                if e <= 0.0 {
                    f64::INFINITY
                } else {
                    2.0 * PI.powi(p) * m.powf(-e) / e
                }
            }
            Decay::Exp(gamma) => {
                let mut sum = 0.0;
                let mut i = self.len() + 1;
                loop {
                    let x = i as f64;
                    let term = 2.0 * (PI * x).powi(p) * (-2.0 * gamma * x).exp();
                    sum += term;
                    if (term <= sum * 1e-17 && x * 2.0 * gamma > p as f64) || term == 0.0 {
                        break;
                    }
                    i += 1;
                }
                sum
            }
        } * self.equivalent_lambda.unwrap_or(1.0);
        let partial: f64 = self
            .mu
            .iter()
            .enumerate()
            .map(|(idx, &mu)| {
                let i = idx + 1;
                if i == 1 {
                    if p == 0 {
                        mu.as_f64()
                    } else {
                        0.0
                    }
                } else {
                    2.0 * mu.as_f64() * (2.0 * PI * (i / 2) as f64).powi(p)
                }
            })
            .sum();
        Some(tail / partial)
    }

    fn warn_if_truncated(&self, k1: usize, k2: usize) {
        if let Some(r) = self.truncation_ratio(k1, k2) {
            if r > TRUNCATION_WARN_RATIO {
                log::warn!(
                    "spectral kernel truncated at M = {}: dropped tail is {r:.2e} of the partial sum for orders ({k1}, {k2})",
                    self.len()
                );
            }
        }
    }

    fn series(&self, k1: usize, k2: usize, x: T, x2: T) -> T {
        self.mu
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (idx, &mu)| {
                acc + mu
                    * (fourier_basis_deriv(idx + 1, k1, x) * fourier_basis_deriv(idx + 1, k2, x2))
            })
    }

    /// `n x M` matrix with entries `sqrt(mu_i) psi_i^(k)(x_r)`.
    pub fn features(&self, k: usize, xs: &[T]) -> DMatrix<T> {
        let roots: Vec<T> = self.mu.iter().map(|m| m.sqrt()).collect();
        DMatrix::from_fn(xs.len(), self.len(), |r, c| {
            roots[c] * fourier_basis_deriv(c + 1, k, xs[r])
        })
    }

    /// `kappa_hat^2 = sum_i i^(2m) mu_i / (lambda + mu_i)`, plus the integral
    /// of the remainder for polynomial decay when it converges.
    pub fn kappa_hat_sq(&self, lambda: T, m: usize) -> T {
        let partial = self
            .mu
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (idx, &mu)| {
                acc + T::from_usize_lossy(idx + 1).powi(2 * m as i32) * mu / (lambda + mu)
            });
        match (self.decay, self.equivalent_lambda) {
            (Decay::Poly(alpha), None) if 2.0 * m as f64 - 2.0 * alpha < -1.0 => {
                let from = self.len() as f64 + 0.5;
                partial + T::lit(poly_tail_integral(lambda.as_f64(), alpha, m, from))
            }
            _ => partial,
        }
    }

    /// `kappa_tilde^2 = sup_x sum_i nu_i psi_i^(m)(x)^2` over a
    /// [`SUP_GRID_LEN`]-point grid on `[0, 1]`.
    pub fn kappa_tilde_sq(&self, lambda: T, m: usize) -> T {
        let nu: Vec<T> = self.mu.iter().map(|&mu| mu / (lambda + mu)).collect();
        // psi_2j^(m)^2 + psi_2j+1^(m)^2 terms combine into
        // w_j [(nu_c + nu_s) + (-1)^m (nu_c - nu_s) cos(4 pi j x)]
        // and on the grid x_r = r / 2000 the cosine has period 1000 in j r.
        let steps = SUP_GRID_LEN - 1;
        let period = steps / 2;
        let table: Vec<T> = (0..period)
            .map(|q| T::lit((2.0 * PI * q as f64 / period as f64).cos()))
            .collect();
        let sign = if m.is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        let pairs: Vec<(usize, T, T)> = (1..=self.len() / 2)
            .map(|j| {
                let w = T::lit(2.0 * PI * j as f64).powi(2 * m as i32);
                let c = nu[2 * j - 1];
                let s = if 2 * j < nu.len() {
                    nu[2 * j]
                } else {
                    T::zero()
                };
                (j, w * (c + s), sign * w * (c - s))
            })
            .collect();
        let constant = if m == 0 { nu[0] } else { T::zero() };
        let mut best = T::zero();
        for r in 0..=steps {
            let v = pairs.iter().fold(constant, |acc, &(j, a, b)| {
                acc + a + b * table[(j * r) % period]
            });
            if v > best {
                best = v;
            }
        }
        best
    }

    pub fn effective_dimension(&self, lambda: T, m: usize) -> Result<EffectiveDimension<T>> {
        if !(lambda > T::zero()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(EffectiveDimension {
            kappa_tilde_sq: self.kappa_tilde_sq(lambda, m),
            kappa_hat_sq: self.kappa_hat_sq(lambda, m),
        })
    }
}

/// `int_from^inf x^(2m) / (lambda x^(2 alpha) + 1) dx`, requires `2m - 2 alpha < -1`.
fn poly_tail_integral(lambda: f64, alpha: f64, m: usize, from: f64) -> f64 {
    let p = 2.0 * m as f64;
    let q = 2.0 * alpha;
    let integrand = |x: f64| x.powf(p) / (lambda * x.powf(q) + 1.0);
    // beyond `split`, expand 1 / (1 + 1/(lambda x^q)) in powers of 1/(lambda x^q) <= 1/4
    let split = from.max((4.0 / lambda).powf(1.0 / q));
    let mut series = 0.0;
    for k in 0..200 {
        let e = q * (k as f64 + 1.0) - p - 1.0;
        let term = lambda.powi(-k - 1) * split.powf(-e) / e;
        let signed = if k % 2 == 0 { term } else { -term };
        series += signed;
        if term.abs() <= 1e-17 * series.abs() {
            break;
        }
    }
    let mut head = 0.0;
    if split > from {
        // Simpson in t = ln x
        let (a, b) = (from.ln(), split.ln());
        let steps = 2000;
        let h = (b - a) / steps as f64;
        let g = |t: f64| {
            let x = t.exp();
            integrand(x) * x
        };
        let mut s = g(a) + g(b);
        for i in 1..steps {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
        }
        head = s * h / 3.0;
    }
    head + series
}

/// Truncated-series evaluation of `d^k1_x d^k2_x' K(x, x')`. Logs a warning
/// when the truncation bound exceeds `1e-8` of the partial sum.
pub fn kernel_eval<T: Real>(sk: &SpectralKernel<T>, k1: usize, k2: usize, x: T, x2: T) -> T {
    sk.warn_if_truncated(k1, k2);
    sk.series(k1, k2, x, x2)
}

/// `nu_i = mu_i / (lambda + mu_i)`.
pub fn equivalent_kernel<T: Real>(sk: &SpectralKernel<T>, lambda: T) -> Result<SpectralKernel<T>> {
    sk.equivalent_kernel(lambda)
}

pub fn effective_dimension<T: Real>(
    sk: &SpectralKernel<T>,
    lambda: T,
    m: usize,
) -> Result<EffectiveDimension<T>> {
    sk.effective_dimension(lambda, m)
}

/// Least-squares slope of `log kappa_hat_m^2` against `log(-log lambda)`
/// (exponential family) or `-log lambda` (polynomial family), using the
/// default truncation of each family.
pub fn rate_check_effective_dim(
    family: SpectralFamily,
    param: f64,
    m: usize,
    lambdas: &[f64],
) -> Result<f64> {
    if lambdas.len() < 2 {
        return Err(invalid("need at least two lambda values"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(invalid("lambda values must lie in (0, 1)"));
    }
    let sk = match family {
        SpectralFamily::Exp => make_exp_kernel(param, DEFAULT_EXP_TRUNCATION)?,
        SpectralFamily::Poly => make_poly_kernel(param, DEFAULT_POLY_TRUNCATION)?,
    };
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            let x = match family {
                SpectralFamily::Exp => (-l.ln()).ln(),
                SpectralFamily::Poly => -l.ln(),
            };
            (x, sk.kappa_hat_sq(l, m).ln())
        })
        .collect();
    Ok(least_squares_slope(&points))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

impl<T: Real> Kernel<T> for SpectralKernel<T> {
    fn max_deriv_order(&self) -> usize {
        self.max_order
    }

    fn deriv_unchecked(&self, k1: usize, k2: usize, x: T, x2: T) -> T {
        self.series(k1, k2, x, x2)
    }

    fn gram(&self, xs: &[T]) -> DMatrix<T> {
        self.warn_if_truncated(0, 0);
        let f = self.features(0, xs);
        &f * f.transpose()
    }

    fn cross_gram(&self, k: usize, grid: &[T], xs: &[T]) -> Result<DMatrix<T>> {
        self.check_order(k)?;
        self.warn_if_truncated(k, 0);
        Ok(self.features(k, grid) * self.features(0, xs).transpose())
    }

    fn deriv_gram(&self, k: usize, grid: &[T]) -> Result<DMatrix<T>> {
        self.check_order(k)?;
        self.warn_if_truncated(k, k);
        let f = self.features(k, grid);
        Ok(&f * f.transpose())
    }
}
