//! Covariance kernels with exact mixed partial derivatives.

mod bessel;
mod radial;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GpError, Result};
use crate::scalar::Real;

use bessel::{profile_at_zero, ProfileLadder};
use radial::{mixed_sign, quadratic_chain, quadratic_chain_at_zero};

/// Highest derivative order exposed for the squared-exponential kernel.
pub const SE_MAX_DERIV_ORDER: usize = 8;

/// Matérn separations `sqrt(2 nu) |d|` below this are evaluated as the diagonal limit.
const MATERN_DIAGONAL_RADIUS: f64 = 1e-10;

/// A covariance kernel on the real line that can evaluate
/// `d^k1_x d^k2_x' K(x, x')` exactly up to [`Kernel::max_deriv_order`].
pub trait Kernel<T: Real>: Send + Sync {
    /// Largest `k` such that `K` is `2k` times differentiable on the diagonal.
    fn max_deriv_order(&self) -> usize;

    /// Mixed partial without the order check.
    fn deriv_unchecked(&self, k1: usize, k2: usize, x: T, x2: T) -> T;

    fn eval(&self, x: T, x2: T) -> T {
        self.deriv_unchecked(0, 0, x, x2)
    }

    fn check_order(&self, k: usize) -> Result<()> {
        let max = self.max_deriv_order();
        if k > max {
            return Err(GpError::OrderExceeded { requested: k, max });
        }
        Ok(())
    }

    fn eval_deriv(&self, k1: usize, k2: usize, x: T, x2: T) -> Result<T> {
        self.check_order(k1)?;
        self.check_order(k2)?;
        Ok(self.deriv_unchecked(k1, k2, x, x2))
    }

    /// `K(X, X)`.
    fn gram(&self, xs: &[T]) -> DMatrix<T> {
        let n = xs.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(xs[i], xs[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// `K_{k0}(grid, X)`: entry `(i, j)` is `d^k_x K(grid_i, X_j)`.
    fn cross_gram(&self, k: usize, grid: &[T], xs: &[T]) -> Result<DMatrix<T>> {
        self.check_order(k)?;
        Ok(DMatrix::from_fn(grid.len(), xs.len(), |i, j| {
            self.deriv_unchecked(k, 0, grid[i], xs[j])
        }))
    }

    /// `K_{kk}(grid, grid)`.
    fn deriv_gram(&self, k: usize, grid: &[T]) -> Result<DMatrix<T>> {
        self.check_order(k)?;
        let m = grid.len();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = self.deriv_unchecked(k, k, grid[i], grid[j]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }
}

/// The three kernel families used for plug-in regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Matern,
    SquaredExponential,
    Sobolev2,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern => "matern",
            KernelFamily::SquaredExponential => "se",
            KernelFamily::Sobolev2 => "sobolev",
        }
    }
}

/// Kernel family plus its parameters.
///
/// * Matérn: `2^{1-nu}/Gamma(nu) (sqrt(2 nu) |d|)^nu K_nu(sqrt(2 nu) |d|)`
/// * squared exponential: `exp(-(x - x')^2)`
/// * second-order Sobolev: `1 + x x' + min^2 (3 max - min) / 6`
///
/// None of them carries a lengthscale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelConfig<T> {
    Matern {
        nu: T,
    },
    #[serde(rename = "se")]
    SquaredExponential,
    #[serde(rename = "sobolev")]
    Sobolev2,
}

impl<T: Real> KernelConfig<T> {
    pub fn matern(nu: T) -> Result<Self> {
        if !(nu > T::lit(0.5)) || !nu.is_finite() {
            return Err(invalid(format!(
                "Matérn smoothness must exceed 1/2, got {nu}"
            )));
        }
        Ok(KernelConfig::Matern { nu })
    }

    pub fn squared_exponential() -> Self {
        KernelConfig::SquaredExponential
    }

    pub fn sobolev() -> Self {
        KernelConfig::Sobolev2
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            KernelConfig::Matern { .. } => KernelFamily::Matern,
            KernelConfig::SquaredExponential => KernelFamily::SquaredExponential,
            KernelConfig::Sobolev2 => KernelFamily::Sobolev2,
        }
    }

    pub fn nu(&self) -> Option<T> {
        match self {
            KernelConfig::Matern { nu } => Some(*nu),
            _ => None,
        }
    }

    /// Human-readable label, e.g. `matern(2.5)`.
    pub fn label(&self) -> String {
        match self {
            KernelConfig::Matern { nu } => format!("matern({nu})"),
            other => other.family().name().to_string(),
        }
    }

    fn matern_derivative(nu: T, n: usize, d: T) -> T {
        let nu_f = nu.as_f64();
        let norm = T::lit(2f64.powf(1.0 - nu_f) / statrs::function::gamma::gamma(nu_f));
        let r = (T::lit(2.0) * nu).sqrt() * d.abs();
        let sign = |j: usize| {
            if j.is_multiple_of(2) {
                T::one()
            } else {
                -T::one()
            }
        };
        if r.as_f64() < MATERN_DIAGONAL_RADIUS {
            if n % 2 == 1 {
                return T::zero();
            }
            let j = n / 2;
            let h0 = T::lit(profile_at_zero(nu_f - j as f64));
            return quadratic_chain_at_zero(n, nu, sign(j) * norm * h0);
        }
        let ladder = ProfileLadder::new(nu_f).values(r, n);
        let f: Vec<T> = ladder
            .iter()
            .enumerate()
            .map(|(j, h)| sign(j) * norm * *h)
            .collect();
        quadratic_chain(n, nu, d, &f)
    }

    fn se_derivative(n: usize, d: T) -> T {
        let e = (-d * d).exp();
        let f: Vec<T> = (0..=n).map(|j| if j % 2 == 0 { e } else { -e }).collect();
        quadratic_chain(n, T::one(), d, &f)
    }

    fn sobolev_derivative(k1: usize, k2: usize, x: T, x2: T) -> T {
        let half = T::lit(0.5);
        match (k1, k2) {
            (0, 0) => {
                let (lo, hi) = if x <= x2 { (x, x2) } else { (x2, x) };
                T::one() + x * x2 + lo * lo * (T::lit(3.0) * hi - lo) / T::lit(6.0)
            }
            (1, 0) => {
                if x <= x2 {
                    x2 + x * x2 - half * x * x
                } else {
                    x2 + half * x2 * x2
                }
            }
            (0, 1) => Self::sobolev_derivative(1, 0, x2, x),
            (1, 1) => T::one() + if x <= x2 { x } else { x2 },
            _ => unreachable!("Sobolev order checked by caller"),
        }
    }
}

impl<T: Real> Kernel<T> for KernelConfig<T> {
    fn max_deriv_order(&self) -> usize {
        match self {
            KernelConfig::Matern { nu } => {
                let c = nu.as_f64().ceil() as usize;
                c.saturating_sub(1)
            }
            KernelConfig::SquaredExponential => SE_MAX_DERIV_ORDER,
            KernelConfig::Sobolev2 => 1,
        }
    }

    fn deriv_unchecked(&self, k1: usize, k2: usize, x: T, x2: T) -> T {
        match self {
            KernelConfig::Matern { nu } => {
                mixed_sign::<T>(k2) * Self::matern_derivative(*nu, k1 + k2, x - x2)
            }
            KernelConfig::SquaredExponential => {
                mixed_sign::<T>(k2) * Self::se_derivative(k1 + k2, x - x2)
            }
            KernelConfig::Sobolev2 => Self::sobolev_derivative(k1, k2, x, x2),
        }
    }

    fn eval(&self, x: T, x2: T) -> T {
        match self {
            // symmetric in (x, x2) bit for bit
            KernelConfig::Matern { nu } => Self::matern_derivative(*nu, 0, (x - x2).abs()),
            KernelConfig::SquaredExponential => {
                let d = (x - x2).abs();
                (-d * d).exp()
            }
            KernelConfig::Sobolev2 => Self::sobolev_derivative(0, 0, x, x2),
        }
    }
}

/// The Matérn smoothness grid `{2, 2.5, 3, ..., 10}` used for cross validation.
pub fn default_nu_grid<T: Real>() -> Vec<T> {
    (4..=20).map(|i| T::lit(i as f64 / 2.0)).collect()
}
