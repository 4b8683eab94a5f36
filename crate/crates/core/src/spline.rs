//! Random-series B-spline comparator.
//!
//! `f(x) = b_J(x)^T beta` with cubic B-splines on uniform clamped knots and
//! `beta ~ N(0, sigma^2 I_J)`, observed with noise variance `sigma^2`.

use nalgebra::{DMatrix, DVector};

use crate::bands::{simultaneous_band, CredibleBand};
use crate::error::{invalid, GpError, Result};
use crate::gp::{Dataset, DerivPosterior};
use crate::linalg::cholesky_with_jitter;
use crate::scalar::Real;

/// Spline order (cubic).
pub const ORDER: usize = 4;
/// Highest derivative order supported by the comparator.
pub const MAX_DERIV_ORDER: usize = 2;
/// Band inflation factor `rho`: spline band radii are multiplied by `1 + rho`.
pub const BAND_INFLATION: f64 = 0.5;

/// Default interior-knot counts searched by [`select_knots`].
pub fn default_knot_grid() -> Vec<usize> {
    (1..=10).collect()
}

fn knots<T: Real>(n_basis: usize) -> Vec<T> {
    let interior = n_basis - ORDER;
    let mut t = vec![T::zero(); ORDER];
    for i in 1..=interior {
        t.push(T::from_usize_lossy(i) / T::from_usize_lossy(interior + 1));
    }
    t.extend(std::iter::repeat_n(T::one(), ORDER));
    t
}

fn ratio<T: Real>(num: T, den: T) -> T {
    if den > T::zero() {
        num / den
    } else {
        T::zero()
    }
}

/// All `len(t) - p - 1` B-splines of degree `p` at `x` in knot span `span`.
fn cox_de_boor<T: Real>(t: &[T], p: usize, x: T, span: usize) -> Vec<T> {
    let mut b: Vec<T> = (0..t.len() - 1)
        .map(|i| if i == span { T::one() } else { T::zero() })
        .collect();
    for q in 1..=p {
        b = (0..t.len() - q - 1)
            .map(|i| {
                ratio(x - t[i], t[i + q] - t[i]) * b[i]
                    + ratio(t[i + q + 1] - x, t[i + q + 1] - t[i + 1]) * b[i + 1]
            })
            .collect();
    }
    b
}

/// `d`-th derivative of the degree-`p` B-splines.
fn cox_de_boor_deriv<T: Real>(t: &[T], p: usize, d: usize, x: T, span: usize) -> Vec<T> {
    if d == 0 {
        return cox_de_boor(t, p, x, span);
    }
    let lower = cox_de_boor_deriv(t, p - 1, d - 1, x, span);
    let pf = T::from_usize_lossy(p);
    (0..t.len() - p - 1)
        .map(|i| {
            pf * (ratio(lower[i], t[i + p] - t[i]) - ratio(lower[i + 1], t[i + p + 1] - t[i + 1]))
        })
        .collect()
}

/// Values (or `deriv`-th derivatives) of the `n_basis` cubic B-splines at
/// `x in [0, 1]`.
pub fn bspline_basis<T: Real>(n_basis: usize, x: T, deriv: usize) -> Result<Vec<T>> {
    if n_basis < ORDER {
        return Err(invalid(format!(
            "need at least {ORDER} basis functions, got {n_basis}"
        )));
    }
    if deriv > MAX_DERIV_ORDER {
        return Err(GpError::OrderExceeded {
            requested: deriv,
            max: MAX_DERIV_ORDER,
        });
    }
    if !(x >= T::zero() && x <= T::one()) {
        return Err(GpError::Domain { x: x.as_f64() });
    }
    let t = knots::<T>(n_basis);
    // last span with t[span] <= x; x = 1 falls in the final nonempty span
    let mut span = ORDER - 1;
    while span + 1 < n_basis && t[span + 1] <= x {
        span += 1;
    }
    Ok(cox_de_boor_deriv(&t, ORDER - 1, deriv, x, span))
}

/// Affine map of an interval `[a, b]` onto the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Domain<T> {
    pub fn unit() -> Self {
        Domain {
            lo: T::zero(),
            hi: T::one(),
        }
    }

    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("empty spline domain [{lo}, {hi}]")));
        }
        Ok(Domain { lo, hi })
    }

    fn width(&self) -> T {
        self.hi - self.lo
    }

    fn to_unit(&self, x: T) -> Result<T> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(GpError::Domain { x: x.as_f64() });
        }
        let u = (x - self.lo) / self.width();
        Ok(if u > T::one() { T::one() } else { u })
    }
}

/// Design matrix of `deriv`-th basis derivatives, rows indexed by `xs`.
pub fn design_matrix<T: Real>(
    n_basis: usize,
    xs: &[T],
    deriv: usize,
    domain: Domain<T>,
) -> Result<DMatrix<T>> {
    let scale = domain.width().powi(deriv as i32);
    let mut b = DMatrix::zeros(xs.len(), n_basis);
    for (i, &x) in xs.iter().enumerate() {
        let row = bspline_basis(n_basis, domain.to_unit(x)?, deriv)?;
        for (j, v) in row.into_iter().enumerate() {
            b[(i, j)] = v / scale;
        }
    }
    Ok(b)
}

/// Fitted B-spline comparator.
#[derive(Debug, Clone, PartialEq)]
pub struct BsplineModel<T: Real> {
    /// Degrees of freedom `J = N + 4`.
    pub n_basis: usize,
    pub beta_mean: DVector<T>,
    pub sigma2: T,
    pub domain: Domain<T>,
    /// `(B^T B + I_J)^{-1}`.
    precision_inv: DMatrix<T>,
}

impl<T: Real> BsplineModel<T> {
    /// Number of interior knots `N = J - 4`.
    pub fn interior_knots(&self) -> usize {
        self.n_basis - ORDER
    }

    pub fn deriv_mean(&self, k: usize, grid: &[T]) -> Result<DVector<T>> {
        Ok(design_matrix(self.n_basis, grid, k, self.domain)? * &self.beta_mean)
    }

    /// Posterior of `f^(k)`: mean `B_k beta_mean`, covariance
    /// `sigma^2 B_k (B^T B + I)^{-1} B_k^T`.
    pub fn posterior(&self, k: usize, grid: &[T]) -> Result<DerivPosterior<T>> {
        let bk = design_matrix(self.n_basis, grid, k, self.domain)?;
        let mean = &bk * &self.beta_mean;
        let cov = &bk * &self.precision_inv * bk.transpose() * self.sigma2;
        let cov = (&cov + cov.transpose()) * T::lit(0.5);
        Ok(DerivPosterior {
            k,
            grid: grid.to_vec(),
            mean,
            cov,
        })
    }

    /// Simultaneous band with radius inflated by `1 + rho`.
    pub fn credible_band(
        &self,
        k: usize,
        grid: &[T],
        level: T,
        n_samples: usize,
        seed: u64,
    ) -> Result<CredibleBand<T>> {
        let post = self.posterior(k, grid)?;
        let band = simultaneous_band(&post, level, n_samples, seed)?;
        Ok(band.inflated(T::one() + T::lit(BAND_INFLATION)))
    }
}

struct SplineSystem<T: Real> {
    b: DMatrix<T>,
    a_inv: DMatrix<T>,
    bty: DVector<T>,
}

fn spline_system<T: Real>(
    data: &Dataset<T>,
    n_basis: usize,
    domain: Domain<T>,
) -> Result<SplineSystem<T>> {
    if data.is_empty() {
        return Err(invalid("need at least one observation"));
    }
    let b = design_matrix(n_basis, &data.x, 0, domain)?;
    let mut a = b.tr_mul(&b);
    for i in 0..n_basis {
        a[(i, i)] += T::one();
    }
    let factor = cholesky_with_jitter(&a, T::one(), 1e-10, 1e-6, true)?;
    let a_inv = factor.chol.inverse();
    let bty = b.tr_mul(&data.y_vector());
    Ok(SplineSystem { b, a_inv, bty })
}

/// Fits on covariates in `[0, 1]`.
pub fn fit_bspline<T: Real>(data: &Dataset<T>, n_basis: usize) -> Result<BsplineModel<T>> {
    fit_bspline_on(data, n_basis, Domain::unit())
}

/// Fits on covariates in `domain`, mapped affinely onto `[0, 1]`.
pub fn fit_bspline_on<T: Real>(
    data: &Dataset<T>,
    n_basis: usize,
    domain: Domain<T>,
) -> Result<BsplineModel<T>> {
    let sys = spline_system(data, n_basis, domain)?;
    let beta_mean = &sys.a_inv * &sys.bty;
    let y = data.y_vector();
    // Y^T (B B^T + I)^{-1} Y = Y^T Y - (B^T Y)^T beta_mean
    let quad = y.dot(&y) - sys.bty.dot(&beta_mean);
    let quad = if quad > T::zero() { quad } else { T::zero() };
    Ok(BsplineModel {
        n_basis,
        beta_mean,
        sigma2: quad / T::from_usize_lossy(data.len()),
        domain,
        precision_inv: sys.a_inv,
    })
}

/// Leave-one-out score of the spline smoother `H = B (B^T B + I)^{-1} B^T`.
pub fn bspline_loocv<T: Real>(data: &Dataset<T>, n_basis: usize, domain: Domain<T>) -> Result<T> {
    if data.len() < 2 {
        return Err(invalid("leave-one-out needs at least two observations"));
    }
    let sys = spline_system(data, n_basis, domain)?;
    let fitted = &sys.b * (&sys.a_inv * &sys.bty);
    let hb = &sys.b * &sys.a_inv;
    let leverage: Vec<T> = (0..data.len())
        .map(|i| hb.row(i).dot(&sys.b.row(i)))
        .collect();
    crate::model_select::loo_from_smoother(&data.y, fitted.as_slice(), &leverage)
}

/// Chooses `N` from `knot_grid` by leave-one-out; ties go to the smaller `N`.
pub fn select_knots<T: Real>(data: &Dataset<T>, knot_grid: &[usize]) -> Result<BsplineModel<T>> {
    select_knots_on(data, knot_grid, Domain::unit())
}

pub fn select_knots_on<T: Real>(
    data: &Dataset<T>,
    knot_grid: &[usize],
    domain: Domain<T>,
) -> Result<BsplineModel<T>> {
    if knot_grid.is_empty() {
        return Err(invalid("knot grid is empty"));
    }
    let mut grid = knot_grid.to_vec();
    grid.sort_unstable();
    let mut best: Option<(usize, T)> = None;
    for &n_knots in &grid {
        let score = bspline_loocv(data, n_knots + ORDER, domain)?;
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((n_knots, score));
        }
    }
    let (n_knots, _) = best.expect("grid is nonempty");
    fit_bspline_on(data, n_knots + ORDER, domain)
}
