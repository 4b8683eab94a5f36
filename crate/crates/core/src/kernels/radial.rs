//! Derivatives of stationary kernels written as `g(d) = F(a d^2)`.
//!
//! Since `u = a d^2` is quadratic, Faà di Bruno's formula collapses to
//!
//! ```text
//! g^(n)(d) = sum_{j=ceil(n/2)}^{n} n! / ((2j-n)! (n-j)!) (2 a d)^(2j-n) a^(n-j) F^(j)(u)
//! ```
//!
//! and mixed partials follow from `d^k1_x d^k2_x' g(x - x') = (-1)^k2 g^(k1+k2)(x - x')`.

use crate::scalar::Real;

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// `n! / ((2j - n)! (n - j)!)` as a float.
fn chain_coeff(n: usize, j: usize) -> f64 {
    (factorial(n) / (factorial(2 * j - n) * factorial(n - j))) as f64
}

/// `g^(n)(d)` given `f_derivs[j] = F^(j)(a d^2)` for every `j` in `ceil(n/2)..=n`.
pub(crate) fn quadratic_chain<T: Real>(n: usize, a: T, d: T, f_derivs: &[T]) -> T {
    let lo = n.div_ceil(2);
    let two_ad = T::lit(2.0) * a * d;
    let mut acc = T::zero();
    for j in lo..=n {
        let c = T::lit(chain_coeff(n, j));
        acc += c * two_ad.powi((2 * j - n) as i32) * a.powi((n - j) as i32) * f_derivs[j];
    }
    acc
}

/// `g^(n)(0)`: only the `j = n/2` term survives, and odd orders vanish.
pub(crate) fn quadratic_chain_at_zero<T: Real>(n: usize, a: T, f_half_deriv: T) -> T {
    if n % 2 == 1 {
        return T::zero();
    }
    let j = n / 2;
    T::lit(chain_coeff(n, j)) * a.powi(j as i32) * f_half_deriv
}

/// Sign of the mixed partial relative to `g^(k1+k2)`.
pub(crate) fn mixed_sign<T: Real>(k2: usize) -> T {
    if k2.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}
