//! Modified Bessel functions of the second kind, in the form the Matérn
//! kernel needs them.
//!
//! The Matérn profile is built from `H_mu(r) = r^mu K_|mu|(r)`. These satisfy
//! `d/ds H_mu = -H_{mu-1}` with `s = r^2 / 2`, which is what turns kernel
//! derivatives into a ladder of profiles of decreasing order.

use crate::scalar::Real;

/// Integrand cutoff for the scaled quadrature, in units of `exp(-CUTOFF)`.
const CUTOFF: f64 = 42.0;

/// `exp(x) * (K_a(x), K_{a+1}(x))` for `x > 0` by the trapezoidal rule on
/// `K_a(x) = \int_0^inf exp(-x cosh t) cosh(a t) dt`, sharing the nodes.
///
/// The integrand is entire and decays doubly exponentially, so the
/// trapezoidal rule converges geometrically in the step size.
fn scaled_k_pair(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    let h = 0.1 / (x / 50.0).sqrt().max(1.0);
    let eh = h.exp();
    let mut et = 1.0f64;
    let (mut s0, mut s1) = (0.5, 0.5);
    let mut k = 1usize;
    loop {
        let t = h * k as f64;
        et *= eh;
        let cosh_t = 0.5 * (et + 1.0 / et);
        let expo = -x * (cosh_t - 1.0);
        let w = expo.exp();
        if a == 0.0 {
            s0 += w;
            s1 += w * cosh_t;
        } else {
            s0 += w * (a * t).cosh();
            s1 += w * ((a + 1.0) * t).cosh();
        }
        if expo + (a + 1.0) * t < -CUTOFF && t > 1.0 {
            break;
        }
        k += 1;
    }
    (s0 * h, s1 * h)
}

/// `exp(x) * K_a(x)` for `x > 0`.
#[cfg(test)]
fn scaled_bessel_k_quad(order: f64, x: f64) -> f64 {
    scaled_k_pair(order, x).0
}

/// `exp(x) K_{a + i}(x)` for `i = 0..len`, by upward recurrence
/// `K_{v+1} = K_{v-1} + (2v / x) K_v`, which is stable for `K`.
pub(crate) fn scaled_k_ladder(a: f64, x: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len.max(2));
    let (k0, k1) = scaled_k_pair(a, x);
    out.push(k0);
    out.push(k1);
    for i in 1..len.saturating_sub(1) {
        let v = a + i as f64;
        let next = out[i - 1] + 2.0 * v / x * out[i];
        out.push(next);
    }
    out.truncate(len);
    out
}

/// Coefficients of `sqrt(pi/(2r)) e^{-r} sum_k c_k (2r)^{-k}` for `K_{p+1/2}`.
fn half_integer_coeffs(p: usize) -> Vec<f64> {
    (0..=p)
        .map(|k| {
            // (p+k)! / (k! (p-k)!)
            let mut c = 1.0f64;
            for i in (p - k + 1)..=(p + k) {
                c *= i as f64;
            }
            for i in 1..=k {
                c /= i as f64;
            }
            c
        })
        .collect()
}

/// `H_mu(r) = r^mu K_|mu|(r)` for half-integer `mu`, closed form.
fn half_integer_profile<T: Real>(mu2: i64, r: T) -> T {
    // mu = mu2 / 2 with mu2 odd
    let sqrt_pi_2 = T::lit((std::f64::consts::PI / 2.0).sqrt());
    let p = ((mu2.abs() - 1) / 2) as usize;
    let coeffs = half_integer_coeffs(p);
    let e = (-r).exp();
    let mut sum = T::zero();
    if mu2 > 0 {
        // sqrt(pi/2) e^{-r} sum_k c_k r^{p-k} 2^{-k}
        for (k, c) in coeffs.iter().enumerate() {
            sum += T::lit(c / 2f64.powi(k as i32)) * r.powi((p - k) as i32);
        }
    } else {
        // sqrt(pi/2) e^{-r} sum_k c_k r^{-p-1-k} 2^{-k}
        for (k, c) in coeffs.iter().enumerate() {
            sum += T::lit(c / 2f64.powi(k as i32)) * r.powi(-((p + 1 + k) as i32));
        }
    }
    sqrt_pi_2 * e * sum
}

/// Precomputed description of how to evaluate the profile ladder for a given
/// smoothness `nu`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ProfileLadder {
    nu: f64,
    /// `2 nu` when it is an odd integer.
    half_integer: Option<i64>,
}

impl ProfileLadder {
    pub(crate) fn new(nu: f64) -> Self {
        let twice = 2.0 * nu;
        let half_integer =
            if (twice - twice.round()).abs() < 1e-12 && (twice.round() as i64) % 2 != 0 {
                Some(twice.round() as i64)
            } else {
                None
            };
        ProfileLadder { nu, half_integer }
    }

    /// `H_{nu - j}(r)` for `j = 0..=j_max`, `r > 0`.
    pub(crate) fn values<T: Real>(&self, r: T, j_max: usize) -> Vec<T> {
        if let Some(nu2) = self.half_integer {
            return (0..=j_max)
                .map(|j| half_integer_profile(nu2 - 2 * j as i64, r))
                .collect();
        }
        let rf = r.as_f64();
        let floor = self.nu.floor();
        let frac = self.nu - floor;
        let floor_i = floor as i64;
        // nonnegative orders nu - j = frac + (floor - j)
        let top_pos = floor_i.max(0) as usize;
        let pos = scaled_k_ladder(frac, rf, top_pos + 1);
        // negative orders |nu - j| = j - nu
        let need_neg = j_max as f64 > self.nu;
        let (neg_base, neg) = if need_neg {
            let base = if frac == 0.0 { 0.0 } else { 1.0 - frac };
            let top = (j_max as f64 - self.nu - base).round() as usize;
            (base, scaled_k_ladder(base, rf, top + 1))
        } else {
            (0.0, Vec::new())
        };
        let scale = (-rf).exp();
        (0..=j_max)
            .map(|j| {
                let mu = self.nu - j as f64;
                let kval = if mu >= 0.0 {
                    pos[(floor_i - j as i64) as usize]
                } else {
                    neg[((-mu) - neg_base).round() as usize]
                };
                T::lit(rf.powf(mu) * kval * scale)
            })
            .collect()
    }
}

/// `H_mu(0) = Gamma(mu) 2^{mu-1}` for `mu > 0`.
pub(crate) fn profile_at_zero(mu: f64) -> f64 {
    debug_assert!(mu > 0.0);
    statrs::function::gamma::gamma(mu) * 2f64.powf(mu - 1.0)
}
