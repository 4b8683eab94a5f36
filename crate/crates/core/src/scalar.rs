use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the numerical core is written against: `f32` or `f64`.
///
/// Math and linear algebra come from [`RealField`]; conversions to and from
/// `f64` literals come from num-traits.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("finite conversion to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `n` equally spaced points from `a` to `b`, both ends included.
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        b
                    } else {
                        a + step * T::from_usize_lossy(i)
                    }
                })
                .collect()
        }
    }
}

/// `n` log-spaced points from `a` to `b` (both positive), both ends included.
pub fn logspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    linspace(a.ln(), b.ln(), n)
        .into_iter()
        .map(|v| v.exp())
        .collect()
}
