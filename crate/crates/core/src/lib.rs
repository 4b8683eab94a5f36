pub mod bands;
pub mod error;
pub mod gp;
pub mod hyperparam;
pub mod kernels;
pub mod linalg;
pub mod model_select;
pub mod scalar;
pub mod sim;
pub mod spectral;
pub mod spline;

pub use error::{GpError, Result};
pub use gp::{fit, Dataset, DerivPosterior, FittedGp, NoiseModel};
pub use kernels::{Kernel, KernelConfig, KernelFamily};
pub use scalar::Real;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FittedGp64 = FittedGp<f64>;
pub type FittedGp32 = FittedGp<f32>;
pub type KernelConfig64 = KernelConfig<f64>;
pub type KernelConfig32 = KernelConfig<f32>;
pub type DerivPosterior64 = DerivPosterior<f64>;
pub type DerivPosterior32 = DerivPosterior<f32>;
