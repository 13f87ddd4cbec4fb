//! Random tensor estimates for Wick-renormalized Gaussian chaos.
//!
//! The crate builds the random tensor
//!
//! ```text
//! G[n_A, n_B] = sum over n_J of h[n_J, n_A, n_B] * :prod_j g_{n_j}^{iota_j}:
//! ```
//!
//! where `:...:` is the Laguerre-type renormalization of a product of
//! complex Gaussians, and measures `E[|G|^p]^{1/p}` against the flattening
//! norms of the deterministic coefficient tensor `h`.
//!
//! Modules, bottom up:
//!
//! * [`tensor`]: labeled sparse tensors over truncated lattices and partitions
//!   of their label sets.
//! * [`norms`]: matricization, spectral norms, flattening norms, contraction.
//! * [`wick`]: exact Laguerre/Hermite polynomials, the renormalization and an
//!   exact Gaussian moment oracle.
//! * [`sampler`]: counter-based Gaussian fields and their rotation.
//! * [`estimator`]: realization of `G`, Monte Carlo moments and the bound,
//!   decoupling and Khintchine experiments.
//! * [`experiment`]: configuration, tensor families, orchestration and
//!   persistence behind the `tensor-chaos` binary.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod estimator;
pub mod experiment;
pub mod norms;
pub mod sampler;
pub mod tensor;
pub mod wick;

pub use error::{Error, Result};
pub use num_complex::Complex64;
