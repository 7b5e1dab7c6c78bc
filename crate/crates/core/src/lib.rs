//! Kronecker-structured array algebra and array-variate distributions.
//!
//! Arrays are stored in `rvec` order (first index fastest). Covariances of the
//! form `C Cᵀ` with `C = A_1 ⊗ⁱ ... ⊗ⁱ A_i` are handled through the small
//! factors `A_j`; the dense monolinear form is available as a bridge for
//! checking and for deriving further properties.

pub mod array;
pub mod error;
pub mod exec;
pub mod gaussian;
pub mod io;
pub mod kron;
pub mod rng;
pub mod skew_normal;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod verify;

pub use array::{rmul, unrvec, DenseArray, Shape};
pub use error::{Error, Result};
pub use exec::Execution;
pub use gaussian::{ArrayNormalParams, MonolinearForm};
pub use kron::{FactorSet, Matrix};
pub use skew_normal::{ArraySkewNormalParams, DeltaMode};
pub use spectral::{array_least_squares, kron_pca, parameter_savings, PcaResult};
