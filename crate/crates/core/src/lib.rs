//! Quaternion tensor-ring toolkit.
//!
//! The crate builds up from quaternion scalars to a complete color-image
//! inpainting pipeline:
//!
//! * [`quat`] — quaternion arithmetic (Hamilton product, conjugate, modulus);
//! * [`qmat`] — dense quaternion matrices, the left/right products that a
//!   non-commutative scalar ring forces apart, and a quaternion SVD computed
//!   through the complex adjoint embedding;
//! * [`qtensor`] — dense order-`N` quaternion tensors with the column-major
//!   unfoldings (k-unfolding, mode-k, classical mode-k, circular) used by the
//!   decomposition and the solver;
//! * [`ring`] — the tensor-ring format `T(i_1,…,i_N) = Tr{Z_1(i_1)⋯Z_N(i_N)}`
//!   with chained order-3 cores, and an SVD-based learner;
//! * [`completion`] — low-rank tensor completion by ADMM over all circular
//!   unfoldings with a weighted nuclear-norm surrogate;
//! * [`augment`] — overlapping ket augmentation: reshaping an image matrix
//!   into a higher-order tensor through overlapping block splits;
//! * [`imaging`] — color images as pure-quaternion matrices, sampling masks,
//!   PSNR and SSIM;
//! * [`pipeline`] — the end-to-end inpainting run used by the CLI.

pub mod augment;
mod cmat;
pub mod completion;
mod error;
pub mod imaging;
pub mod pipeline;
pub mod qmat;
pub mod qtensor;
pub mod quat;
pub mod ring;

pub use error::{Error, Result};
pub use quat::Quaternion;
