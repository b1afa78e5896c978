//! Small dense and sparse complex linear algebra.

pub mod dense;
pub mod eig;
pub mod expm;
pub mod lm;
pub mod sparse;

pub use dense::{inner, vec_norm, CMat};
pub use eig::{eig, eigenvalues, normalize_phase, Eigen};
pub use expm::{expm, propagator};
pub use sparse::Csr;
