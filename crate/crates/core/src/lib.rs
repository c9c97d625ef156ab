//! Cartesian ↔ spherical irreducible tensors.

pub mod angular;
pub mod basis;
pub mod error;
pub mod harmonics;
pub mod multipoles;
pub mod oracle;
pub mod poly;
pub mod quadrature;
pub mod rotation;
pub mod special;
pub mod tensor;
pub mod verify;
pub mod wigner_eckart;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use tensor::Tensor;
