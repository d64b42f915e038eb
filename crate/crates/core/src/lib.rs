//! Krylov-subspace model order reduction of second-order Helmholtz systems
//! with consecutive-ROM error estimation.

pub mod error;
pub mod fem;
pub mod linalg;
pub mod rom;
pub mod soar;
pub mod study;
pub mod system;

pub use error::{MorError, Result};
pub use num_complex::Complex64;
pub use system::SecondOrderSystem;
