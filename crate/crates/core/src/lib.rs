//! Numerical toolkit for nearly T⁻¹-invariant subspaces with finite defect in
//! truncated Hardy spaces H²(ℂ^m) and Dirichlet-type spaces D_α.

pub mod blaschke;
pub mod dirichlet;
pub mod error;
pub mod hardy;
pub mod nearinv;
pub mod planted;
pub mod numerics;

pub use error::{Error, Result};
pub use num_complex::Complex64;
