//! Exact symbolic calculus for opers and their integrable structures:
//! jet-algebra differential polynomials, pseudodifferential and q-difference
//! operators, Miura factorizations, local Poisson structures with mode
//! brackets, a truncated free-field module, q-characters, and the deformed
//! Virasoro structure function — all over exact rational-function coefficients.

pub mod error;
pub mod jet;
pub mod param;
pub mod cartan;
pub mod modes;
pub mod oper;
pub mod poisson;
pub mod psdo;
pub mod qchar;
pub mod qdiff;
pub mod qdist;
pub mod qlimit;
pub mod qvir;
pub mod series;
pub mod wakimoto;

pub use error::{Error, Result};
