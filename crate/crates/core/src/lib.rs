//! Numerical laboratory for pseudohermitian geometry on Heisenberg-type charts.

pub mod error;
pub mod clifford;
pub mod fieldcalc;
pub mod forms;
pub mod heisenberg;
pub mod mass;
pub mod pseudohermitian;
pub mod quadrature;
pub mod spinconn;
pub mod taylor;
pub mod yamabe;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
