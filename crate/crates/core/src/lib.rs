//! Numerical laboratory for semilinear Euler–Poisson–Darboux type equations
//! `ψ_tt + (2/t)ψ_t − t^(−2k) Aψ = f(ψ)` with variable-coefficient elliptic parts.

pub mod error;
pub mod exponents;
pub mod functionals;
pub mod grid;
pub(crate) mod linalg;
pub mod operators;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
