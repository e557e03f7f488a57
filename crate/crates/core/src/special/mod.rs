//! Special functions: Gamma, modified Bessel functions, test-function factors
//! and quadrature cross-checks.

pub mod bessel;
pub mod eigen;
pub mod gamma;
pub mod oracle;
pub mod testfn;

pub use bessel::{bessel_i, bessel_i_scaled, bessel_k, bessel_k_scaled};
pub use eigen::{eigenfunction, growth_bound_check, phi_l, Eigenfunction, GrowthBound};
pub use gamma::{gamma, incomplete_gamma_upper, ln_gamma};
pub use testfn::{
    lambda1, lambda_eds, lambda_tilde, lambda_tilde_deriv, lambda_tilde_residual, weighted_integral_bound_check,
    ValueDeriv,
    WeightedBound,
};
