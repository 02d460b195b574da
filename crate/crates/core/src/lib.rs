//! Spectral density estimation for symmetric operators by stochastic Lanczos
//! quadrature, with certified Wasserstein and Kolmogorov-Smirnov error bounds.
//!
//! The cumulative empirical spectral measure (CESM) of an `n x n` symmetric
//! matrix is `Φ(x) = #{λ_i <= x} / n`. [`slq::run`] estimates it from a few
//! Krylov subspaces and reports both a priori and a posteriori bounds on the
//! error of the estimate.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distribution;
pub mod error;
pub mod lanczos;
pub mod operator;
pub mod problems;
pub mod quadrature;
pub mod slq;
pub mod tridiag_eig;

pub use distribution::StepDistribution;
pub use error::{Error, Result};
pub use lanczos::{lanczos, LanczosOptions, Tridiagonal};
pub use operator::{
    CsrOperator, DenseOperator, DiagonalOperator, SpectralInterval, SymmetricOperator,
};
pub use quadrature::{gaussian_quadrature, QuadratureRule};
pub use slq::{plan, run, run_with_added_node, SlqOptions, SlqPlan, SlqReport};
