//! Numerical laboratory for subharmonicity and convexity properties of
//! weighted Bergman kernels, Green potentials, Robin functions, Lelong
//! numbers and log-concave marginals on parametric families of domains.
//!
//! The crate is organised around a small expression language ([`expr`])
//! used to define weights and domains, a cut-cell quadrature layer
//! ([`quadrature`]), and on top of those the domain-specific engines:
//!
//! * [`bergman`] — weighted Bergman kernels via monomial Gram matrices,
//! * [`fibration`] — slice families `D_t` and discrete-Laplacian scans of
//!   `log K_t(z,z)`,
//! * [`prekopa`] — marginal integrals of log-concave densities and the
//!   one-dimensional convexity certificate,
//! * [`lelong`] — Lelong numbers, integrability indices and the
//!   attenuation function built from slice-disk kernels,
//! * [`potential`] — finite-difference Green potentials, energies and
//!   Robin functions.
//!
//! [`verify`] packages the full acceptance suite; [`catalog`] ships the
//! named families the suite runs on.

pub mod bergman;
pub mod catalog;
pub mod expr;
pub mod fibration;
pub mod lelong;
pub mod poisson;
pub mod potential;
pub mod prekopa;
pub mod quadrature;
pub mod scan;
pub mod verify;

/// Kernel values below `exp(LOG_FLOOR)` are reported as `-inf` on the log
/// scale. Shared by the Bergman and Lelong layers so "singular" means the
/// same thing everywhere.
pub const LOG_FLOOR: f64 = -40.0;
