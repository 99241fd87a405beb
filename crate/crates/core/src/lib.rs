//! Unitary dynamics for one-dimensional Schrödinger operators with fixed
//! point (delta) interactions, built from Fourier-domain Dyson kernels.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: momentum lattice, discrete Fourier–Plancherel transform,
//!   kernel matrices and operator-norm estimates.
//! * [`potentials`]: delta configurations, mollifier families and their
//!   Fourier transforms.
//! * [`dyson`]: first-order kernel, the order-`n` recursion and certified
//!   summation of the series.
//! * [`propagator`]: full propagators, a split-step reference integrator and
//!   convergence studies (mollified → delta).
//! * [`resolvent`]: Laplace-transform resolvents, norm-resolvent convergence
//!   and finite-rank continuity.
//! * [`algebra`]: a lattice Schrödinger representation of the resolvent
//!   algebra over `(ℝ², σ)` and checks of its defining relations.
//!
//! All matrices acting on `L²` are stored in *weighted* form
//! `A_jk = √(w_j w_k) K(p_j, p_k)`, so that the Euclidean operator norm of
//! `A` is the discrete `L²` operator norm of the kernel `K`.

extern crate blas_src;

pub mod algebra;
pub mod dyson;
mod error;
pub mod grid;
mod linalg;
pub mod potentials;
pub mod propagator;
pub mod quadrature;
pub mod resolvent;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version, embedded in experiment summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
