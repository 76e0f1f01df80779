//! Spectral toolkit for the one-dimensional Euler-Maxwell system with
//! velocity relaxation, linearized about a uniform magnetized steady state.
//!
//! After Fourier transform in space the linearized system splits, for each
//! wavenumber `k`, into two constant-coefficient ODE blocks:
//!
//! * the longitudinal block `(u_1, E_1)` (2x2), coupling the parallel
//!   velocity to the electrostatic field through the pressure/charge
//!   constraint, and
//! * the transverse block `(u_r, E_r, B_r)` (6x6 over real pairs), coupling
//!   the perpendicular velocity to the transverse Maxwell fields.
//!
//! The crate provides, layer by layer:
//!
//! * [`fourier`] - periodic grids, normalized DFTs, spectral derivatives and
//!   the 2/3-rule dealias filter;
//! * [`linalg`] - small dense complex matrices with an LU solver and a
//!   Pade-13 matrix exponential used as an independent oracle;
//! * [`spectrum`] - characteristic polynomials, labeled eigenvalue branches,
//!   asymptotic expansions with certified residuals, spectral gaps and
//!   eigenvector/left-eigenvector pairs;
//! * [`green`] - Green's (propagator) matrices for both blocks, spectral
//!   projector assembly, and pointwise decay envelopes;
//! * [`quad`] - adaptive Gauss-Kronrod quadrature for continuum norms;
//! * [`linsolve`] - exact mode-wise linear propagation on grids and
//!   continuum (integral) Sobolev norms of the evolved data;
//! * [`nonlinear`] - a dealiased pseudo-spectral integrating-factor solver
//!   for the full nonlinear system;
//! * [`diagnostics`] - Sobolev norms, energy/dissipation reports, decay-rate
//!   fits, envelope certification and interpolation-inequality checks.

pub mod diagnostics;
pub mod fourier;
pub mod green;
pub mod linalg;
pub mod linsolve;
pub mod nonlinear;
pub mod quad;
pub mod spectrum;

pub use num_complex::Complex64;
