//! Shared numerical machinery: compensated summation, Gauss-Legendre rules,
//! finite-difference stencils, adaptive quadrature and uniform-grid Fourier
//! sums. Nothing in here knows about the physics.

pub mod fd;
pub mod fourier;
pub mod gauss;
pub mod quadrature;
pub mod sum;
