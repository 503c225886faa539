//! Time-of-arrival spectra for free positive-energy Klein-Gordon wave packets
//! at a point detector.
//!
//! The library works in the momentum representation throughout, in natural
//! units (hbar = c = 1). It provides:
//!
//! - [`kinematics`]: the relativistic energy, the low-momentum regularization
//!   profile, the conjugate coordinate Z(k) with exact inverse, and momentum
//!   grids (composite Gauss-Legendre and uniform-in-Z).
//! - [`hilbert`]: the Klein-Gordon inner product, Gaussian wave packets,
//!   localized (Newton-Wigner) states, and the detector-indexed detected
//!   subspace with its orthogonal projection.
//! - [`toa_operator`]: the ordering-parameterized time-of-arrival operator in
//!   one and three dimensions, its raw and regularized eigenfunctions,
//!   Hermiticity-defect measurement and the canonical commutator check.
//! - [`spectra`]: arrival-time amplitudes, detection probabilities, the
//!   conditional mean arrival time, the classical baseline, and the interval
//!   (projector) algebra.
//! - [`verification`]: slow brute-force oracles for the structural
//!   identities (orthogonality kernel, completeness reconstruction,
//!   operator-ordering sweeps) that the fast paths must match.

// negated comparisons reject NaN along with the out-of-domain sign;
// indexed loops mirror the quadrature formulas
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::excessive_precision)]

pub mod error;
pub mod hilbert;
pub mod kinematics;
pub mod numerics;
pub mod plan;
pub mod recipe;
pub mod spectra;
pub mod toa_operator;
pub mod verification;

pub use error::{Error, Result};
pub use kinematics::{Mass, RadialGrid, RadialScheme, RegularizationCut, ZMap};
