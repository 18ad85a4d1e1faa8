//! Minimum-energy laser pulse synthesis for three-level population transfer.
//!
//! The driftless control problem lives on SO(3) (real-resonant controls) or
//! SU(3) (general complex controls), where it is a right-invariant
//! sub-Riemannian problem built from a Cartan decomposition. Geodesics are
//! available in closed form, which pins down the optimal pulses; the
//! remaining modules verify that synthesis independently (ODE propagation,
//! covector flow, and a direct numerical pulse optimizer).

pub mod cli;
pub mod driftfree;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod liealg;
pub mod matcore;
pub mod oracle;
pub mod pmpflow;
pub mod propagate;

pub use error::{Error, Result};

/// Optimal transfer time √3·π/2 for the arclength-parametrized geodesics.
pub const OPTIMAL_TIME: f64 = 2.720699046351327;
