//! Post-selected expansion of polarization W states with passive linear optics.
//!
//! The crate is split along the physics:
//!
//! - [`fock`]: multi-photon transition amplitudes of mode unitaries via permanents.
//! - [`circuit`]: optical element lists, compilation to mode unitaries, and the
//!   three reference circuit families (optimal, `H_m`, lossy).
//! - [`expansion`]: the eta amplitudes, exact-W verification and success probability.
//! - [`bounds`]: the `F`, `G`, `H` bounds over the coupling region and every closed form
//!   for the local maxima, plus a numeric sweep of the supporting inequalities.
//! - [`optimizer`]: independent numerical maximization of `H`, local-maximum checks
//!   and a Monte-Carlo search for counterexamples.

pub mod bounds;
pub mod circuit;
pub mod complex_json;
pub mod error;
pub mod expansion;
pub mod fock;
pub mod nelder_mead;
pub mod optimizer;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default tolerance for state-level checks (amplitude equalities, exact-W verdicts).
pub const STATE_TOL: f64 = 1e-10;

/// Default tolerance for algebraic identities such as unitarity.
pub const ALGEBRA_TOL: f64 = 1e-12;

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}
