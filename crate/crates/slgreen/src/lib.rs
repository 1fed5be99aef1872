//! Resolvent machinery for the operator -y'' + q(x) y on the real line,
//! for locally integrable potentials bounded below by 1.
//!
//! The crate builds the principal pair of solutions of -y'' + q y = 0 in a
//! logarithmic representation that never overflows, evaluates the resolvent
//! kernel G(x, t) and kernel-weighted integrals, solves -y'' + q y = f with
//! decaying boundary behavior, tabulates the local length scales of q and a
//! compactness indicator built on them, runs a defensive suite of kernel
//! inequality checks, and estimates truncated spectra.
//!
//! Entry points:
//! - [`potential::Potential`] / [`forcing::Forcing`]: validated piecewise
//!   specifications, loadable from JSON.
//! - [`pfss::solve_pfss`]: the principal pair on [-L, L].
//! - [`green::GreenKernel`]: kernel evaluation, `apply`, and `solve_bvp`.
//! - [`dfuncs`]: the scales d, d1, d2 and `compactness_indicator`.
//! - [`verify`]: inequality check suite and probe reports.
//! - [`spectrum`]: truncated eigenvalues and the discreteness diagnostic.

pub mod dfuncs;
pub mod error;
pub mod forcing;
pub mod green;
pub mod pfss;
pub mod potential;
pub mod spectrum;
pub mod verify;

mod interp;
mod ode;
mod quad;

pub use error::{Error, Result};
pub use forcing::Forcing;
pub use green::{GreenKernel, PNorm, SolutionClass, SolutionReport};
pub use pfss::{solve_pfss, Pfss};
pub use potential::Potential;
