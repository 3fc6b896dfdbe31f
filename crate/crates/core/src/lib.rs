//! Exact and numerical toolkit for the polyharmonic Liouville equation
//!
//! ```text
//! (-Δ)^m u = (2m-1)! e^{2mu}   in R^{2m},   ∫ e^{2mu} < ∞
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`exactconst`]: closed-form constants (γ_m, |S^{2m-1}|, |S^{2m}|, mean-value
//!   coefficients) as exact rational multiples of powers of π.
//! * [`polyfield`]: exact multivariate polynomials over ℚ, ball/sphere moments,
//!   the polyharmonic mean-value expansion and an Almansi-type generator.
//! * [`greenball`]: the Navier Green function of Δ^m on a ball, radial Navier
//!   solver and the exponential-integrability experiment.
//! * [`shooter`]: radial initial-value solver with dense output, total
//!   curvature α and tail diagnostics.
//! * [`represent`]: the logarithmic potential `v` of `e^{2mu}`, its Laplacians,
//!   even polynomial fitting and the rescaling identity.
//! * [`classify`]: standard vs non-standard verdicts from five independent
//!   criteria.

pub mod classify;
pub mod error;
pub mod exactconst;
pub mod greenball;
pub mod ode;
pub mod output;
pub mod polyfield;
pub mod quad;
pub mod represent;
pub mod shooter;

pub use error::{Error, Result};
