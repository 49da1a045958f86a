//! Distance-based rigid formation control under inconsistent range measurements.
//!
//! Agents are single integrators in the plane or in space that keep prescribed
//! inter-agent distances with a gradient law. When the two endpoints of an edge
//! disagree on the measured distance, one of them (the *estimating agent*)
//! runs a local internal-model estimator that learns the discrepancy and
//! cancels it, so the formation still converges and stops.
//!
//! - [`rigidity`]: graphs, frameworks, rigidity/incidence matrices, rank tests,
//!   Henneberg-style construction.
//! - [`disturbance`]: offset + sinusoid discrepancy model and its exosystem.
//! - [`controller`]: per-agent gradient and estimator-based control laws.
//! - [`analysis`]: stability matrix, Hurwitz certification, estimating-agent
//!   selection rules, error/estimation coordinates.
//! - [`sim`]: fixed-step RK4 integration of the closed loop and run verdicts.
//! - [`scenario`] and [`cli`]: scenario files, built-in experiments and the
//!   command implementations behind the `formation` binary.

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod disturbance;
mod error;
pub mod linalg;
pub mod rigidity;
pub mod scenario;
pub mod sim;

pub use error::{FormationError, Result};
