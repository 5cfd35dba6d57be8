//! Numerical machinery for concavity properties of solutions to parabolic
//! equations.
//!
//! A concavity property is given by an admissible function `F` on `[0, a)`:
//! a nonnegative function `u` is *F-concave* when `F(u)` is concave on its
//! support. The crate provides:
//!
//! * [`admissible`]: the families `Φ_α`, `L_α`, `H_a`, tabulated `F`, and the
//!   α-means;
//! * [`hierarchy`]: comparison of properties (which one is weaker), affine
//!   equivalence, closure under scalar multiples and the `H_a`
//!   approximation of log-concave functions;
//! * [`criterion`]: sampled checks of the preservation criteria for the heat
//!   flow, semilinear and variable-coefficient equations, and the
//!   initial-rate tests for porous-medium and p-Laplace flows;
//! * [`flow`]: heat kernels, Crank–Nicolson and ADI solvers, a semilinear
//!   IMEX scheme and the hot function `h` with its inverse;
//! * [`concavity`]: discrete F-, log- and quasi-concavity checks, F-concave
//!   envelopes and the disruption experiment.
//!
//! [`experiment`] ties these together into reproducible, report-producing
//! runs used by the command-line tool.

pub mod admissible;
pub mod concavity;
pub mod criterion;
mod error;
pub mod experiment;
pub mod flow;
pub mod hierarchy;
mod numerics;
pub mod sampling;

pub use admissible::{alpha_mean, AdmissibleFunction, Family};
pub use error::{Error, Result};
pub use flow::{GridFunction, FlowSnapshot};
pub use numerics::Witness;
pub use sampling::Window;
