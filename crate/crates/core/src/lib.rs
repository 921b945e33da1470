//! Numerical toolkit for multiply connected economies.
//!
//! - [`relations`]: confidence preorders on finite choice sets and their
//!   ordinal influence representations.
//! - [`optimize`]: profit and aim-function maximization over polynomial
//!   curves, plus Cobb-Douglas budget optimization.
//! - [`topology`]: simplicial complexes of market networks, Betti numbers and
//!   genus-driven profit loss.
//! - [`dynamics`]: planar linear product/influence dynamics and the
//!   stochastic supply-demand equation.
//! - [`wormhole`]: threshold-triggered capital leakage with conservation
//!   accounting, and the polity/economy coupling potential.

pub mod dynamics;
pub mod optimize;
pub mod polynomial;
pub mod relations;
pub mod topology;
pub mod wormhole;

pub use polynomial::Polynomial;
