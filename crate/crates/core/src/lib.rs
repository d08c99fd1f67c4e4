//! Numerical toolkit for parameterisation-free relativistic kinetics on the
//! conic bundle over a spacetime.
//!
//! The crate builds Vlasov (spray) vector fields and Vlasov bivectors on the
//! slit tangent bundle, transforms them between kinematic domains, integrates
//! prolongations and density transport along characteristics, and computes
//! fiber-integrated currents and stress-energy.

pub mod bivector;
pub mod density;
pub mod error;
pub mod geometry;
pub mod observables;
pub mod phase_space;
pub mod quadrature;
pub mod rng;
pub mod spray;
pub mod trajectories;
pub mod vlasov;

pub use error::{ConicError, Result};
