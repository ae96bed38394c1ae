//! Spectral wave and damped-wave solvers on the unit square, time-reversal
//! approximate control driven by damping, and frequency-function checks for
//! planar harmonic functions.

pub mod control_loop;
pub mod damped_dynamics;
pub mod error;
pub mod experiment;
pub mod frequency_function;
pub mod interp;
mod ode;
pub mod quadrature;
pub mod spectral_basis;
pub mod wave_dynamics;

pub use error::{Error, Result};
pub use ode::OdeStats;
