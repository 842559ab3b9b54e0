//! Simulation and certification toolkit for switched linear systems with
//! mode-dependent equilibria, specialized to power-transmission frequency
//! dynamics.
//!
//! The crate builds aggregate and full-order grid models whose net load
//! switches between a finite set of values, executes the resulting hybrid
//! dynamics on hybrid time domains, constructs the limit set the
//! trajectories accumulate on, and synthesizes/verifies an input-to-state
//! stability certificate for arbitrarily fast load variation.

pub mod cert;
pub mod error;
pub mod grid;
pub mod hybrid;
pub mod linalg;
pub mod matjson;
pub mod omega;
pub mod scenario;

pub use error::{Error, Result};
