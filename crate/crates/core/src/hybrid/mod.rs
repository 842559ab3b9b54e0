//! Hybrid execution engine: flows on hybrid time domains, timer automata,
//! jump policies, exogenous load generators, and dwell-time verification.
//!
//! One run is strictly sequential; independent runs may execute
//! concurrently and returned arcs are immutable.

mod adt;
mod config;
mod coords;
mod hdelta;
mod iss;
mod rk4;
mod selection;
mod state;
mod validate;

pub use adt::verify_adt;
pub use config::{
    JumpPerturbation, JumpTiming, LoadGenerator, ModeSelection, SimConfig, TimerRatePolicy,
};
pub use coords::{shift_into_slow_coords, to_original_coords};
pub use hdelta::simulate_hdelta;
pub use iss::simulate_iss;
pub use rk4::{Rk4, EVENT_TIME_TOL};
pub use state::{ArcKind, HybridArc, HybridState, HybridTimeDomain, JumpRecord, Sample};
pub use validate::validate_arc;
