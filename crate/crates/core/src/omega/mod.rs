//! Limit-set construction, distances, and contraction queries.
//!
//! Construction parallelizes over mode pairs; the built set is immutable
//! and distance queries are concurrent-safe.

mod contraction;
mod distance;
mod set;

pub use contraction::contraction_factor;
pub use distance::{distance_to_set, distance_trace, DistanceTrace};
pub use set::{
    build_omega_set, build_omega_set_with, flow_map_theta, point_segment_distance,
    OmegaBuildOptions, OmegaCurve, OmegaSet, DEFAULT_CHORD_TOL,
};
