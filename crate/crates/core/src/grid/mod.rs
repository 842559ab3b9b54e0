//! Power-system model assembly: aggregate and full-order matrices,
//! switched-mode packaging, and the derived displacement constants.

mod aggregate;
mod full_order;
mod modes;
mod params;

pub use aggregate::{aggregate_effective, build_aggregate_matrices};
pub use full_order::{
    build_full_matrices, reduce_zero_mode, translation_direction, FullModelLayout, ZERO_MODE_TOL,
};
pub use modes::{
    build_mode, compute_c, compute_delta3, shift_gain, two_mode_example, LoadBox, ModeSpec,
    SwitchedSystem,
};
pub use params::{DeaParams, GeneratorParams, Line, NetworkParams, SecondaryParams};
