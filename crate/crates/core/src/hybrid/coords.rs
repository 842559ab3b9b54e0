//! Mapping recorded arcs back to the original (unshifted) coordinates.

use nalgebra::DVector;

use crate::error::Result;
use crate::grid::SwitchedSystem;
use crate::hybrid::state::{ArcKind, HybridArc};

/// Per-sample inversion of the active mode's coordinate shift.
///
/// Slow-switching arcs were shifted by the load-dependent equilibrium:
/// `x = y - A_q^{-1} B_q u~`. ISS arcs were shifted by the mode
/// equilibrium: `x = y - A_q^{-1} b_q = y + y*_q`.
pub fn to_original_coords(arc: &HybridArc, sys: &SwitchedSystem) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(arc.samples.len());
    for s in &arc.samples {
        let x = match arc.kind {
            ArcKind::SlowSwitching => {
                let gain = sys.shift_gain(s.mode)?;
                &s.y - gain * &s.load
            }
            ArcKind::Iss => {
                let mode = sys.mode(s.mode)?;
                &s.y + &mode.equilibrium
            }
        };
        out.push(x);
    }
    Ok(out)
}

/// Forward shift for a single state, used when seeding simulations from
/// physical coordinates: slow-switching `y = x + A_q^{-1} B_q u~`.
pub fn shift_into_slow_coords(
    sys: &SwitchedSystem,
    mode: usize,
    x: &DVector<f64>,
    load: &DVector<f64>,
) -> Result<DVector<f64>> {
    let gain = sys.shift_gain(mode)?;
    Ok(x + gain * load)
}
