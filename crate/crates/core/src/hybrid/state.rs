//! Hybrid states, hybrid time domains, and recorded arcs.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Which hybrid system an arc was produced by. The two systems shift
/// coordinates differently and use different jump rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    /// Slow-switching system: dwell-time timer in [0, 1], load carried as
    /// a slowly varying state, jumps perturb the state inside a ball.
    SlowSwitching,
    /// Input-to-state system: chatter timer in [0, N0], load is an
    /// exogenous signal, jumps displace the state by the equilibrium gap.
    Iss,
}

/// Combined state of the hybrid dynamics.
#[derive(Debug, Clone)]
pub struct HybridState {
    /// Shifted continuous state.
    pub y: DVector<f64>,
    /// Active mode index.
    pub mode: usize,
    /// Slowly varying load value (empty for ISS arcs, where the load is a
    /// signal rather than a state).
    pub load: DVector<f64>,
    /// Timer value.
    pub timer: f64,
}

/// One recorded point of an arc, tagged with hybrid time `(t, j)`.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub j: u64,
    pub mode: usize,
    pub timer: f64,
    pub load: DVector<f64>,
    pub y: DVector<f64>,
}

/// One jump event.
#[derive(Debug, Clone)]
pub struct JumpRecord {
    pub t: f64,
    /// Jump counter before the event; the post state lives at `j + 1`.
    pub j: u64,
    pub mode_before: usize,
    pub mode_after: usize,
    pub timer_before: f64,
    pub timer_after: f64,
    pub y_before: DVector<f64>,
    pub y_after: DVector<f64>,
    pub load: DVector<f64>,
}

/// Ordered flow intervals `([t_j, t_{j+1}], j)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HybridTimeDomain {
    pub intervals: Vec<(f64, f64, u64)>,
}

impl HybridTimeDomain {
    /// Builds the domain for jumps at the given times over `[0, horizon]`.
    pub fn from_jump_times(jump_times: &[f64], horizon: f64) -> Self {
        let mut intervals = Vec::with_capacity(jump_times.len() + 1);
        let mut t_prev = 0.0;
        for (j, &tj) in jump_times.iter().enumerate() {
            intervals.push((t_prev, tj, j as u64));
            t_prev = tj;
        }
        intervals.push((t_prev, horizon.max(t_prev), jump_times.len() as u64));
        HybridTimeDomain { intervals }
    }

    /// Structural invariants: starts at zero, times non-decreasing, jump
    /// counter increments by one.
    pub fn is_well_formed(&self) -> bool {
        if self.intervals.is_empty() {
            return false;
        }
        if self.intervals[0].0 != 0.0 || self.intervals[0].2 != 0 {
            return false;
        }
        for w in self.intervals.windows(2) {
            let (_, t_end, j) = w[0];
            let (t_start, t_end2, j2) = w[1];
            if t_start != t_end || j2 != j + 1 || t_end2 < t_start {
                return false;
            }
        }
        self.intervals.iter().all(|(a, b, _)| a <= b)
    }
}

/// A recorded solution: samples on a hybrid time domain plus the jump log.
#[derive(Debug, Clone)]
pub struct HybridArc {
    pub kind: ArcKind,
    pub domain: HybridTimeDomain,
    pub samples: Vec<Sample>,
    pub jumps: Vec<JumpRecord>,
}

impl HybridArc {
    pub fn jump_times(&self) -> Vec<f64> {
        self.jumps.iter().map(|r| r.t).collect()
    }

    /// Smallest gap between consecutive jumps, if at least two exist.
    pub fn min_inter_jump_gap(&self) -> Option<f64> {
        if self.jumps.len() < 2 {
            return None;
        }
        Some(
            self.jumps
                .windows(2)
                .map(|w| w[1].t - w[0].t)
                .fold(f64::INFINITY, f64::min),
        )
    }
}
