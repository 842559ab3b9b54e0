//! Independent validator for recorded arcs: flow samples must lie in the
//! flow set, jump predecessors in the jump set, and jump successors in
//! the jump map's image. Tests run every generated arc through this.

use crate::error::{Error, Result};
use crate::grid::SwitchedSystem;
use crate::hybrid::config::SimConfig;
use crate::hybrid::state::{ArcKind, HybridArc};

const TOL: f64 = 1e-6;

/// Checks the recorded arc against the defining sets of its system.
pub fn validate_arc(arc: &HybridArc, sys: &SwitchedSystem, cfg: &SimConfig) -> Result<()> {
    if !arc.domain.is_well_formed() {
        return Err(Error::Domain("hybrid time domain is malformed".into()));
    }

    let timer_cap = match arc.kind {
        ArcKind::SlowSwitching => 1.0,
        ArcKind::Iss => cfg.n0,
    };

    for s in &arc.samples {
        if s.mode >= sys.mode_count() {
            return Err(Error::Domain(format!(
                "sample at t = {} uses unknown mode {}",
                s.t, s.mode
            )));
        }
        if s.timer < -TOL || s.timer > timer_cap + TOL {
            return Err(Error::Domain(format!(
                "sample at t = {} has timer {} outside [0, {timer_cap}]",
                s.t, s.timer
            )));
        }
        if arc.kind == ArcKind::SlowSwitching && !sys.load_box.contains(&s.load, TOL) {
            return Err(Error::Domain(format!(
                "sample at t = {} has load outside the admissible box",
                s.t
            )));
        }
        if s.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "sample at t = {} has non-finite state",
                s.t
            )));
        }
    }

    let delta_inf = cfg.delta_inflation.unwrap_or(sys.delta3);
    for r in &arc.jumps {
        if r.mode_after == r.mode_before {
            return Err(Error::Domain(format!(
                "jump at t = {} does not change the mode",
                r.t
            )));
        }
        if (r.timer_after - (r.timer_before - 1.0)).abs() > TOL {
            return Err(Error::Domain(format!(
                "jump at t = {} does not decrement the timer by 1",
                r.t
            )));
        }
        match arc.kind {
            ArcKind::SlowSwitching => {
                // Jump set: timer = 1.
                if (r.timer_before - 1.0).abs() > TOL {
                    return Err(Error::Domain(format!(
                        "jump at t = {} fired with timer {} != 1",
                        r.t, r.timer_before
                    )));
                }
                let d = (&r.y_after - &r.y_before).norm();
                if d > delta_inf + TOL {
                    return Err(Error::Domain(format!(
                        "jump at t = {} displaced the state by {d:.3e} > {delta_inf:.3e}",
                        r.t
                    )));
                }
            }
            ArcKind::Iss => {
                // Jump set: timer in [1, N0].
                if r.timer_before < 1.0 - TOL || r.timer_before > cfg.n0 + TOL {
                    return Err(Error::Domain(format!(
                        "jump at t = {} fired with timer {} outside [1, {}]",
                        r.t, r.timer_before, cfg.n0
                    )));
                }
                let expected = sys.equilibrium_jump_shift(r.mode_before, r.mode_after)?;
                let err = (&r.y_after - &r.y_before - expected).amax();
                if err > TOL {
                    return Err(Error::Domain(format!(
                        "jump at t = {} displacement deviates from the equilibrium gap by {err:.3e}",
                        r.t
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::two_mode_example;
    use crate::hybrid::config::{JumpPerturbation, LoadGenerator};
    use crate::hybrid::hdelta::simulate_hdelta;
    use crate::hybrid::iss::simulate_iss;
    use crate::hybrid::state::HybridState;
    use nalgebra::DVector;

    #[test]
    fn generated_arcs_validate() {
        let sys = two_mode_example();
        let init = HybridState {
            y: DVector::from_vec(vec![2.0, -1.0]),
            mode: 0,
            load: DVector::zeros(2),
            timer: 0.3,
        };

        let cfg = SimConfig {
            delta1: 0.05,
            horizon: 100.0,
            seed: 5,
            jump_perturbation: JumpPerturbation::Ball,
            delta_inflation: Some(0.01),
            ..Default::default()
        };
        let arc = simulate_hdelta(&sys, &cfg, &LoadGenerator::constant_zero(2), &init).unwrap();
        validate_arc(&arc, &sys, &cfg).unwrap();

        let cfg_iss = SimConfig {
            eta: 0.2,
            n0: 2.0,
            horizon: 60.0,
            seed: 6,
            ..Default::default()
        };
        let arc = simulate_iss(&sys, &cfg_iss, &LoadGenerator::constant_zero(2), &init).unwrap();
        validate_arc(&arc, &sys, &cfg_iss).unwrap();
    }

    #[test]
    fn corrupted_jump_is_rejected() {
        let sys = two_mode_example();
        let init = HybridState {
            y: DVector::zeros(2),
            mode: 0,
            load: DVector::zeros(2),
            timer: 0.0,
        };
        let cfg = SimConfig {
            eta: 0.2,
            n0: 1.0,
            horizon: 30.0,
            ..Default::default()
        };
        let mut arc = simulate_iss(&sys, &cfg, &LoadGenerator::constant_zero(2), &init).unwrap();
        assert!(!arc.jumps.is_empty());
        arc.jumps[0].y_after[1] += 0.5;
        assert!(validate_arc(&arc, &sys, &cfg).is_err());
    }
}
