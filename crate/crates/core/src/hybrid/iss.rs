//! Execution of the hybrid system with exogenous load input: the shifted
//! state flows under the active mode driven by a continuous load signal,
//! a chatter timer in [0, N0] grows at a rate bounded by `eta`, and any
//! timer value in [1, N0] permits a switch that displaces the state by
//! the equilibrium gap of the mode pair.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::SwitchedSystem;
use crate::hybrid::config::{JumpTiming, LoadGenerator, SimConfig};
use crate::hybrid::rk4::Rk4;
use crate::hybrid::selection::ModeSelector;
use crate::hybrid::state::{ArcKind, HybridArc, HybridState, HybridTimeDomain, JumpRecord, Sample};

const SET_TOL: f64 = 1e-9;
const AUDIT_EVERY: usize = 512;

/// Simulates the ISS system from `init` under the given load signal.
pub fn simulate_iss(
    sys: &SwitchedSystem,
    cfg: &SimConfig,
    load: &LoadGenerator,
    init: &HybridState,
) -> Result<HybridArc> {
    cfg.validate()?;
    load.validate(&sys.load_box)?;
    let n = sys.state_dim();
    if init.y.len() != n {
        return Err(Error::BadInit(format!(
            "state has length {}, expected {n}",
            init.y.len()
        )));
    }
    sys.mode(init.mode)?;
    if !(-SET_TOL..=cfg.n0 + SET_TOL).contains(&init.timer) {
        return Err(Error::BadInit(format!(
            "timer {} outside [0, {}]",
            init.timer, cfg.n0
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut selector = ModeSelector::new(cfg.mode_selection.clone(), sys.mode_count());

    // Packed flow state: [y, timer].
    let dim = n + 1;
    let timer_idx = n;
    let mut z = DVector::<f64>::zeros(dim);
    z.rows_mut(0, n).copy_from(&init.y);
    z[timer_idx] = init.timer.clamp(0.0, cfg.n0);

    let mut mode = init.mode;
    let mut t = 0.0f64;
    let mut j: u64 = 0;
    let mut samples: Vec<Sample> = Vec::new();
    let mut jumps: Vec<JumpRecord> = Vec::new();
    let mut jump_times: Vec<f64> = Vec::new();

    let record = |samples: &mut Vec<Sample>,
                  t: f64,
                  j: u64,
                  mode: usize,
                  z: &DVector<f64>,
                  u: DVector<f64>| {
        samples.push(Sample {
            t,
            j,
            mode,
            timer: z[timer_idx],
            load: u,
            y: z.rows(0, n).clone_owned(),
        });
    };

    // Timer level at which the next permitted jump fires.
    let next_fire = |rng: &mut ChaCha8Rng| -> f64 {
        match cfg.jump_timing {
            JumpTiming::Immediate => 1.0,
            JumpTiming::UniformDelay => 1.0 + rng.random::<f64>() * (cfg.n0 - 1.0),
        }
    };
    let mut fire_at = next_fire(&mut rng);

    record(&mut samples, t, j, mode, &z, load.signal(0.0, &sys.load_box));

    let do_jump = |z: &mut DVector<f64>,
                       mode: &mut usize,
                       t: f64,
                       j: &mut u64,
                       rng: &mut ChaCha8Rng,
                       selector: &mut ModeSelector,
                       samples: &mut Vec<Sample>,
                       jumps: &mut Vec<JumpRecord>,
                       jump_times: &mut Vec<f64>,
                       u_now: &DVector<f64>|
     -> Result<()> {
        let next_mode = selector.next(*mode, rng)?;
        let displacement = sys.equilibrium_jump_shift(*mode, next_mode)?;
        let y_before = z.rows(0, n).clone_owned();
        let timer_before = z[timer_idx];
        let y_after = &y_before + &displacement;
        z.rows_mut(0, n).copy_from(&y_after);
        z[timer_idx] = timer_before - 1.0;
        jumps.push(JumpRecord {
            t,
            j: *j,
            mode_before: *mode,
            mode_after: next_mode,
            timer_before,
            timer_after: z[timer_idx],
            y_before,
            y_after,
            load: u_now.clone(),
        });
        jump_times.push(t);
        *mode = next_mode;
        *j += 1;
        record(samples, t, *j, *mode, z, u_now.clone());
        Ok(())
    };

    // An initial timer already inside the jump window may fire a burst of
    // consecutive switches (bounded by the chatter budget).
    while z[timer_idx] >= fire_at - SET_TOL
        && z[timer_idx] >= 1.0 - SET_TOL
        && j < cfg.max_jumps
        && sys.mode_count() > 1
    {
        let u_now = load.signal(t, &sys.load_box);
        do_jump(
            &mut z,
            &mut mode,
            t,
            &mut j,
            &mut rng,
            &mut selector,
            &mut samples,
            &mut jumps,
            &mut jump_times,
            &u_now,
        )?;
        fire_at = next_fire(&mut rng);
    }

    let mut steps_since_sample = 0usize;
    let mut steps_since_audit = 0usize;
    let mut z_next = DVector::<f64>::zeros(dim);

    while t < cfg.horizon - 1e-12 && j < cfg.max_jumps {
        let a = &sys.modes[mode].a;
        let b_in = &sys.modes[mode].b;
        let load_box = &sys.load_box;
        let eta = cfg.eta;
        let timer_policy = &cfg.timer_rate;

        let mut rk = Rk4::new(dim, |tt: f64, zz: &DVector<f64>, out: &mut DVector<f64>| {
            let y = zz.rows(0, n);
            let u = load.signal(tt, load_box);
            let mut dy = a * y;
            dy += b_in * u;
            out.rows_mut(0, n).copy_from(&dy);
            out[timer_idx] = timer_policy.rate_at(tt, eta);
        });

        let h = cfg.step.min(cfg.horizon - t);
        if steps_since_audit == 0 {
            rk.audit_step(t, &z, h)?;
        }
        steps_since_audit = (steps_since_audit + 1) % AUDIT_EVERY;

        rk.step_into(t, &z, h, &mut z_next);

        if z_next[timer_idx] >= fire_at && sys.mode_count() > 1 {
            let (at_event, h_star) = rk.locate_crossing(t, &z, h, timer_idx, fire_at);
            z.copy_from(&at_event);
            t += h_star;
            let u_now = load.signal(t, &sys.load_box);
            record(&mut samples, t, j, mode, &z, u_now.clone());
            do_jump(
                &mut z,
                &mut mode,
                t,
                &mut j,
                &mut rng,
                &mut selector,
                &mut samples,
                &mut jumps,
                &mut jump_times,
                &u_now,
            )?;
            fire_at = next_fire(&mut rng);
            steps_since_sample = 0;
            continue;
        }

        z.copy_from(&z_next);
        if z[timer_idx] > cfg.n0 {
            z[timer_idx] = cfg.n0;
        }
        t += h;
        steps_since_sample += 1;
        if steps_since_sample >= cfg.sample_stride {
            record(&mut samples, t, j, mode, &z, load.signal(t, &sys.load_box));
            steps_since_sample = 0;
        }
    }

    if steps_since_sample != 0 {
        record(&mut samples, t, j, mode, &z, load.signal(t, &sys.load_box));
    }

    Ok(HybridArc {
        kind: ArcKind::Iss,
        domain: HybridTimeDomain::from_jump_times(&jump_times, t),
        samples,
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::two_mode_example;
    use crate::hybrid::adt::verify_adt;

    fn origin_init(sys: &SwitchedSystem, mode: usize, timer: f64) -> HybridState {
        HybridState {
            y: DVector::zeros(sys.state_dim()),
            mode,
            load: DVector::zeros(sys.input_dim()),
            timer,
        }
    }

    #[test]
    fn frozen_timer_below_window_never_jumps() {
        let sys = two_mode_example();
        let cfg = SimConfig {
            eta: 0.0,
            n0: 1.0,
            horizon: 30.0,
            step: 0.01,
            sample_stride: 100,
            ..Default::default()
        };
        let arc = simulate_iss(
            &sys,
            &cfg,
            &LoadGenerator::constant_zero(2),
            &origin_init(&sys, 0, 0.0),
        )
        .unwrap();
        assert!(arc.jumps.is_empty());
    }

    #[test]
    fn jumps_displace_by_equilibrium_gap() {
        let sys = two_mode_example();
        let cfg = SimConfig {
            eta: 0.1,
            n0: 1.0,
            horizon: 120.0,
            step: 0.01,
            sample_stride: 100,
            seed: 3,
            ..Default::default()
        };
        let arc = simulate_iss(
            &sys,
            &cfg,
            &LoadGenerator::constant_zero(2),
            &origin_init(&sys, 0, 0.0),
        )
        .unwrap();
        assert!(!arc.jumps.is_empty());
        for r in &arc.jumps {
            let d = &r.y_after - &r.y_before;
            assert!((d[0]).abs() < 1e-12);
            assert!((d[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn adt_bound_holds_with_rate_eta() {
        let sys = two_mode_example();
        let cfg = SimConfig {
            eta: 0.25,
            n0: 2.0,
            horizon: 200.0,
            step: 0.01,
            seed: 11,
            jump_timing: JumpTiming::UniformDelay,
            ..Default::default()
        };
        let arc = simulate_iss(
            &sys,
            &cfg,
            &LoadGenerator::constant_zero(2),
            &origin_init(&sys, 0, 1.8),
        )
        .unwrap();
        assert!(verify_adt(&arc, cfg.n0, 1.0 / cfg.eta));
    }

    #[test]
    fn initial_burst_respects_chatter_budget() {
        let sys = two_mode_example();
        let cfg = SimConfig {
            eta: 0.0,
            n0: 3.0,
            horizon: 5.0,
            step: 0.01,
            ..Default::default()
        };
        let arc = simulate_iss(
            &sys,
            &cfg,
            &LoadGenerator::constant_zero(2),
            &origin_init(&sys, 0, 3.0),
        )
        .unwrap();
        assert_eq!(arc.jumps.len(), 3);
        let times: Vec<f64> = arc.jumps.iter().map(|r| r.t).collect();
        assert!(times.iter().all(|&t| t == 0.0));
    }
}
