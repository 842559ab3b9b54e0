//! Execution of the slow-switching hybrid system: the shifted state flows
//! under the active mode, the load drifts at rate `delta2`, a timer in
//! [0, 1] grows at a rate bounded by `delta1`, and hitting 1 forces a
//! switch that perturbs the state inside the inflation ball.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::SwitchedSystem;
use crate::hybrid::config::{JumpPerturbation, LoadGenerator, SimConfig};
use crate::hybrid::rk4::Rk4;
use crate::hybrid::selection::{sample_ball, ModeSelector};
use crate::hybrid::state::{ArcKind, HybridArc, HybridState, HybridTimeDomain, JumpRecord, Sample};
use rand::SeedableRng;

/// Tolerance used when accepting initial conditions on set boundaries.
const SET_TOL: f64 = 1e-9;

/// How often the step-doubling audit runs.
const AUDIT_EVERY: usize = 512;

/// Simulates the slow-switching system from `init` until the horizon or
/// the jump budget is exhausted.
pub fn simulate_hdelta(
    sys: &SwitchedSystem,
    cfg: &SimConfig,
    load_gen: &LoadGenerator,
    init: &HybridState,
) -> Result<HybridArc> {
    cfg.validate()?;
    load_gen.validate(&sys.load_box)?;
    let n = sys.state_dim();
    let m = sys.input_dim();
    if init.y.len() != n {
        return Err(Error::BadInit(format!(
            "state has length {}, expected {n}",
            init.y.len()
        )));
    }
    if init.load.len() != m {
        return Err(Error::BadInit(format!(
            "load has length {}, expected {m}",
            init.load.len()
        )));
    }
    sys.mode(init.mode)?;
    if !(-SET_TOL..=1.0 + SET_TOL).contains(&init.timer) {
        return Err(Error::BadInit(format!(
            "timer {} outside [0, 1]",
            init.timer
        )));
    }
    if !sys.load_box.contains(&init.load, SET_TOL) {
        return Err(Error::BadInit("load outside the admissible box".into()));
    }

    let delta_inf = cfg.delta_inflation.unwrap_or(sys.delta3);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut selector = ModeSelector::new(cfg.mode_selection.clone(), sys.mode_count());

    // Packed flow state: [y, load, timer].
    let dim = n + m + 1;
    let timer_idx = n + m;
    let mut z = DVector::<f64>::zeros(dim);
    z.rows_mut(0, n).copy_from(&init.y);
    z.rows_mut(n, m).copy_from(&init.load);
    z[timer_idx] = init.timer.clamp(0.0, 1.0);

    let mut mode = init.mode;
    let mut t = 0.0f64;
    let mut j: u64 = 0;
    let mut samples: Vec<Sample> = Vec::new();
    let mut jumps: Vec<JumpRecord> = Vec::new();
    let mut jump_times: Vec<f64> = Vec::new();

    let record = |samples: &mut Vec<Sample>, t: f64, j: u64, mode: usize, z: &DVector<f64>| {
        samples.push(Sample {
            t,
            j,
            mode,
            timer: z[timer_idx],
            load: z.rows(n, m).clone_owned(),
            y: z.rows(0, n).clone_owned(),
        });
    };
    record(&mut samples, t, j, mode, &z);

    // The jump set asks for timer = 1; an initial condition on it fires
    // one switch before any flow.
    let do_jump = |z: &mut DVector<f64>,
                       mode: &mut usize,
                       t: f64,
                       j: &mut u64,
                       rng: &mut ChaCha8Rng,
                       selector: &mut ModeSelector,
                       samples: &mut Vec<Sample>,
                       jumps: &mut Vec<JumpRecord>,
                       jump_times: &mut Vec<f64>|
     -> Result<()> {
        let next_mode = selector.next(*mode, rng)?;
        let load = z.rows(n, m).clone_owned();
        let displacement = match cfg.jump_perturbation {
            JumpPerturbation::Physical => sys.physical_jump_shift(*mode, next_mode, &load)?,
            JumpPerturbation::Ball => sample_ball(n, delta_inf, rng),
        };
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
            load,
        });
        jump_times.push(t);
        *mode = next_mode;
        *j += 1;
        record(samples, t, *j, *mode, z);
        Ok(())
    };

    if z[timer_idx] >= 1.0 - SET_TOL && j < cfg.max_jumps && sys.mode_count() > 1 {
        z[timer_idx] = 1.0;
        record(&mut samples, t, j, mode, &z); // pre-jump point at timer = 1
        samples.remove(samples.len() - 2); // drop the duplicate init record
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
        )?;
    }

    let mut steps_since_sample = 0usize;
    let mut steps_since_audit = 0usize;
    let mut z_next = DVector::<f64>::zeros(dim);

    while t < cfg.horizon - 1e-12 && j < cfg.max_jumps {
        let mode_now = mode;
        let a = &sys.modes[mode_now].a;
        let b_aff = &sys.modes[mode_now].affine;
        let b_in = &sys.modes[mode_now].b;
        let load_box = &sys.load_box;
        let (d1, d2) = (cfg.delta1, cfg.delta2);
        let timer_policy = &cfg.timer_rate;

        let mut rk = Rk4::new(dim, |tt: f64, zz: &DVector<f64>, out: &mut DVector<f64>| {
            let y = zz.rows(0, n);
            let u = zz.rows(n, m).clone_owned();
            // Load rate evaluated on the delta2-warped clock keeps the
            // signal shape fixed while delta2 scales its speed.
            let r = load_gen.rate(d2 * tt, &u, load_box);
            let mut dy = a * y;
            dy += b_aff;
            dy += b_in * (d2 * &r);
            out.rows_mut(0, n).copy_from(&dy);
            out.rows_mut(n, m).copy_from(&(d2 * &r));
            out[timer_idx] = timer_policy.rate_at(tt, d1);
        });

        let h = cfg.step.min(cfg.horizon - t);
        if steps_since_audit == 0 {
            rk.audit_step(t, &z, h)?;
        }
        steps_since_audit = (steps_since_audit + 1) % AUDIT_EVERY;

        rk.step_into(t, &z, h, &mut z_next);

        if z_next[timer_idx] >= 1.0 && sys.mode_count() > 1 {
            let (at_event, h_star) = rk.locate_crossing(t, &z, h, timer_idx, 1.0);
            z.copy_from(&at_event);
            t += h_star;
            record(&mut samples, t, j, mode, &z);
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
            )?;
            steps_since_sample = 0;
            continue;
        }

        z.copy_from(&z_next);
        // The flow set caps the timer at 1.
        if z[timer_idx] > 1.0 {
            z[timer_idx] = 1.0;
        }
        t += h;
        steps_since_sample += 1;
        if steps_since_sample >= cfg.sample_stride {
            record(&mut samples, t, j, mode, &z);
            steps_since_sample = 0;
        }
    }

    if steps_since_sample != 0 {
        record(&mut samples, t, j, mode, &z);
    }

    Ok(HybridArc {
        kind: ArcKind::SlowSwitching,
        domain: HybridTimeDomain::from_jump_times(&jump_times, t),
        samples,
        jumps,
    })
}
