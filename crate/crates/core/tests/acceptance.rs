//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line and enforcing its tolerance and runtime budget.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use omega_grid::cert::{check_decrease, check_iss_bound, synthesize_certificate, PSD_TOL};
use omega_grid::grid::{
    build_full_matrices, reduce_zero_mode, two_mode_example, SwitchedSystem,
};
use omega_grid::hybrid::{
    simulate_hdelta, simulate_iss, validate_arc, verify_adt, HybridState, JumpPerturbation,
    LoadGenerator, SimConfig,
};
use omega_grid::linalg::{
    lyapunov_solve, mat_exp, solve_linear, spectral_report, sym_eig_extremes, weighted_norm,
};
use omega_grid::omega::{build_omega_set_with, distance_trace, OmegaBuildOptions};
use omega_grid::scenario::{cmd_reproduce, preset_scenario, SystemSource};

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:2} ({name}): {} [{detail}]",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let elapsed = start.elapsed();
    (
        elapsed <= budget,
        format!("runtime {:.2?} of {:.2?} budget", elapsed, budget),
    )
}

fn ball_inits(sys: &SwitchedSystem, radius: f64, count: usize, seed: u64) -> Vec<HybridState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = sys.state_dim();
    (0..count)
        .map(|i| {
            let mut y = DVector::zeros(dim);
            for k in 0..dim {
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random();
                y[k] = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            }
            let norm = y.norm();
            if norm > 0.0 {
                y *= radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm;
            }
            HybridState {
                y,
                mode: i % sys.mode_count(),
                load: DVector::zeros(sys.input_dim()),
                timer: 0.0,
            }
        })
        .collect()
}

fn example1_matrices() -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>) {
    (
        DMatrix::from_row_slice(2, 2, &[-0.6, 2.98, -2.98, -0.6]),
        DVector::from_vec(vec![-2.98, 0.6]),
        DMatrix::from_row_slice(2, 2, &[-0.4, 3.24, -3.24, -0.4]),
        DVector::from_vec(vec![-6.48, 0.8]),
    )
}

#[test]
fn criterion_01_equilibrium_reproduction() {
    let (a1, b1, a2, b2) = example1_matrices();
    let start = Instant::now();
    let x1 = solve_linear(&a1, &(-&b1)).unwrap();
    let x2 = solve_linear(&a2, &(-&b2)).unwrap();
    let elapsed = start.elapsed();

    let e1 = (&x1 - DVector::from_vec(vec![0.0, 1.0])).amax();
    let e2 = (&x2 - DVector::from_vec(vec![0.0, 2.0])).amax();
    let pass = e1 <= 1e-10 && e2 <= 1e-10 && elapsed < Duration::from_millis(1);
    verdict(
        1,
        "equilibrium reproduction",
        pass,
        &format!("errors {e1:.2e}, {e2:.2e}; runtime {elapsed:.2?} < 1 ms"),
    );
}

#[test]
fn criterion_02_limit_set_structure() {
    let start = Instant::now();
    let sc = preset_scenario("example1").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = cmd_reproduce(&sc, dir.path(), true).unwrap();
    let (in_time, timing) = within_budget(start, Duration::from_secs(5));

    let gaps_ok = summary.curve_tail_gaps.iter().all(|g| *g <= 1e-3);
    let pass = summary.curve_count == 2 && gaps_ok && in_time;
    verdict(
        2,
        "limit-set structure",
        pass,
        &format!(
            "{} curves, max tail gap {:.2e}, {timing}",
            summary.curve_count,
            summary.curve_tail_gaps.iter().fold(0.0f64, |m, g| m.max(*g))
        ),
    );
}

#[test]
fn criterion_03_practical_stability_trend() {
    let start = Instant::now();
    let sys = two_mode_example();
    let omega = build_omega_set_with(
        &sys,
        &OmegaBuildOptions {
            eps_tail: 1e-3,
            chord_tol: 1e-3,
            max_samples: 50_000,
        },
    )
    .unwrap();

    let deltas = [0.1, 0.02, 0.004];
    let mut medians = Vec::new();
    for &delta in &deltas {
        let horizon = 12.0 / delta;
        let mut jobs = Vec::new();
        for seed in 0..20u64 {
            for (i, init) in ball_inits(&sys, 3.0, 5, 1000 + seed).into_iter().enumerate() {
                jobs.push((seed, i, init));
            }
        }
        let sups: Vec<f64> = jobs
            .into_par_iter()
            .map(|(seed, i, init)| {
                let cfg = SimConfig {
                    delta1: delta,
                    delta2: delta,
                    delta_inflation: Some(delta),
                    jump_perturbation: JumpPerturbation::Ball,
                    step: 0.01,
                    horizon,
                    sample_stride: 25,
                    seed: seed * 131 + i as u64,
                    ..Default::default()
                };
                let arc =
                    simulate_hdelta(&sys, &cfg, &LoadGenerator::constant_zero(2), &init).unwrap();
                let trace = distance_trace(&arc, &omega).unwrap();
                trace.tail_sup(horizon * 0.5)
            })
            .collect();
        let mut sorted = sups;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(0.5 * (sorted[49] + sorted[50]));
    }

    let non_increasing = medians[0] >= medians[1] && medians[1] >= medians[2];
    let small_at_finest = medians[2] < 0.05;
    let (in_time, timing) = within_budget(start, Duration::from_secs(120));
    verdict(
        3,
        "practical-stability trend",
        non_increasing && small_at_finest && in_time,
        &format!("medians {medians:?}, {timing}"),
    );
}

#[test]
fn criterion_04_nominal_jump_bound() {
    let sys = two_mode_example();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0usize;
    for k in 0..100u64 {
        let mut init = ball_inits(&sys, 3.0, 1, 2000 + k).remove(0);
        init.timer = if k % 10 == 0 { 1.0 } else { rng.random::<f64>() * 0.99 };
        let cfg = SimConfig {
            delta1: 0.0,
            delta2: 0.0,
            delta_inflation: Some(0.0),
            step: 0.01,
            horizon: 40.0,
            sample_stride: 100,
            seed: k,
            ..Default::default()
        };
        let arc = simulate_hdelta(&sys, &cfg, &LoadGenerator::constant_zero(2), &init).unwrap();
        validate_arc(&arc, &sys, &cfg).unwrap();
        worst = worst.max(arc.jumps.len());
    }
    verdict(
        4,
        "nominal jump bound",
        worst <= 1,
        &format!("max jumps over 100 runs = {worst}"),
    );
}

#[test]
fn criterion_05_dwell_time_law() {
    let sys = two_mode_example();
    let delta1 = 0.05;
    let step = 0.01;
    let mut min_gap = f64::INFINITY;
    let mut total_jumps = 0usize;
    for k in 0..100u64 {
        let init = ball_inits(&sys, 3.0, 1, 3000 + k).remove(0);
        let cfg = SimConfig {
            delta1,
            delta2: 0.0,
            step,
            horizon: 200.0,
            sample_stride: 100,
            seed: k,
            ..Default::default()
        };
        let arc = simulate_hdelta(&sys, &cfg, &LoadGenerator::constant_zero(2), &init).unwrap();
        total_jumps += arc.jumps.len();
        if let Some(g) = arc.min_inter_jump_gap() {
            min_gap = min_gap.min(g);
        }
    }
    let bound = 1.0 / delta1 - step;
    verdict(
        5,
        "dwell-time law",
        min_gap >= bound && total_jumps >= 100,
        &format!("min gap {min_gap:.6} >= {bound:.6}, {total_jumps} jumps total"),
    );
}

#[test]
fn criterion_06_contraction_property() {
    let start = Instant::now();
    let mut systems = vec![two_mode_example()];
    systems.push(
        preset_scenario("ieee39-aggregate")
            .unwrap()
            .build_system()
            .unwrap(),
    );

    let mut checked = 0usize;
    let mut pass = true;
    let mut worst_slack = 0.0f64;
    for sys in &systems {
        let n = sys.state_dim();
        let identity = DMatrix::<f64>::identity(n, n);
        for mode in &sys.modes {
            let p = lyapunov_solve(&mode.a, &identity).unwrap();
            for &t in &[0.1, 1.0, 10.0] {
                let e = mat_exp(&mode.a, t).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(600 + mode.id as u64);
                for _ in 0..1000 {
                    let y1 = DVector::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
                    let y2 = DVector::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
                    let d0 = weighted_norm(&p, &(&y1 - &y2)).unwrap();
                    let dt = weighted_norm(&p, &(&e * (&y1 - &y2))).unwrap();
                    let slack = dt - d0;
                    worst_slack = worst_slack.max(slack);
                    if slack > 1e-9 {
                        pass = false;
                    }
                    checked += 1;
                }
            }
        }
    }
    let (in_time, timing) = within_budget(start, Duration::from_secs(10));
    verdict(
        6,
        "flow contraction",
        pass && in_time,
        &format!("{checked} pairs, worst P-norm growth {worst_slack:.2e}, {timing}"),
    );
}

/// Recomputes the certificate's semidefinite blocks and returns the worst
/// minimum eigenvalue over all of them.
fn worst_block_eig(sys: &SwitchedSystem, cert: &omega_grid::cert::IssCertificate) -> f64 {
    let mut worst = f64::INFINITY;
    let emu = (-cert.mu).exp();
    let k = sys.mode_count();
    for q in 0..k {
        let p = &cert.mode_lyapunov[q];
        let qm = &cert.mode_decay[q];
        let w = cert.theta * qm - (cert.eta * cert.mu) * p;
        let pb = p * &sys.modes[q].b;
        let (n, m) = (w.nrows(), pb.ncols());
        let mut s = DMatrix::<f64>::zeros(n + m, n + m);
        s.view_mut((0, 0), (n, n)).copy_from(&w);
        s.view_mut((0, n), (n, m)).copy_from(&(-&pb));
        s.view_mut((n, 0), (m, n)).copy_from(&(-pb.transpose()));
        s.view_mut((n, n), (m, m)).copy_from(&cert.flow_gain);
        let (lo, _) = sym_eig_extremes(&((&s + s.transpose()) * 0.5)).unwrap();
        worst = worst.min(lo);
    }
    for q in 0..k {
        for r in 0..k {
            if q == r {
                continue;
            }
            let head = cert.theta * &cert.mode_lyapunov[q] - emu * &cert.mode_lyapunov[r];
            let off = -(emu * &cert.mode_lyapunov[r]);
            let n = head.nrows();
            let mut y = DMatrix::<f64>::zeros(2 * n, 2 * n);
            y.view_mut((0, 0), (n, n)).copy_from(&head);
            y.view_mut((0, n), (n, n)).copy_from(&off);
            y.view_mut((n, 0), (n, n)).copy_from(&off.transpose());
            y.view_mut((n, n), (n, n)).copy_from(&cert.jump_gain);
            let (lo, _) = sym_eig_extremes(&((&y + y.transpose()) * 0.5)).unwrap();
            worst = worst.min(lo);
        }
    }
    worst
}

#[test]
fn criterion_07_certificate_feasibility() {
    let start = Instant::now();
    let ex1 = two_mode_example();
    let cert1 = synthesize_certificate(&ex1, 0.5, 1.0, None).unwrap();
    let agg = preset_scenario("ieee39-aggregate")
        .unwrap()
        .build_system()
        .unwrap();
    let cert2 = synthesize_certificate(&agg, 0.5, 1.0, None).unwrap();

    let w1 = worst_block_eig(&ex1, &cert1);
    let w2 = worst_block_eig(&agg, &cert2);
    let c_err = (cert1.c - 1.0).abs();
    let (in_time, timing) = within_budget(start, Duration::from_secs(5));
    let pass = w1 >= PSD_TOL && w2 >= PSD_TOL && c_err <= 1e-9 && in_time;
    verdict(
        7,
        "certificate feasibility",
        pass,
        &format!("min block eigs {w1:.2e}, {w2:.2e}; |c - 1| = {c_err:.2e}; {timing}"),
    );
}

struct IssBatch {
    sys: SwitchedSystem,
    cert: omega_grid::cert::IssCertificate,
    load: LoadGenerator,
    u_inf: f64,
    runs: Vec<(SimConfig, HybridState)>,
}

fn iss_batches() -> Vec<IssBatch> {
    let mut batches = Vec::new();
    for preset in ["example1", "ieee39-aggregate"] {
        let sc = preset_scenario(preset).unwrap();
        let sys = sc.build_system().unwrap();
        let cert = synthesize_certificate(&sys, 0.5, 1.0, None).unwrap();
        let load = match preset {
            "example1" => LoadGenerator::constant_zero(sys.input_dim()),
            _ => sc.load.clone().unwrap(),
        };
        let u_inf = sys.load_box.max_norm();
        let mut runs = Vec::new();
        for k in 0..100u64 {
            let mut init = ball_inits(&sys, 1.5, 1, 8000 + k).remove(0);
            init.timer = if k % 2 == 1 { 1.0 } else { 0.0 };
            let cfg = SimConfig {
                eta: 0.5 * cert.eta_star,
                n0: cert.n0,
                step: 0.01,
                horizon: 40.0,
                sample_stride: 1,
                seed: k,
                ..Default::default()
            };
            runs.push((cfg, init));
        }
        batches.push(IssBatch {
            sys,
            cert,
            load,
            u_inf,
            runs,
        });
    }
    batches
}

#[test]
fn criterion_08_iss_bound() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for batch in iss_batches() {
        let outcomes: Vec<(bool, bool, usize)> = batch
            .runs
            .par_iter()
            .map(|(cfg, init)| {
                let arc = simulate_iss(&batch.sys, cfg, &batch.load, init).unwrap();
                validate_arc(&arc, &batch.sys, cfg).unwrap();
                let adt_ok = verify_adt(&arc, cfg.n0, 1.0 / cfg.eta);
                let report = check_iss_bound(&arc, &batch.cert, batch.u_inf).unwrap();
                (report.passed(), adt_ok, arc.jumps.len())
            })
            .collect();
        let bound_ok = outcomes.iter().all(|(b, _, _)| *b);
        let adt_ok = outcomes.iter().all(|(_, a, _)| *a);
        let jumps: usize = outcomes.iter().map(|(_, _, j)| *j).sum();
        pass &= bound_ok && adt_ok;
        detail.push_str(&format!(
            "[{} runs: bound {}, adt {}, {} jumps] ",
            outcomes.len(),
            bound_ok,
            adt_ok,
            jumps
        ));
    }
    let (in_time, timing) = within_budget(start, Duration::from_secs(120));
    verdict(8, "closed-loop bound", pass && in_time, &format!("{detail}{timing}"));
}

#[test]
fn criterion_09_decrease_inequalities() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for batch in iss_batches() {
        let outcomes: Vec<(bool, usize, usize)> = batch
            .runs
            .par_iter()
            .map(|(cfg, init)| {
                let arc = simulate_iss(&batch.sys, cfg, &batch.load, init).unwrap();
                let report = check_decrease(&arc, &batch.cert, &batch.sys, &batch.load).unwrap();
                (
                    report.passed(),
                    report.flow_points_checked,
                    report.jump_points_checked,
                )
            })
            .collect();
        let all_pass = outcomes.iter().all(|(p, _, _)| *p);
        let flow_points: usize = outcomes.iter().map(|(_, f, _)| *f).sum();
        let jump_points: usize = outcomes.iter().map(|(_, _, j)| *j).sum();
        pass &= all_pass && jump_points > 0;
        detail.push_str(&format!(
            "[{} runs: pass {}, {} flow pts, {} jump pts] ",
            outcomes.len(),
            all_pass,
            flow_points,
            jump_points
        ));
    }
    let (in_time, timing) = within_budget(start, Duration::from_secs(120));
    verdict(9, "decrease inequalities", pass && in_time, &format!("{detail}{timing}"));
}

#[test]
fn criterion_10_benchmark_structure() {
    let start = Instant::now();
    let agg = preset_scenario("ieee39-aggregate")
        .unwrap()
        .build_system()
        .unwrap();
    let agg_ok = agg.state_dim() == 12
        && agg
            .modes
            .iter()
            .all(|m| spectral_report(&m.a).unwrap().is_hurwitz);

    let sc = preset_scenario("ieee39-full").unwrap();
    let (zero_count, reduced_hurwitz) = match &sc.system {
        SystemSource::FullOrder {
            network,
            generators,
            deas,
            integral_gain,
            ..
        } => {
            let netp = to_network_params(network);
            let (a_bar, b_bar, _) =
                build_full_matrices(&netp, generators, deas, *integral_gain).unwrap();
            let rep = spectral_report(&a_bar).unwrap();
            let zeros = rep
                .eigenvalues
                .iter()
                .filter(|(re, im)| (re * re + im * im).sqrt() <= 1e-8)
                .count();
            let (a, _, _) = reduce_zero_mode(&a_bar, &b_bar).unwrap();
            (zeros, spectral_report(&a).unwrap().is_hurwitz)
        }
        _ => (0, false),
    };
    let (in_time, timing) = within_budget(start, Duration::from_secs(10));
    verdict(
        10,
        "benchmark structure",
        agg_ok && zero_count == 1 && reduced_hurwitz && in_time,
        &format!(
            "aggregate 12x12 Hurwitz: {agg_ok}; zero eigenvalues: {zero_count}; reduced Hurwitz: {reduced_hurwitz}; {timing}"
        ),
    );
}

fn to_network_params(net: &omega_grid::scenario::NetworkJson) -> omega_grid::grid::NetworkParams {
    omega_grid::grid::NetworkParams {
        bus_count: net.bus_count,
        gen_buses: net.gen_buses.iter().map(|b| b - 1).collect(),
        dea_buses: net.dea_buses.iter().map(|b| b - 1).collect(),
        lines: net
            .lines
            .iter()
            .map(|&(f, t, x)| omega_grid::grid::Line {
                from: f - 1,
                to: t - 1,
                reactance: x,
            })
            .collect(),
        sync_speed: net.sync_speed,
        loads: net.loads.clone(),
    }
}

#[test]
fn criterion_11_numerical_kernels() {
    let start = Instant::now();
    let (a1, _, a2, _) = example1_matrices();

    // Lyapunov residuals on the documented cases.
    let mut worst_residual = 0.0f64;
    let q12 = DMatrix::identity(2, 2) * 1.2;
    let p = lyapunov_solve(&a1, &q12).unwrap();
    worst_residual = worst_residual.max((&p - DMatrix::identity(2, 2)).amax());
    for (a, q) in [(&a1, DMatrix::identity(2, 2)), (&a2, DMatrix::identity(2, 2))] {
        let p = lyapunov_solve(a, &q).unwrap();
        let res = a.transpose() * &p + &p * a + &q;
        let rel = res.amax() / q.amax();
        worst_residual = worst_residual.max(rel);
    }

    // Matrix exponential against closed forms.
    let mut worst_exp = 0.0f64;
    let diag = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
    let e = mat_exp(&diag, 1.0).unwrap();
    worst_exp = worst_exp
        .max((e[(0, 0)] - (-1.0f64).exp()).abs())
        .max((e[(1, 1)] - (-2.0f64).exp()).abs());
    for &t in &[0.1, 1.0, 5.0] {
        let e = mat_exp(&a1, t).unwrap();
        let s = (-0.6 * t).exp();
        let want = DMatrix::from_row_slice(
            2,
            2,
            &[
                s * (2.98 * t).cos(),
                s * (2.98 * t).sin(),
                -s * (2.98 * t).sin(),
                s * (2.98 * t).cos(),
            ],
        );
        worst_exp = worst_exp.max((&e - want).amax());
    }

    // Property sweep: semigroup law and eigenvalue consistency on seeded
    // random stable matrices.
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut worst_semigroup = 0.0f64;
    let mut worst_eig = 0.0f64;
    for _ in 0..20 {
        let n = 2 + (rng.random::<u32>() % 5) as usize;
        let raw = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let shift = spectral_report(&raw).unwrap().spectral_abscissa + 0.3;
        let a = &raw - DMatrix::identity(n, n) * shift;
        let (t, s) = (rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0);
        let lhs = mat_exp(&a, t + s).unwrap();
        let rhs = mat_exp(&a, t).unwrap() * mat_exp(&a, s).unwrap();
        let scale = lhs.amax().max(1.0);
        worst_semigroup = worst_semigroup.max((&lhs - rhs).amax() / scale);

        let rep = spectral_report(&a).unwrap();
        let tr: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let eig_sum: f64 = rep.eigenvalues.iter().map(|(re, _)| re).sum();
        worst_eig = worst_eig.max((tr - eig_sum).abs() / tr.abs().max(1.0));
    }

    let (in_time, timing) = within_budget(start, Duration::from_secs(30));
    let pass = worst_residual < 1e-8 && worst_exp < 1e-10 && worst_semigroup < 1e-9
        && worst_eig < 1e-8
        && in_time;
    verdict(
        11,
        "numerical kernels",
        pass,
        &format!(
            "lyapunov {worst_residual:.2e}, exp {worst_exp:.2e}, semigroup {worst_semigroup:.2e}, eig {worst_eig:.2e}; {timing}"
        ),
    );
}
