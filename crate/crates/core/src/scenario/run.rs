//! Subcommand implementations: building models, running simulation
//! batches, constructing the limit set, distance traces, certificate
//! synthesis and verification, and the end-to-end preset pipelines.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cert::{
    check_decrease, check_iss_bound, synthesize_certificate, IssCertificate, VerificationReport,
};
use crate::error::{Error, Result};
use crate::grid::SwitchedSystem;
use crate::hybrid::{
    simulate_hdelta, simulate_iss, to_original_coords, validate_arc, HybridArc, HybridState,
    LoadGenerator,
};
use crate::linalg::spectral_report;
use crate::matjson;
use crate::omega::{build_omega_set_with, distance_trace, DistanceTrace, OmegaBuildOptions, OmegaSet};
use crate::scenario::io;
use crate::scenario::schema::{InitSpec, Scenario, SimKind};

/// Builds the rayon pool honoring the `OMEGA_GRID_THREADS` cap.
fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var("OMEGA_GRID_THREADS") {
        let n: usize = text.parse().map_err(|_| Error::Config {
            path: "OMEGA_GRID_THREADS".into(),
            message: format!("not a thread count: {text}"),
        })?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

/// Exported per-mode model data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeExport {
    pub id: usize,
    #[serde(with = "matjson::mat")]
    pub a: DMatrix<f64>,
    #[serde(with = "matjson::mat")]
    pub b: DMatrix<f64>,
    #[serde(with = "matjson::vec")]
    pub u: DVector<f64>,
    #[serde(with = "matjson::vec")]
    pub affine: DVector<f64>,
    #[serde(with = "matjson::vec")]
    pub equilibrium: DVector<f64>,
    pub spectral_abscissa: f64,
    pub is_hurwitz: bool,
}

/// `build-model` artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelExport {
    pub name: String,
    pub state_dim: usize,
    pub input_dim: usize,
    pub mode_count: usize,
    pub delta3: f64,
    pub c: f64,
    pub modes: Vec<ModeExport>,
}

pub fn model_export(name: &str, sys: &SwitchedSystem) -> Result<ModelExport> {
    let mut modes = Vec::with_capacity(sys.mode_count());
    for m in &sys.modes {
        let rep = spectral_report(&m.a)?;
        modes.push(ModeExport {
            id: m.id,
            a: m.a.clone(),
            b: m.b.clone(),
            u: m.switching_input.clone(),
            affine: m.affine.clone(),
            equilibrium: m.equilibrium.clone(),
            spectral_abscissa: rep.spectral_abscissa,
            is_hurwitz: rep.is_hurwitz,
        });
    }
    Ok(ModelExport {
        name: name.to_string(),
        state_dim: sys.state_dim(),
        input_dim: sys.input_dim(),
        mode_count: sys.mode_count(),
        delta3: sys.delta3,
        c: sys.c,
        modes,
    })
}

/// Deterministic initial states for a run batch: one ball draw (or
/// explicit state) per init index, modes assigned round-robin.
pub fn make_inits(
    spec: &InitSpec,
    dim: usize,
    mode_count: usize,
    load0: &DVector<f64>,
    seed: u64,
) -> Vec<HybridState> {
    match spec {
        InitSpec::Explicit { states } => states
            .iter()
            .enumerate()
            .map(|(i, s)| HybridState {
                y: DVector::from_vec(s.clone()),
                mode: i % mode_count,
                load: load0.clone(),
                timer: 0.0,
            })
            .collect(),
        InitSpec::RandomBall { radius, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba11);
            (0..*count)
                .map(|i| {
                    let mut y = DVector::zeros(dim);
                    // Gaussian direction, ball-uniform radius.
                    for k in 0..dim {
                        let u1: f64 = rng.random::<f64>().max(1e-300);
                        let u2: f64 = rng.random();
                        y[k] = (-2.0 * u1.ln()).sqrt()
                            * (2.0 * std::f64::consts::PI * u2).cos();
                    }
                    let norm = y.norm();
                    if norm > 0.0 {
                        y *= radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm;
                    }
                    HybridState {
                        y,
                        mode: i % mode_count,
                        load: load0.clone(),
                        timer: 0.0,
                    }
                })
                .collect()
        }
    }
}

fn load_generator(sc: &Scenario, sys: &SwitchedSystem) -> LoadGenerator {
    sc.load
        .clone()
        .unwrap_or_else(|| LoadGenerator::Constant {
            value: sys.load_box.center().iter().copied().collect(),
        })
}

/// One simulated run tagged by its seed and init index.
pub struct RunOutput {
    pub seed: u64,
    pub init_index: usize,
    pub arc: HybridArc,
}

/// Runs the scenario's simulation batch (seeds x inits) on the pool.
pub fn run_batch(sc: &Scenario, sys: &SwitchedSystem, kind: SimKind) -> Result<Vec<RunOutput>> {
    let gen = load_generator(sc, sys);
    let load0 = gen.signal(0.0, &sys.load_box);
    let mut jobs = Vec::new();
    for &seed in &sc.seeds {
        let inits = make_inits(&sc.inits, sys.state_dim(), sys.mode_count(), &load0, seed);
        for (i, init) in inits.into_iter().enumerate() {
            jobs.push((seed, i, init));
        }
    }
    let pool = thread_pool()?;
    let results: Vec<Result<RunOutput>> = pool.install(|| {
        use rayon::prelude::*;
        jobs.into_par_iter()
            .map(|(seed, init_index, init)| {
                let mut cfg = sc.sim.clone();
                cfg.seed = seed.wrapping_mul(0x9e37_79b9).wrapping_add(init_index as u64);
                let arc = match kind {
                    SimKind::SlowSwitching => simulate_hdelta(sys, &cfg, &gen, &init)?,
                    SimKind::Iss => simulate_iss(sys, &cfg, &gen, &init)?,
                };
                validate_arc(&arc, sys, &cfg)?;
                Ok(RunOutput
                {
                    seed,
                    init_index,
                    arc,
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

fn write_arcs(out_dir: &Path, sys: &SwitchedSystem, runs: &[RunOutput]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for r in runs {
        let xs = to_original_coords(&r.arc, sys)?;
        let arc_path = out_dir.join(format!("arc_s{}_i{}.csv", r.seed, r.init_index));
        io::write_arc_csv(&arc_path, &r.arc, &xs)?;
        let jump_path = out_dir.join(format!("jumps_s{}_i{}.csv", r.seed, r.init_index));
        io::write_jump_csv(&jump_path, &r.arc)?;
        written.push(arc_path);
        written.push(jump_path);
    }
    Ok(written)
}

/// `build-model`: writes `model.json`.
pub fn cmd_build_model(sc: &Scenario, out_dir: &Path) -> Result<ModelExport> {
    let sys = sc.build_system()?;
    let export = model_export(&sc.name, &sys)?;
    io::write_json(&out_dir.join("model.json"), &export)?;
    Ok(export)
}

/// `simulate`: writes per-run arc and jump CSVs.
pub fn cmd_simulate(sc: &Scenario, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let sys = sc.build_system()?;
    let runs = run_batch(sc, &sys, sc.sim_kind)?;
    write_arcs(out_dir, &sys, &runs)
}

/// `omega-set`: writes `omega_set.json`.
pub fn cmd_omega_set(sc: &Scenario, out_dir: &Path) -> Result<OmegaSet> {
    let sys = sc.build_system()?;
    let omega = build_omega_set_with(
        &sys,
        &OmegaBuildOptions {
            eps_tail: sc.omega.eps_tail,
            chord_tol: sc.omega.chord_tol,
            max_samples: sc.omega.max_samples,
        },
    )?;
    io::write_json(&out_dir.join("omega_set.json"), &omega)?;
    Ok(omega)
}

/// `distance`: simulates the batch and writes one distance CSV per run.
pub fn cmd_distance(sc: &Scenario, out_dir: &Path) -> Result<Vec<DistanceTrace>> {
    let sys = sc.build_system()?;
    let omega = build_omega_set_with(
        &sys,
        &OmegaBuildOptions {
            eps_tail: sc.omega.eps_tail,
            chord_tol: sc.omega.chord_tol,
            max_samples: sc.omega.max_samples,
        },
    )?;
    let runs = run_batch(sc, &sys, sc.sim_kind)?;
    let mut traces = Vec::with_capacity(runs.len());
    for r in &runs {
        let trace = distance_trace(&r.arc, &omega)?;
        io::write_distance_csv(
            &out_dir.join(format!("dist_s{}_i{}.csv", r.seed, r.init_index)),
            &trace,
        )?;
        traces.push(trace);
    }
    Ok(traces)
}

/// `iss-cert`: synthesizes and writes `certificate.json`.
pub fn cmd_iss_cert(sc: &Scenario, out_dir: &Path) -> Result<IssCertificate> {
    let sys = sc.build_system()?;
    let cert = synthesize_certificate(&sys, sc.cert.theta, sc.cert.n0, None)?;
    io::write_json(&out_dir.join("certificate.json"), &cert)?;
    Ok(cert)
}

/// Summary of one `verify-iss` pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySummary {
    pub runs: usize,
    pub bound_pass: bool,
    pub decrease_pass: bool,
    pub total_jumps: usize,
    pub worst_bound_margin: f64,
    pub u_inf: f64,
}

/// `verify-iss`: ISS runs at the certificate's operating rate, checking
/// the decrease inequalities and the closed-loop bound on every run.
pub fn cmd_verify_iss(sc: &Scenario, out_dir: &Path) -> Result<VerifySummary> {
    let sys = sc.build_system()?;
    let cert = synthesize_certificate(&sys, sc.cert.theta, sc.cert.n0, None)?;
    let gen = load_generator(sc, &sys);
    let u_inf = sys.load_box.max_norm();

    let load0 = gen.signal(0.0, &sys.load_box);
    let mut jobs = Vec::new();
    for &seed in &sc.seeds {
        let inits = make_inits(&sc.inits, sys.state_dim(), sys.mode_count(), &load0, seed);
        for (i, mut init) in inits.into_iter().enumerate() {
            // Odd init indices start inside the jump window to exercise
            // switches even when the admissible timer rate is tiny.
            init.timer = if i % 2 == 1 { 1.0 } else { 0.0 };
            jobs.push((seed, i, init));
        }
    }

    let pool = thread_pool()?;
    let results: Vec<Result<(u64, usize, HybridArc, VerificationReport, VerificationReport)>> =
        pool.install(|| {
            use rayon::prelude::*;
            jobs.into_par_iter()
                .map(|(seed, i, init)| {
                    let mut cfg = sc.sim.clone();
                    cfg.seed = seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64);
                    cfg.eta = 0.5 * cert.eta_star;
                    cfg.n0 = cert.n0;
                    let arc = simulate_iss(&sys, &cfg, &gen, &init)?;
                    validate_arc(&arc, &sys, &cfg)?;
                    let dec = check_decrease(&arc, &cert, &sys, &gen)?;
                    let bound = check_iss_bound(&arc, &cert, u_inf)?;
                    Ok((seed, i, arc, dec, bound))
                })
                .collect()
        });

    let mut summary = VerifySummary {
        runs: 0,
        bound_pass: true,
        decrease_pass: true,
        total_jumps: 0,
        worst_bound_margin: f64::INFINITY,
        u_inf,
    };
    let mut reports = Vec::new();
    for res in results {
        let (seed, i, arc, dec, bound) = res?;
        summary.runs += 1;
        summary.total_jumps += arc.jumps.len();
        summary.decrease_pass &= dec.passed();
        summary.bound_pass &= bound.passed();
        for (_, _, m) in &bound.margin_trace {
            summary.worst_bound_margin = summary.worst_bound_margin.min(*m);
        }
        io::write_margin_csv(
            &out_dir.join(format!("bound_margin_s{seed}_i{i}.csv")),
            &bound.margin_trace,
        )?;
        reports.push(serde_json::json!({
            "seed": seed,
            "init": i,
            "jumps": arc.jumps.len(),
            "decrease": dec,
            "bound_status": bound.status,
        }));
    }
    io::write_json(
        &out_dir.join("verify_report.json"),
        &serde_json::json!({
            "summary": &summary,
            "certificate": { "eta_star": cert.eta_star, "kappa": [cert.kappa1, cert.kappa2, cert.kappa3], "c": cert.c },
            "runs": reports,
        }),
    )?;
    Ok(summary)
}

/// End-to-end pipeline summary for `reproduce`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReproduceSummary {
    pub name: String,
    pub state_dim: usize,
    pub mode_count: usize,
    pub curve_count: usize,
    pub curve_tail_gaps: Vec<f64>,
    pub arc_count: usize,
    pub tail_sup_distances: Vec<f64>,
    pub certificate: Option<VerifySummary>,
}

/// `reproduce <preset>`: model, limit set, arc batch, distance traces,
/// and (where the preset defines one) the certificate pipeline.
pub fn cmd_reproduce(sc: &Scenario, out_dir: &Path, with_cert: bool) -> Result<ReproduceSummary> {
    let sys = sc.build_system()?;
    let export = model_export(&sc.name, &sys)?;
    io::write_json(&out_dir.join("model.json"), &export)?;

    let omega = build_omega_set_with(
        &sys,
        &OmegaBuildOptions {
            eps_tail: sc.omega.eps_tail,
            chord_tol: sc.omega.chord_tol,
            max_samples: sc.omega.max_samples,
        },
    )?;
    io::write_json(&out_dir.join("omega_set.json"), &omega)?;

    let curve_tail_gaps: Vec<f64> = omega
        .curves
        .iter()
        .map(|c| {
            let last = c.point(c.len() - 1);
            let target = DVector::from_vec(omega.equilibria[c.flow_mode].clone());
            (last - target).norm()
        })
        .collect();

    let runs = run_batch(sc, &sys, SimKind::SlowSwitching)?;
    write_arcs(out_dir, &sys, &runs)?;

    let mut tail_sups = Vec::with_capacity(runs.len());
    for r in &runs {
        let trace = distance_trace(&r.arc, &omega)?;
        io::write_distance_csv(
            &out_dir.join(format!("dist_s{}_i{}.csv", r.seed, r.init_index)),
            &trace,
        )?;
        tail_sups.push(trace.tail_sup(sc.sim.horizon * 0.5));
    }

    let certificate = if with_cert {
        let cert = synthesize_certificate(&sys, sc.cert.theta, sc.cert.n0, None)?;
        io::write_json(&out_dir.join("certificate.json"), &cert)?;
        Some(cmd_verify_iss(sc, out_dir)?)
    } else {
        None
    };

    let summary = ReproduceSummary {
        name: sc.name.clone(),
        state_dim: sys.state_dim(),
        mode_count: sys.mode_count(),
        curve_count: omega.curves.len(),
        curve_tail_gaps,
        arc_count: runs.len(),
        tail_sup_distances: tail_sups,
        certificate,
    };
    io::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}
