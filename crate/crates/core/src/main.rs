//! Scenario-driven command line: load a scenario (file or preset), apply
//! overrides, run the requested pipeline, and emit CSV/JSON artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use omega_grid::error::{Error, Result};
use omega_grid::scenario::{
    apply_dotted_overrides, cmd_build_model, cmd_distance, cmd_iss_cert, cmd_omega_set,
    cmd_reproduce, cmd_simulate, cmd_verify_iss, preset_text, Scenario,
};

#[derive(Parser)]
#[command(
    name = "omega-grid",
    about = "Simulation and certification toolkit for power grids with switching equilibria",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct CommonArgs {
    /// Scenario file path, or the name of a shipped preset
    /// (example1, ieee39-aggregate, ieee39-full).
    #[arg(long)]
    scenario: String,
    /// Override a scenario value by dotted path, e.g. --set sim.horizon=100.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (defaults to the scenario's out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the scenario's seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the switched system and emit its matrices and equilibria.
    BuildModel(CommonArgs),
    /// Run the simulation batch and emit arc and jump-log CSVs.
    Simulate(CommonArgs),
    /// Construct the limit set and emit it as JSON.
    OmegaSet(CommonArgs),
    /// Simulate and emit per-run distance traces against the limit set.
    Distance(CommonArgs),
    /// Synthesize the ISS certificate and emit it as JSON.
    IssCert(CommonArgs),
    /// Synthesize, run ISS batches, and verify the certificate bounds.
    VerifyIss(CommonArgs),
    /// End-to-end pipeline for a named preset.
    Reproduce {
        /// Preset name: example1, ieee39-aggregate, or ieee39-full.
        preset: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_sets(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Config {
                    path: kv.clone(),
                    message: "expected KEY=VALUE".into(),
                })
        })
        .collect()
}

/// Loads a scenario from a path or preset name and applies overrides.
fn load_scenario(
    source: &str,
    sets: &[String],
    out: &Option<PathBuf>,
    seed: &Option<u64>,
) -> Result<(Scenario, PathBuf)> {
    let text = if std::path::Path::new(source).exists() {
        std::fs::read_to_string(source)?
    } else {
        preset_text(source)?.to_string()
    };
    let mut doc: serde_json::Value = serde_json::from_str(&text)?;
    apply_dotted_overrides(&mut doc, &parse_sets(sets)?)?;
    let mut scenario = Scenario::from_json(&doc.to_string())?;
    if let Some(s) = seed {
        scenario.seeds = vec![*s];
    }
    let out_dir = out.clone().unwrap_or_else(|| PathBuf::from(&scenario.out_dir));
    Ok((scenario, out_dir))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildModel(args) => {
            let (sc, out) = load_scenario(&args.scenario, &args.sets, &args.out, &args.seed)?;
            let export = cmd_build_model(&sc, &out)?;
            println!(
                "model '{}': {} modes, state dim {}, delta3 = {}, c = {}",
                export.name, export.mode_count, export.state_dim, export.delta3, export.c
            );
        }
        Command::Simulate(args) => {
            let (sc, out) = load_scenario(&args.scenario, &args.sets, &args.out, &args.seed)?;
            let files = cmd_simulate(&sc, &out)?;
            println!("wrote {} files under {}", files.len(), out.display());
        }
        Command::OmegaSet(args) => {
            let (sc, out) = load_scenario(&args.scenario, &args.sets, &args.out, &args.seed)?;
            let omega = cmd_omega_set(&sc, &out)?;
            println!(
                "limit set: {} curves, {} equilibria, eps_tail = {}",
                omega.curves.len(),
                omega.equilibria.len(),
                omega.eps_tail
            );
        }
        Command::Distance(args) => {
            let (sc, out) = load_scenario(&args.scenario, &args.sets, &args.out, &args.seed)?;
            let traces = cmd_distance(&sc, &out)?;
            for (k, tr) in traces.iter().enumerate() {
                println!("trace {k}: max distance = {}", tr.max());
            }
        }
        Command::IssCert(args) => {
            let (sc, out) = load_scenario(&args.scenario, &args.sets, &args.out, &args.seed)?;
            let cert = cmd_iss_cert(&sc, &out)?;
            println!(
                "certificate: eta* = {}, lambda = {}, kappa = ({}, {}, {}), c = {}",
                cert.eta_star, cert.lambda, cert.kappa1, cert.kappa2, cert.kappa3, cert.c
            );
        }
        Command::VerifyIss(args) => {
            let (sc, out) = load_scenario(&args.scenario, &args.sets, &args.out, &args.seed)?;
            let summary = cmd_verify_iss(&sc, &out)?;
            println!(
                "verify: {} runs, {} jumps, bound {}, decrease {}",
                summary.runs,
                summary.total_jumps,
                if summary.bound_pass { "pass" } else { "FAIL" },
                if summary.decrease_pass { "pass" } else { "FAIL" },
            );
            if !(summary.bound_pass && summary.decrease_pass) {
                return Err(Error::Infeasible("verification failed".into()));
            }
        }
        Command::Reproduce { preset, sets, out, seed } => {
            let (sc, out_dir) = load_scenario(&preset, &sets, &out, &seed)?;
            let with_cert = preset != "ieee39-full";
            let summary = cmd_reproduce(&sc, &out_dir, with_cert)?;
            println!(
                "reproduce '{}': {} curves, {} arcs, tail distances {:?}",
                summary.name, summary.curve_count, summary.arc_count, summary.tail_sup_distances
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": {
                    "kind": err.kind(),
                    "message": err.to_string(),
                }
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
