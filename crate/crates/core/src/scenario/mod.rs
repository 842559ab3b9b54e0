//! Scenario files, shipped presets, artifact writers, and the command
//! implementations behind the CLI.

pub mod io;
mod presets;
mod run;
mod schema;

pub use presets::{preset_scenario, preset_text, PRESET_NAMES};
pub use run::{
    cmd_build_model, cmd_distance, cmd_iss_cert, cmd_omega_set, cmd_reproduce, cmd_simulate,
    cmd_verify_iss, make_inits, model_export, run_batch, ModelExport, ModeExport,
    ReproduceSummary, RunOutput, VerifySummary,
};
pub use schema::{
    apply_dotted_overrides, build_system, CertOptions, DeaOverride, InitSpec, InlineMode,
    NetworkJson, OmegaOptions, ParamMode, Scenario, SimKind, SystemSource,
};
