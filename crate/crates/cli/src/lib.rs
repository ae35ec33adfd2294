//! Scenario-driven front end for `coopdyn-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod emit;
pub mod scenario;

use anyhow::Result;
use std::path::{Path, PathBuf};

pub use commands::{run_command, Command, Outcome, Status};
pub use emit::{emit_outputs, Artifact, Manifest};
pub use scenario::{parse_scenario, Scenario};

/// Exit code for inconclusive verdicts.
pub const EXIT_INCONCLUSIVE: i32 = 2;
/// Exit code for errors.
pub const EXIT_ERROR: i32 = 1;

/// `--out`, else the scenario's `out`, else `out/<name>/<command>`.
pub fn output_dir(explicit: Option<&Path>, sc: &Scenario, command: Command) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| sc.out.clone())
        .unwrap_or_else(|| Path::new("out").join(&sc.name).join(command.name()))
}

/// Parse, run and emit; returns the manifest and the verdict status.
pub fn execute(
    command: Command,
    scenario_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<(Manifest, Status)> {
    let mut sc = parse_scenario(scenario_path)?;
    if seed.is_some() {
        sc.seed = seed;
    }
    let outcome = run_command(command, &sc)?;
    let dir = output_dir(out, &sc, command);
    let echo = serde_json::to_value(&sc)?;
    let manifest = emit_outputs(&outcome.artifacts, &dir, command.name(), sc.seed, echo)?;
    Ok((manifest, outcome.status))
}
