//! Experiment runner: reads one JSON config, runs the experiment, writes its
//! CSV or JSON artifact and reports a one-line summary.
//!
//! Exit codes: 0 when the verdict is pass or converged, 1 on fail, diverged,
//! inconclusive or a module error, 2 on a configuration error. Nothing is
//! written unless the experiment finishes.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::Path;

pub use config::{Config, Overrides, EXPERIMENTS};
pub use error::CliError;
pub use experiments::Outcome;

/// Summary line and exit code of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub summary: String,
    pub exit_code: u8,
}

pub fn run_config(cfg: &Config) -> Result<Outcome, CliError> {
    let outcome = experiments::run(cfg)?;
    output::write_artifact(cfg.output_path(), &outcome.artifact)?;
    Ok(outcome)
}

/// Loads, resolves and runs; never panics on bad input.
pub fn invoke(experiment: &str, config_path: &Path, overrides: &Overrides) -> Report {
    let cfg = match Config::load(config_path).and_then(|c| c.resolve(experiment, overrides)) {
        Ok(c) => c,
        Err(e) => return failure(experiment, &e),
    };
    match run_config(&cfg) {
        Ok(o) => Report {
            summary: format!(
                "{experiment} verdict={} {}={:.6e} artifact={}",
                o.verdict,
                o.key.0,
                o.key.1,
                cfg.output_path().display()
            ),
            exit_code: if o.success { 0 } else { 1 },
        },
        Err(e) => failure(experiment, &e),
    }
}

fn failure(experiment: &str, e: &CliError) -> Report {
    Report {
        summary: format!("{experiment} verdict=error error={} detail={:?}", e.name(), e.to_string()),
        exit_code: e.exit_code(),
    }
}
