use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ncergo_cli::{invoke, Overrides, EXPERIMENTS};

#[derive(Parser, Debug)]
#[command(name = "ncergo", version, about = "Numerical experiments on multi-parameter ergodic averages")]
struct Args {
    /// Experiment kind (see --list-experiments).
    #[arg(required_unless_present = "list_experiments")]
    experiment: Option<String>,
    /// JSON configuration document.
    #[arg(long, required_unless_present = "list_experiments")]
    config: Option<PathBuf>,
    /// Artifact path, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Print the experiment kinds and exit.
    #[arg(long)]
    list_experiments: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if args.list_experiments {
        for (name, about) in EXPERIMENTS {
            println!("{name:<15} {about}");
        }
        return ExitCode::SUCCESS;
    }
    let (Some(experiment), Some(config)) = (args.experiment, args.config) else {
        unreachable!("clap enforces experiment and config");
    };
    let overrides = Overrides { out: args.out, seed: args.seed, horizon: args.horizon };
    let report = invoke(&experiment, &config, &overrides);
    println!("{}", report.summary);
    ExitCode::from(report.exit_code)
}
