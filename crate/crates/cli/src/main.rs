//! Scenario runner for the conic toolkit.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 configuration
//! error, 3 runtime or numeric error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conic_cli::config::ScenarioConfig;
use conic_cli::{plots, runner, scenarios};

#[derive(Parser)]
#[command(
    name = "conic",
    about = "relativistic kinetics on the conic bundle",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List the bundled scenarios.
    ListScenarios,
    /// Run a bundled scenario by name.
    Check {
        name: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write plot-ready long-format CSV for a finished run directory.
    EmitPlots { run_dir: PathBuf },
}

#[derive(clap::Args)]
struct Overrides {
    /// Override the random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the integration step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Scale every check tolerance by this factor.
    #[arg(long)]
    tol: Option<f64>,
}

fn apply_overrides(cfg: &mut ScenarioConfig, ov: &Overrides) {
    if let Some(seed) = ov.seed {
        cfg.numeric.seed = seed;
    }
    if let Some(steps) = ov.steps {
        cfg.numeric.steps = steps;
    }
    if let Some(tol) = ov.tol {
        cfg.numeric.tol_scale = tol;
    }
}

fn output_root(cfg: &ScenarioConfig, ov: &Overrides) -> PathBuf {
    if let Some(out) = &ov.out {
        return out.clone();
    }
    if let Some(dir) = &cfg.output.dir {
        return PathBuf::from(dir);
    }
    if let Ok(root) = std::env::var("CONIC_OUT") {
        return PathBuf::from(root);
    }
    PathBuf::from("conic-out")
}

fn execute(cfg: ScenarioConfig, ov: &Overrides) -> ExitCode {
    let root = output_root(&cfg, ov);
    let name = cfg.name.clone();
    match runner::run(cfg, &root) {
        Ok(outcome) => {
            for check in &outcome.checks {
                let tag = if check.pass { "PASS" } else { "FAIL" };
                println!(
                    "[{tag}] {name}: {} = {:.3e} ({} {:.3e})",
                    check.name, check.measured, check.direction, check.threshold
                );
            }
            println!("summary: {}", outcome.summary_path.display());
            if outcome.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("runtime error in scenario '{name}': {e:#}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let mut cfg = match ScenarioConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            apply_overrides(&mut cfg, &overrides);
            execute(cfg, &overrides)
        }
        Command::ListScenarios => {
            for s in scenarios::catalog() {
                println!("{:28} {}", s.name, s.description);
            }
            ExitCode::SUCCESS
        }
        Command::Check { name, overrides } => match scenarios::by_name(&name) {
            Some(mut cfg) => {
                apply_overrides(&mut cfg, &overrides);
                execute(cfg, &overrides)
            }
            None => {
                eprintln!("unknown scenario '{name}'; run `conic list-scenarios` for the catalog");
                ExitCode::from(2)
            }
        },
        Command::EmitPlots { run_dir } => match plots::emit_plots(&run_dir) {
            Ok(files) => {
                for f in files {
                    println!("wrote {f}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("emit-plots failed: {e:#}");
                ExitCode::from(3)
            }
        },
    }
}
