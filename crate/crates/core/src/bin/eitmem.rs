use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eitmem::config;
use eitmem::presets;
use eitmem::runner::{self, RunError};

/// EIT quantum-memory simulator.
#[derive(Parser)]
#[command(name = "eitmem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a configuration file.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output_dir, else out/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the random seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
    /// List or copy the bundled presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Write a preset to NAME.json (or --to PATH).
    Copy {
        name: String,
        #[arg(long)]
        to: Option<PathBuf>,
    },
}

fn report(err: &RunError) -> ExitCode {
    match err {
        RunError::Invalid(issues) => {
            for issue in issues {
                eprintln!("error: {issue}");
            }
        }
        RunError::Failed(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = match config::load(&config) {
                Ok(cfg) => cfg,
                Err(issues) => return report(&RunError::Invalid(issues)),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(cfg.scenario.name()));
            match runner::run(&cfg, &dir) {
                Ok(manifest) => {
                    println!("{} artifacts written to {}", manifest.artifacts.len(), dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => report(&e),
            }
        }
        Command::Validate { config } => {
            let issues = match config::load(&config) {
                Ok(cfg) => cfg.resolved().validate(),
                Err(issues) => issues,
            };
            if issues.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                report(&RunError::Invalid(issues))
            }
        }
        Command::Preset { action } => match action {
            PresetAction::List => {
                for p in presets::PRESETS {
                    println!("{:<22} {}", p.name, p.description);
                }
                ExitCode::SUCCESS
            }
            PresetAction::Copy { name, to } => {
                let preset = match presets::find(&name) {
                    Ok(p) => p,
                    Err(e) => return report(&RunError::Failed(e)),
                };
                let path = to.unwrap_or_else(|| PathBuf::from(format!("{name}.json")));
                if let Err(e) = std::fs::write(&path, preset.json) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(3);
                }
                println!("{}", path.display());
                ExitCode::SUCCESS
            }
        },
    }
}
