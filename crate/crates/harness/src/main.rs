use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ris_sim::{preset, run_experiment, write_outputs, ExperimentConfig, SimError, PRESET_NAMES};

#[derive(Parser)]
#[command(
    name = "ris-sim",
    about = "Monte-Carlo simulator for RIS coexistence between neighbouring networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a JSON config file.
    Simulate {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Dotted-path override, e.g. `scenario.nb_ris_distance=80`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    ListPresets,
    /// Array-factor pattern of a uniform linear array.
    Pattern {
        #[arg(long, default_value_t = 16)]
        elements: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(
    preset_name: Option<String>,
    config: Option<PathBuf>,
    trials: Option<usize>,
    seed: Option<u64>,
    overrides: &[String],
) -> Result<ExperimentConfig, SimError> {
    let mut cfg = match (preset_name, config) {
        (Some(name), _) => preset(&name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
            ExperimentConfig::from_json(&text)?
        }
        (None, None) => unreachable!("clap requires one of --preset and --config"),
    };
    let mut all = overrides.to_vec();
    if let Some(t) = trials {
        all.push(format!("trials={t}"));
    }
    if let Some(s) = seed {
        all.push(format!("master_seed={s}"));
    }
    if !all.is_empty() {
        cfg = cfg.with_overrides(&all)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::ListPresets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
        }
        Command::Simulate {
            preset,
            config,
            trials,
            seed,
            out,
            overrides,
        } => {
            let cfg = load(preset, config, trials, seed, &overrides)?;
            let result = run_experiment(&cfg)?;
            for p in write_outputs(&result, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Pattern { elements, out } => {
            let cfg = preset("fig7_pattern")?
                .with_overrides(&[format!("pattern.elements={elements}")])?;
            let result = run_experiment(&cfg)?;
            for p in write_outputs(&result, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SimError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
