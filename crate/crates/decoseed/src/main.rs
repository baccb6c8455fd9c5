//! Command-line entry point: runs decoherence scenarios from config files
//! or built-in presets.
//!
//! Exit codes: 0 = run completed with every validation passing, 2 =
//! configuration or validation failure, 3 = oracle mismatch, 1 = any
//! other error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use decoseed::harness::{parse_scenario, preset, preset_names, run_scenario, ScenarioConfig};
use decoseed::DecoError;

#[derive(Parser)]
#[command(
    name = "decoseed",
    version,
    about = "Exactly soluble decoherence models: sector dephasing curves, \
             infrared classification, and scattering-induced sector survival"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or a built-in preset
    Run {
        /// Path to a scenario config (omit when using --preset)
        config_path: Option<PathBuf>,
        /// Write artifacts here instead of the configured directory
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
        /// Override the oracle switch
        #[arg(long, value_name = "on|off")]
        oracle: Option<String>,
        /// Use a named built-in preset instead of a config file
        #[arg(long, value_name = "NAME")]
        preset: Option<String>,
        /// List the built-in presets and exit
        #[arg(long)]
        list_presets: bool,
    },
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config_path,
            output_dir,
            oracle,
            preset: preset_name,
            list_presets,
        } => run_command(config_path, output_dir, oracle, preset_name, list_presets),
    }
}

/// DECOSEED_THREADS caps worker parallelism; 0 or unset means automatic.
fn configure_threads() {
    let Ok(raw) = std::env::var("DECOSEED_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        Err(_) => {
            eprintln!("warning: ignoring non-numeric DECOSEED_THREADS='{raw}'");
        }
    }
}

fn run_command(
    config_path: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    oracle: Option<String>,
    preset_name: Option<String>,
    list_presets: bool,
) -> ExitCode {
    if list_presets {
        for name in preset_names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }

    let mut config: ScenarioConfig = match (&config_path, &preset_name) {
        (Some(_), Some(_)) => {
            eprintln!("error: pass either a config path or --preset, not both");
            return ExitCode::from(2);
        }
        (None, None) => {
            eprintln!("error: pass a config path or --preset NAME (see --list-presets)");
            return ExitCode::from(2);
        }
        (Some(path), None) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            };
            match parse_scenario(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
        (None, Some(name)) => match preset(name) {
            Some(c) => c,
            None => {
                eprintln!(
                    "error: unknown preset '{name}'; available: {}",
                    preset_names().join(", ")
                );
                return ExitCode::from(2);
            }
        },
    };

    if let Some(dir) = output_dir {
        config.output.directory = dir.display().to_string();
    }
    if let Some(flag) = oracle {
        match flag.as_str() {
            "on" => config.oracle.enabled = true,
            "off" => config.oracle.enabled = false,
            other => {
                eprintln!("error: --oracle expects on or off, got '{other}'");
                return ExitCode::from(2);
            }
        }
    }
    // Re-validate after overrides: an oracle forced onto a model without
    // an oracle route must fail the same way a config file would.
    if let Err(e) = parse_scenario(&decoseed::harness::serialize_scenario(&config)) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    match run_scenario(&config) {
        Ok(artifacts) => {
            println!("scenario {} ({})", config.name, config.model.kind_name());
            println!("output   {}", artifacts.output_dir.display());
            for path in &artifacts.files {
                println!("wrote    {}", path.display());
            }
            if let Some(dev) = artifacts.oracle_deviation {
                println!(
                    "oracle   deviation {dev:.3e} within tolerance {:.1e}",
                    config.oracle.tolerance
                );
            }
            for (name, ok) in &artifacts.validation {
                println!("check    {name}: {}", if *ok { "pass" } else { "FAIL" });
            }
            for note in &artifacts.notes {
                println!("note     {note}");
            }
            if artifacts.all_valid() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: one or more validations failed");
                ExitCode::from(2)
            }
        }
        Err(e @ DecoError::OracleMismatch { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e @ (DecoError::ParseError { .. } | DecoError::ValidationErrors(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
