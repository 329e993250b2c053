use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lagdiff_cli::{
    parse_ladder, preset, preset_names, run_experiment, run_sweep, ConfigError, ExperimentConfig, Preset, RunError,
};

#[derive(Parser)]
#[command(name = "lagdiff", about = "Lagrangian porous-medium solver experiments")]
struct Cli {
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// No randomness is used anywhere; accepted for scripting.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Refinement sweep of a config over a ladder of (N, tau) rows.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ladder: PathBuf,
    },
    /// Named experiment.
    Preset { name: String },
    /// Lists preset names.
    Presets,
}

fn out_dir(cli_out: &Option<PathBuf>, cfg: &ExperimentConfig, fallback: &str) -> PathBuf {
    cli_out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(fallback))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = cli.seedless;
    let result: Result<(), Box<dyn std::error::Error>> = (|| {
        match &cli.command {
            Command::Run { config } => {
                let cfg = ExperimentConfig::load(config)?;
                let out = out_dir(&cli.out, &cfg, "out");
                let s = run_experiment(&cfg, &out)?;
                println!("{} steps to t = {}, results in {}", s.steps, s.t_reached, out.display());
            }
            Command::Sweep { config, ladder } => {
                let cfg = ExperimentConfig::load(config)?;
                let text =
                    std::fs::read_to_string(ladder).map_err(|e| format!("cannot read {}: {e}", ladder.display()))?;
                let out = out_dir(&cli.out, &cfg, "out");
                run_sweep(&cfg, &parse_ladder(&text)?, &out)?;
                print!("{}", std::fs::read_to_string(out.join("convergence.csv"))?);
            }
            Command::Preset { name } => {
                let p = preset(name).ok_or_else(|| format!("unknown preset '{name}' (see `lagdiff presets`)"))?;
                let fallback = format!("out/{name}");
                match p {
                    Preset::Run(cfg) => {
                        let out = out_dir(&cli.out, &cfg, &fallback);
                        let s = run_experiment(&cfg, &out)?;
                        println!("{} steps to t = {}, results in {}", s.steps, s.t_reached, out.display());
                    }
                    Preset::Sweep(cfg, ladder) => {
                        let out = out_dir(&cli.out, &cfg, &fallback);
                        run_sweep(&cfg, &ladder, &out)?;
                        print!("{}", std::fs::read_to_string(out.join("convergence.csv"))?);
                    }
                }
            }
            Command::Presets => {
                for n in preset_names() {
                    println!("{n}");
                }
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is::<ConfigError>() || e.downcast_ref::<RunError>().is_some_and(|r| matches!(r, RunError::Config(_))) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
