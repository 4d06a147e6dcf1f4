use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bests_core::cli::{self, Artifact, CliError, RhoRange, OUT_DIR_ENV};
use bests_core::RobotConfig;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bests-sim", version, about = "Soft decapod robot simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Robot configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to $BESTS_SIM_OUT, then the config.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Unit bend against bellows curvature for both leg sizes.
    Characterize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho_min: Option<f64>,
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long)]
        points: Option<u32>,
    },
    /// Output bend against servo twist for several gas volumes.
    TwistSweep {
        #[command(flatten)]
        common: Common,
        /// Override the input bellows rib count.
        #[arg(long)]
        ribs: Option<u32>,
    },
    /// Leg bends, contacts and roles over a servo schedule.
    Gait {
        #[command(flatten)]
        common: Common,
        /// Built-in name (walk, turn-left, turn-right, cycle, s, o) or a schedule TOML file.
        #[arg(long, default_value = "cycle")]
        schedule: String,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Body trajectory for a servo schedule or planned path.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "walk")]
        schedule: String,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Fit the stride model and check it by simulation.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
}

fn run(args: Args) -> Result<(), CliError> {
    let started = Instant::now();
    let (name, common) = match &args.command {
        Command::Characterize { common, .. } => ("characterize", common),
        Command::TwistSweep { common, .. } => ("twist-sweep", common),
        Command::Gait { common, .. } => ("gait", common),
        Command::Simulate { common, .. } => ("simulate", common),
        Command::Calibrate { common } => ("calibrate", common),
    };
    let config = RobotConfig::load(&common.config)?;
    let out_dir = cli::resolve_out_dir(common.out.clone(), &config);
    let artifacts: Vec<Artifact> = match &args.command {
        Command::Characterize {
            rho_min,
            rho_max,
            points,
            ..
        } => {
            let base = RhoRange::from_config(&config);
            let range = RhoRange {
                min: rho_min.unwrap_or(base.min),
                max: rho_max.unwrap_or(base.max),
                points: points.unwrap_or(base.points),
            };
            cli::characterize(&config, range)?
        }
        Command::TwistSweep { ribs, .. } => cli::twist_sweep(&config, *ribs)?,
        Command::Gait { schedule, dt, .. } => {
            let dt = dt.unwrap_or(config.gait.dt_s);
            let resolved = cli::resolve_schedule(&config, schedule, dt)?;
            cli::gait(&config, &resolved.schedule, dt)?
        }
        Command::Simulate { schedule, dt, .. } => {
            let dt = dt.unwrap_or(config.paths.dt_s);
            cli::simulate(&config, schedule, dt)?.1
        }
        Command::Calibrate { .. } => cli::calibrate(&config)?.1,
    };
    let report = cli::write_artifacts(&out_dir, name, &config, &artifacts, started)?;
    for a in &report.artifacts {
        println!("{}", out_dir.join(&a.file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
