use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use arz_core::harness::{self, Mode, ScenarioConfig};
use arz_core::{ArzError, Result};

/// ARZ freeway traffic simulation and boundary state estimation.
#[derive(Parser, Debug)]
#[command(name = "arz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the plant alone.
    Simulate(Common),
    /// Run plant and observer in closed loop.
    Estimate(Common),
    /// Run the observer on recorded boundary measurements.
    Replay {
        #[command(flatten)]
        common: Common,
        /// CSV with columns t,q_in,q_out,v_out.
        #[arg(long)]
        measurements: PathBuf,
    },
    /// Linear convergence study on three grids.
    VerifyLinear(Common),
    /// Write the injection gain table.
    Gains(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (key = value lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
}

impl Common {
    fn load(&self, mode: Mode) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => harness::load_config(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(d) = self.duration {
            if !(d > 0.0 && d.is_finite()) {
                return Err(ArzError::ConfigValue {
                    key: "duration".into(),
                    message: format!("must be positive, got {d}"),
                });
            }
            cfg.duration = d;
        }
        cfg.mode = mode;
        Ok(cfg)
    }
}

fn print_summary(entries: &[(String, String)], out: &Path) {
    for (k, v) in entries {
        println!("{k}: {v}");
    }
    println!("output: {}", out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = c.load(Mode::PlantOnly)?;
            let r = harness::run_plant_only(&cfg, Some(&c.out))?;
            print_summary(&r.summary, &c.out);
        }
        Command::Estimate(c) => {
            let cfg = c.load(Mode::ClosedLoop)?;
            let r = harness::run_closed_loop(&cfg, Some(&c.out))?;
            print_summary(&r.summary, &c.out);
        }
        Command::Replay { common, measurements } => {
            let cfg = common.load(Mode::Replay)?;
            let series = harness::load_measurements(&measurements, cfg.interpolation)?;
            let r = harness::run_replay(&cfg, &series, Some(&common.out))?;
            print_summary(&r.summary, &common.out);
        }
        Command::VerifyLinear(c) => {
            let cfg = c.load(Mode::LinearVerify)?;
            let r = harness::run_linear_verify(&cfg, Some(&c.out))?;
            print_summary(&r.summary, &c.out);
        }
        Command::Gains(c) => {
            let cfg = c.load(Mode::ClosedLoop)?;
            let gt = harness::run_gains(&cfg, Some(&c.out))?;
            println!("variant: {}", gt.variant.name());
            println!("cells: {}", gt.len());
            println!("t_f: {}", gt.t_f);
            println!("output: {}", c.out.join("gains.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
