use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use capsule_cli::commands::{self, PlotRequest, RunContext};
use capsule_cli::config::{parse_config, ConfigError, Mode};

#[derive(Parser)]
#[command(
    name = "capsule",
    version,
    about = "Capsule-pendulum simulation and reduced-order analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides [output] dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV written by another subcommand.
    #[arg(long)]
    input: PathBuf,
    /// Column for the horizontal axis.
    #[arg(long)]
    x: String,
    /// Columns to draw, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    #[arg(long)]
    scatter: bool,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the full model and compare with the matching reduced model.
    Simulate(RunArgs),
    /// Integrate the oscillatory slow flow.
    Slowflow(RunArgs),
    /// Integrate the rotatory averaged flow.
    Averaged(RunArgs),
    /// Slow-flow fixed points and bifurcation values.
    FixedPoints(RunArgs),
    /// Parameter sweeps on a worker pool.
    Sweep(SweepArgs),
    /// Full model against the reduced-model prediction over time.
    Compare(RunArgs),
    /// Render columns of a result CSV as SVG.
    Plot(PlotArgs),
}

fn scenario(args: &RunArgs, mode: Mode, workers: usize) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = parse_config(&text)?;
    let ctx = RunContext::new(&cfg, mode, args.out.as_deref(), workers);
    for path in commands::run(&cfg, &ctx)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => scenario(&a, Mode::Simulate, 0),
        Command::Slowflow(a) => scenario(&a, Mode::Slowflow, 0),
        Command::Averaged(a) => scenario(&a, Mode::Averaged, 0),
        Command::FixedPoints(a) => scenario(&a, Mode::FixedPoints, 0),
        Command::Compare(a) => scenario(&a, Mode::Compare, 0),
        Command::Sweep(a) => scenario(&a.run, Mode::Sweep, a.workers),
        Command::Plot(a) => {
            let path = commands::plot_csv(&PlotRequest {
                input: a.input,
                x: a.x,
                y: a.y,
                scatter: a.scatter,
                title: a.title,
                out_dir: a.out,
            })?;
            println!("{}", Path::new(&path).display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(capsule_cli::exit_code(&e) as u8)
        }
    }
}
