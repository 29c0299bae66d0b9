//! `ptdimer`: spectra, trajectories, sweeps, and figure-reproduction
//! recipes for the gain/loss dimer lattice.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial
//! sweep (some cells failed). `PTDIMER_OUT` overrides `--out`, which
//! overrides the config's `out_dir`.

mod commands;
mod config;
mod export;
mod recipes;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::{EXIT_NUMERICAL, EXIT_OK};
use config::{Command as RunCommand, ConfigError, RunConfig};
use export::{write_manifest, OutputSink};
use recipes::{run_figure_recipe, FigureName};

const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "ptdimer", version, about = "Dimer-lattice gain/loss dynamics")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Number of worker threads for sweep cells (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (overridden by the PTDIMER_OUT environment variable).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override for randomized computations.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Dense spectrum, phase label, PT thresholds, and winding number.
    Spectrum(ConfigArgs),
    /// Time evolution of a single-site initial state; heatmap export.
    Evolve(ConfigArgs),
    /// Heatmap panel over (nu'/nu, gamma/nu); cells run in parallel.
    Sweep(ConfigArgs),
    /// Scaled mean displacement of the absorbed distribution vs nu'/nu.
    Meandisp(ConfigArgs),
    /// Long-time numeric profiles against the closed-form asymptotics.
    AsymptoticsCompare(ConfigArgs),
    /// Bulk phase classification over a (nu'/nu, gamma/nu) grid.
    PhaseDiagram(ConfigArgs),
    /// Reproduce a named figure panel (fig2, fig3, fig4). No config needed.
    Figure {
        /// Which figure to reproduce: fig2, fig3, or fig4.
        name: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.is::<ConfigError>() {
                EXIT_CONFIG
            } else {
                EXIT_NUMERICAL as u8
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        CliCommand::Figure { name, common } => {
            let figure: FigureName = name
                .parse()
                .map_err(|msg: String| anyhow::Error::new(ConfigError(msg)))?;
            configure_jobs(common.jobs)?;
            let out = resolve_out_dir(&common, &name);
            let started = Instant::now();
            let mut sink = OutputSink::new(&out)?;
            let report = run_figure_recipe(figure, &mut sink)?;
            // figure recipes have a fixed parameter set; record it in the
            // manifest through a config carrying the panel's out_dir
            let mut cfg = RunConfig::default();
            cfg.out_dir = out.display().to_string();
            if figure == FigureName::Fig4 {
                cfg.theta = std::f64::consts::FRAC_PI_2;
            }
            write_manifest(&mut sink, &name, &cfg, started.elapsed().as_millis() as u64)?;
            export::print_line(&format!(
                "{name}: {} cells, {} failed, wrote {}",
                report.cells.len(),
                report.n_failed,
                out.display()
            ));
            Ok(if report.n_failed == report.cells.len() && !report.cells.is_empty() {
                EXIT_NUMERICAL as u8
            } else if report.n_failed > 0 {
                commands::EXIT_PARTIAL as u8
            } else {
                EXIT_OK as u8
            })
        }
        CliCommand::Spectrum(args) => run_config_command(RunCommand::Spectrum, args),
        CliCommand::Evolve(args) => run_config_command(RunCommand::Evolve, args),
        CliCommand::Sweep(args) => run_config_command(RunCommand::Sweep, args),
        CliCommand::Meandisp(args) => run_config_command(RunCommand::Meandisp, args),
        CliCommand::AsymptoticsCompare(args) => {
            run_config_command(RunCommand::AsymptoticsCompare, args)
        }
        CliCommand::PhaseDiagram(args) => run_config_command(RunCommand::PhaseDiagram, args),
    }
}

fn run_config_command(command: RunCommand, args: ConfigArgs) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        anyhow::Error::new(ConfigError(format!(
            "cannot read {}: {e}",
            args.config.display()
        )))
    })?;
    let mut cfg = config::parse_config(&text).map_err(anyhow::Error::new)?;
    if let Some(declared) = cfg.command {
        if declared != command {
            return Err(anyhow::Error::new(ConfigError(format!(
                "command: config declares \"{declared}\" but the CLI invoked \"{command}\""
            ))));
        }
    }
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    let out = resolve_out_dir(&args.common, &cfg.out_dir);
    cfg.out_dir = out.display().to_string();
    configure_jobs(args.common.jobs)?;

    let started = Instant::now();
    let mut sink = OutputSink::new(&out)?;
    let code = commands::dispatch(command, &cfg, &mut sink)?;
    write_manifest(
        &mut sink,
        &command.to_string(),
        &cfg,
        started.elapsed().as_millis() as u64,
    )?;
    Ok(code as u8)
}

/// Precedence: PTDIMER_OUT > --out > config/default.
fn resolve_out_dir(common: &CommonArgs, fallback: &str) -> PathBuf {
    if let Ok(env_out) = std::env::var("PTDIMER_OUT") {
        if !env_out.is_empty() {
            return PathBuf::from(env_out);
        }
    }
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(fallback))
}

fn configure_jobs(jobs: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(anyhow::Error::new(ConfigError(
                "--jobs must be at least 1".into(),
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }
    Ok(())
}
