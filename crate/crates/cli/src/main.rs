//! `ddilab`: command-line front end for the reaction-diffusion pattern toolkit.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{module}: {message}")]
    Compute { module: &'static str, message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Compute { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ddilab", version, about = "Steady states, patterns, spectra and simulations of a three-component reaction-diffusion model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $DDILAB_OUT/<subcommand>, else ./ddilab_out/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Seed for randomized initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Constant steady states and their residuals.
    Steady,
    /// Diffusion-driven instability certificate at the minus state.
    Ddi,
    /// Kinetic (diffusion-free) trajectory and equilibrium table.
    Kinetics,
    /// Stationary pattern plus verification report.
    Pattern(PatternArgs),
    /// Unstable eigenvalues of the linearization around a pattern.
    Spectrum(PatternArgs),
    /// Time-dependent simulation.
    Simulate,
    /// Runs one subcommand over a grid of overrides.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
struct PatternArgs {
    /// Shortcut for --set gamma=G.
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of modes (0 = constant minus state).
    #[arg(long)]
    modes: Option<usize>,
    /// Segment plan file for a discontinuous pattern (pattern only).
    #[arg(long, value_name = "PLAN")]
    discontinuous: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct SweepArgs {
    /// Subcommand run for each grid point: steady, ddi, kinetics, pattern, spectrum or simulate.
    task: String,
    /// Values for one key, comma separated; repeat for a Cartesian grid.
    #[arg(long = "vary", value_name = "KEY=V1,V2,...", required = true)]
    vary: Vec<String>,
    /// Worker threads (default: logical CPU count).
    #[arg(long)]
    jobs: Option<usize>,
}

fn output_dir(common: &Common, name: &str) -> PathBuf {
    if let Some(o) = &common.out {
        return o.clone();
    }
    let root = std::env::var_os("DDILAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("ddilab_out"));
    root.join(name)
}

/// Writes into a sibling staging directory and moves the files over only on success.
fn staged<F>(out: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&Path) -> Result<(), CliError>,
{
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", out.display()));
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(io)?;
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let stage = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if stage.exists() {
        std::fs::remove_dir_all(&stage).map_err(io)?;
    }
    std::fs::create_dir_all(&stage).map_err(io)?;
    let result = body(&stage).and_then(|()| {
        std::fs::create_dir_all(out).map_err(io)?;
        for entry in std::fs::read_dir(&stage).map_err(io)? {
            let entry = entry.map_err(io)?;
            let dest = out.join(entry.file_name());
            if dest.is_dir() {
                std::fs::remove_dir_all(&dest).map_err(io)?;
            }
            std::fs::rename(entry.path(), dest).map_err(io)?;
        }
        Ok(())
    });
    let _ = std::fs::remove_dir_all(&stage);
    result
}

fn pattern_overrides(args: &PatternArgs, prefix: &str, overrides: &mut Vec<String>) {
    if let Some(g) = args.gamma {
        overrides.push(format!("gamma={g}"));
    }
    if let Some(k) = args.modes {
        overrides.push(format!("{prefix}.modes={k}"));
    }
}

fn run_task(task: &Command, cfg: &Config, dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    match task {
        Command::Steady => commands::steady(cfg, dir),
        Command::Ddi => commands::ddi(cfg, dir),
        Command::Kinetics => commands::kinetics(cfg, dir),
        Command::Pattern(a) => commands::pattern(cfg, dir, a.discontinuous.as_deref()),
        Command::Spectrum(_) => commands::spectrum(cfg, dir),
        Command::Simulate => commands::simulate(cfg, dir, seed),
        Command::Sweep(_) => Err(CliError::Usage("sweep cannot be nested".into())),
    }
}

fn parse_task(name: &str) -> Result<Command, CliError> {
    let none = PatternArgs { gamma: None, modes: None, discontinuous: None };
    Ok(match name {
        "steady" => Command::Steady,
        "ddi" => Command::Ddi,
        "kinetics" => Command::Kinetics,
        "pattern" => Command::Pattern(none),
        "spectrum" => Command::Spectrum(none),
        "simulate" => Command::Simulate,
        other => return Err(CliError::Usage(format!("unknown sweep task `{other}`"))),
    })
}

/// Cartesian product of the `--vary` axes, first axis slowest.
fn sweep_grid(vary: &[String]) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut keys = Vec::new();
    let mut grid: Vec<Vec<String>> = vec![vec![]];
    for spec in vary {
        let (k, vals) =
            spec.split_once('=').ok_or_else(|| CliError::Usage(format!("--vary expects KEY=V1,V2,..., got `{spec}`")))?;
        let vals: Vec<&str> = vals.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if vals.is_empty() {
            return Err(CliError::Usage(format!("--vary `{k}` has no values")));
        }
        keys.push(k.trim().to_string());
        grid = grid.into_iter().flat_map(|row| vals.iter().map(move |v| [row.clone(), vec![v.to_string()]].concat())).collect();
    }
    Ok((keys, grid))
}

fn sweep(cfg: &Config, args: &SweepArgs, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let task = parse_task(&args.task)?;
    let (keys, grid) = sweep_grid(&args.vary)?;
    // Validate every grid point up front so usage errors abort before any work.
    let configs: Vec<Config> = grid
        .iter()
        .map(|vals| cfg.with_overrides(&keys.iter().cloned().zip(vals.iter().cloned()).collect::<Vec<_>>()))
        .collect::<Result<_, _>>()?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::Io(e.to_string()))?;
    staged(out, |dir| {
        let results: Vec<Result<(), CliError>> = pool.install(|| {
            configs
                .par_iter()
                .enumerate()
                .map(|(i, c)| {
                    let sub = dir.join(format!("run_{i:04}"));
                    std::fs::create_dir_all(&sub).map_err(|e| CliError::Io(e.to_string()))?;
                    std::fs::write(sub.join("config.txt"), c.echo()).map_err(|e| CliError::Io(e.to_string()))?;
                    run_task(&task, c, &sub, seed)
                })
                .collect()
        });
        let failed = results.iter().filter(|r| r.is_err()).count();
        let runs: Vec<_> = grid.iter().cloned().zip(results).collect();
        std::fs::write(dir.join("index.csv"), commands::sweep_index(&keys, &runs)).map_err(|e| CliError::Io(e.to_string()))?;
        if failed > 0 {
            eprintln!("sweep: {failed} of {} runs failed (see index.csv)", runs.len());
        }
        Ok(())
    })
}

fn dispatch(cli: Cli) -> Result<PathBuf, CliError> {
    let common = &cli.common;
    let text = match &common.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut overrides = common.overrides.clone();
    let name = match &cli.command {
        Command::Steady => "steady",
        Command::Ddi => "ddi",
        Command::Kinetics => "kinetics",
        Command::Pattern(a) => {
            pattern_overrides(a, "pattern", &mut overrides);
            "pattern"
        }
        Command::Spectrum(a) => {
            if a.discontinuous.is_some() {
                return Err(CliError::Usage("--discontinuous applies to `pattern` only".into()));
            }
            pattern_overrides(a, "spectrum", &mut overrides);
            "spectrum"
        }
        Command::Simulate => "simulate",
        Command::Sweep(_) => "sweep",
    };
    let cfg = Config::load(text.as_deref(), &overrides)?;
    let out = output_dir(common, name);
    match &cli.command {
        Command::Sweep(args) => sweep(&cfg, args, &out, common.seed)?,
        task => staged(&out, |dir| run_task(task, &cfg, dir, common.seed))?,
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
