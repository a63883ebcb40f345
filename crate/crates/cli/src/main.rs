use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use brakke_core::diagnostics::brakke_residual;
use brakke_core::driver::{run, validate_params, Mode, RunError, CURVE_DIM};
use brakke_core::io::config::{parse_config, serialize_config, FlowOverrides};
use brakke_core::io::render::{render_trajectory, Style};
use brakke_core::io::scenario::builtin_scenarios;
use brakke_core::io::snapshot::{append_summary, read_trajectory, write_trajectory, SummaryRow, SUMMARY_FILE};
use brakke_core::io::IoError;
use clap::{Parser, Subcommand, ValueEnum};

/// Discrete curvature flow of multiphase curve networks with fixed boundary.
#[derive(Parser)]
#[command(name = "flow", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Desk,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config and write its trajectory.
    Run {
        config: PathBuf,
        /// Output directory; defaults to $FLOW_OUTPUT_ROOT/<run id> or ./runs/<run id>.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Brakke residual of one test function between two stored times.
    Diag {
        trajectory: PathBuf,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
    },
    /// Render every stored snapshot of a trajectory to SVG.
    Render {
        trajectory: PathBuf,
        /// Frame directory; defaults to <trajectory>/frames.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    Scenarios,
}

const OUTPUT_ROOT_ENV: &str = "FLOW_OUTPUT_ROOT";

/// Failure classes mapped onto the stable exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Numerical(e) | Failure::Io(e) => e,
        }
    }
}

fn classify_io(e: IoError) -> Failure {
    match e {
        IoError::Io { .. } | IoError::Format { .. } => Failure::Io(e.into()),
        _ => Failure::Config(e.into()),
    }
}

fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn cmd_run(config: &Path, out: Option<PathBuf>, mode: Option<ModeArg>, seed: Option<u64>) -> Result<(), Failure> {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(Failure::Io)?;
    let cli = FlowOverrides {
        mode: mode.map(|m| match m {
            ModeArg::Paper => Mode::Paper,
            ModeArg::Desk => Mode::Desk,
        }),
        seed,
        ..Default::default()
    };
    let rc = parse_config(&text, &cli).map_err(classify_io)?;
    let (net, a4) = rc.scenario.network().map_err(classify_io)?;
    if !a4.is_empty() {
        log::warn!("anchors {a4:?} do not separate two phases on the boundary");
    }
    let report = validate_params(&rc.flow, CURVE_DIM).map_err(|e| Failure::Config(e.into()))?;
    for c in &report.conditions {
        log::info!("{}: {}", c.name, c.pass.map_or("unchecked", |p| if p { "pass" } else { "fail" }));
    }
    let run_id = format!("{}-s{}", rc.scenario.name, rc.flow.seed);
    let dir = out.unwrap_or_else(|| output_root().join(&run_id));
    let traj = match run(&rc.flow, &net) {
        Ok(t) => t,
        Err(RunError::Config(e)) => return Err(Failure::Config(e.into())),
        Err(RunError::InvalidInitial(m)) => return Err(Failure::Config(anyhow::anyhow!("initial network: {m}"))),
        Err(RunError::Step { epoch, error, partial }) => {
            write_trajectory(&dir, &run_id, &rc.scenario.name, &partial).map_err(classify_io)?;
            return Err(Failure::Numerical(anyhow::anyhow!(
                "epoch {epoch}: {error} (partial trajectory in {})",
                dir.display()
            )));
        }
    };
    write_trajectory(&dir, &run_id, &rc.scenario.name, &traj).map_err(classify_io)?;
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, serialize_config(&rc).map_err(classify_io)?)
        .with_context(|| format!("writing {}", cfg_path.display()))
        .map_err(Failure::Io)?;
    let summary = dir.parent().unwrap_or(Path::new(".")).join(SUMMARY_FILE);
    let row = SummaryRow::new(&run_id, &rc.scenario.name, &traj);
    append_summary(&summary, &row).map_err(classify_io)?;
    println!(
        "{run_id}: {} epochs, length {:.6} -> {:.6}, stationary at {}, written to {}",
        row.epochs,
        row.initial_length,
        row.final_length,
        row.stationary_at.map_or("-".into(), |t| format!("{t:.4}")),
        dir.display()
    );
    Ok(())
}

fn cmd_diag(dir: &Path, phi: &str, t1: f64, t2: f64) -> Result<(), Failure> {
    let (_, traj) = read_trajectory(dir).map_err(classify_io)?;
    // every diagnostics error stems from the requested function or times
    let r = brakke_residual(&traj, phi, t1, t2).map_err(|e| Failure::Config(e.into()))?;
    println!("phi={phi} t1={t1} t2={t2} residual={:e} slack={:e} magnitude={:e} holds={}", r.residual, r.slack, r.magnitude, r.residual <= r.slack);
    Ok(())
}

fn cmd_render(dir: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let (_, traj) = read_trajectory(dir).map_err(classify_io)?;
    let frames = out.unwrap_or_else(|| dir.join("frames"));
    let files = render_trajectory(&traj, &frames, &Style::default()).map_err(classify_io)?;
    println!("{} frames written to {}", files.len(), frames.display());
    Ok(())
}

fn cmd_scenarios() -> Result<(), Failure> {
    for s in builtin_scenarios() {
        let (net, _) = s.network().map_err(classify_io)?;
        println!("{:<10} phases={} anchors={} edges={} length={:.6}", s.name, s.phases, net.anchors().len(), net.edges.len(), net.length());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run { config, out, mode, seed } => cmd_run(&config, out, mode, seed),
        Command::Diag { trajectory, phi, t1, t2 } => cmd_diag(&trajectory, &phi, t1, t2),
        Command::Render { trajectory, out } => cmd_render(&trajectory, out),
        Command::Scenarios => cmd_scenarios(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
