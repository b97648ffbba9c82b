use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jumpvar_cli::config::RunConfig;
use jumpvar_cli::signature::Kind;
use jumpvar_cli::{estimate, jumpscan, signature, simulate, table2, Failure};

#[derive(Debug, Parser)]
#[command(
    name = "jumpvar",
    version,
    about = "Pre-averaged variation measures and jump diagnostics for tick data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Tick file, or a directory of tick files.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Pre-averaging horizon; a comma-separated list sets the grid for table2 and signature.
    #[arg(long, global = true, value_delimiter = ',')]
    theta: Vec<f64>,
    /// Number of simulated paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sampling frequencies such as `tick,5m,15m`; jumpscan uses the first.
    #[arg(long, global = true, value_delimiter = ',')]
    frequency: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-day RV, BV, RV*, BV*, BV*_tau and JV at each frequency.
    Estimate,
    /// Simulated paths with metadata sidecars and tick files.
    Simulate,
    /// Normalized means of the pre-averaged estimators over simulated paths.
    Table2,
    /// Theta signature or JV-versus-frequency signature.
    Signature {
        #[arg(long, default_value = "theta")]
        kind: Kind,
    },
    /// Lee–Mykland scans on the coarse grid and on pre-averaged ticks, with maxgap.
    Jumpscan,
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    match cli.theta.as_slice() {
        [] => {}
        [t] => {
            cfg.preavg.theta = *t;
            cfg.table2.thetas = vec![*t];
            cfg.signature.thetas = vec![*t];
        }
        ts => {
            cfg.table2.thetas = ts.to_vec();
            cfg.signature.thetas = ts.to_vec();
        }
    }
    if let Some(p) = cli.paths {
        cfg.table2.paths = p;
        cfg.simulate.paths = p;
        cfg.signature.paths = p;
    }
    if !cli.frequency.is_empty() {
        cfg.estimate.frequencies = cli.frequency.clone();
        cfg.jumpscan.frequency = cli.frequency[0].clone();
    }
    Ok(cfg)
}

fn require_input(cli: &Cli) -> Result<&PathBuf, Failure> {
    cli.input
        .as_ref()
        .ok_or_else(|| Failure::input("--input is required"))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Estimate => {
            let out = estimate::run(&cfg, require_input(cli)?, &cli.out)?;
            eprintln!("estimated {} day-frequency rows", out.rows.len());
        }
        Command::Simulate => {
            let files = simulate::run(&cfg, &cli.out, cfg.simulate.paths)?;
            eprintln!("wrote {} files", files.len());
        }
        Command::Table2 => {
            let cells = table2::run(&cfg, &cli.out)?;
            eprintln!("computed {} cells", cells.len());
        }
        Command::Signature { kind } => {
            let csv = signature::run(
                &cfg,
                *kind,
                cli.input.as_deref(),
                &cli.out,
                cfg.signature.paths,
            )?;
            eprintln!("wrote {}", csv.display());
        }
        Command::Jumpscan => {
            let out = jumpscan::run(&cfg, require_input(cli)?, &cli.out)?;
            eprintln!(
                "{} instruments, {} events",
                out.summary.len(),
                out.events.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jumpvar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
