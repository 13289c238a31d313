use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use qcascade_cli::config::ExperimentConfig;
use qcascade_cli::drivers;

/// Cascaded-emitter simulator: a pulsed two-level emitter whose emission is
/// fed back as the quantized input of an identical system. Emits CSV/JSON
/// artifacts plus a manifest under the output directory.
#[derive(Parser)]
#[command(name = "qcascade", version, arg_required_else_help = true)]
struct Cli {
    /// TOML configuration file; omitted keys fall back to the fitted
    /// device defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Pulse area in radians (overrides the config).
    #[arg(long, global = true)]
    area: Option<f64>,

    /// Disable the detector-jitter convolution of exported artifacts.
    #[arg(long, global = true)]
    no_jitter: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temporal flux profiles of the input and output fields
    Flux,
    /// Pulse-area scan: integrated fluxes and averaged g²(0) per area
    Scan,
    /// Two-time correlation maps and the output-diagonal decay fit
    G2map,
    /// Time-gated averaged g²(0) for a list of gate start times
    Gated,
    /// Sweep the return-path transmission η'_loss and report its effect
    ProbeLoss {
        /// η'_loss values in (0, 1], comma separated
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1.0")]
        loss_values: Vec<f64>,
    },
}

/// Worker-pool size; defaults to the available parallelism.
const WORKERS_ENV: &str = "QCASCADE_WORKERS";

fn init_workers() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        let n: usize = raw
            .parse()
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {raw:?}"))?;
        if n == 0 {
            anyhow::bail!("{WORKERS_ENV} must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")?;
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    init_workers()?;

    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(area) = cli.area {
        cfg.pulse.area = area;
    }
    if cli.no_jitter {
        cfg.apply_jitter = false;
    }
    cfg.validate()?;

    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let manifest = match cli.command {
        Command::Flux => drivers::cmd_flux(&cfg, &dir)?,
        Command::Scan => drivers::cmd_scan(&cfg, &dir)?,
        Command::G2map => drivers::cmd_g2map(&cfg, &dir)?,
        Command::Gated => drivers::cmd_gated(&cfg, &dir)?,
        Command::ProbeLoss { loss_values } => drivers::cmd_probe_loss(&cfg, &dir, &loss_values)?,
    };

    for name in &manifest.files {
        println!("wrote {}", dir.join(name).display());
    }
    println!("wrote {}", dir.join("manifest.json").display());
    Ok(())
}
