//! Command-line front end: loads or assembles a scenario configuration, runs
//! the Monte-Carlo campaign, and writes the result files.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;

use subnetsim::campaign::{drop_topology, run_campaign_with, worker_threads_from_env};
use subnetsim::config::{PowerMode, SimConfig};
use subnetsim::output::{write_campaign_outputs, write_rate_cdf_svg, write_topology_csv};

/// Uplink Monte-Carlo simulator for coexisting in-X sub-networks with
/// distributed MIMO in the unlicensed 6 GHz band.
#[derive(Parser, Debug)]
#[command(name = "subnetsim", version, about, long_about = None)]
struct Cli {
    /// Scenario configuration file (flat `key = value` document).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Number of sub-networks (required unless --config is given).
    #[arg(long, value_name = "B")]
    subnetworks: Option<usize>,

    /// APs per sub-network; must divide the total antenna count.
    #[arg(long, value_name = "A")]
    aps_per_subnetwork: Option<usize>,

    /// Power policy: `fixed` or `apr`.
    #[arg(long, value_name = "MODE")]
    power_mode: Option<String>,

    /// Sensor transmit power in dBm for the fixed policy.
    #[arg(long, value_name = "DBM", allow_negative_numbers = true)]
    fixed_power_dbm: Option<f64>,

    /// Number of Monte-Carlo drops.
    #[arg(long, value_name = "N")]
    drops: Option<u64>,

    /// Campaign master seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Output directory for rates.csv, cdf.csv, and summary.txt.
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,

    /// Also write topology.csv with the node positions of drop 0.
    #[arg(long)]
    dump_topology: bool,

    /// Also write cdf.svg with a chart of the rate CDF.
    #[arg(long)]
    plot: bool,

    /// Suppress progress reporting on stderr.
    #[arg(long)]
    quiet: bool,
}

fn assemble_config(cli: &Cli) -> anyhow::Result<SimConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            SimConfig::parse(&text).with_context(|| format!("in config file {}", path.display()))?
        }
        None => {
            let (Some(b), Some(aps)) = (cli.subnetworks, cli.aps_per_subnetwork) else {
                bail!(
                    "missing scenario: pass --config FILE, or both --subnetworks and \
                     --aps-per-subnetwork"
                );
            };
            SimConfig::scenario(b, aps)
        }
    };

    if let Some(b) = cli.subnetworks {
        cfg.num_subnetworks = b;
    }
    if let Some(aps) = cli.aps_per_subnetwork {
        cfg.aps_per_subnetwork = aps;
    }
    match cli.power_mode.as_deref() {
        None => {}
        Some("apr") => {
            if !matches!(cfg.power_mode, PowerMode::Apr { .. }) {
                cfg.power_mode = PowerMode::Apr {
                    start_dbm: -15.0,
                    step_db: 1.0,
                    floor_dbm: -60.0,
                };
            }
        }
        Some("fixed") => {
            let from_config = match cfg.power_mode {
                PowerMode::Fixed { power_dbm } => Some(power_dbm),
                PowerMode::Apr { .. } => None,
            };
            let power_dbm = cli
                .fixed_power_dbm
                .or(from_config)
                .ok_or_else(|| anyhow::anyhow!("--power-mode fixed requires --fixed-power-dbm"))?;
            cfg.power_mode = PowerMode::Fixed { power_dbm };
        }
        Some(other) => bail!("--power-mode must be `fixed` or `apr`, got `{other}`"),
    }
    if cli.power_mode.is_none() {
        if let Some(power_dbm) = cli.fixed_power_dbm {
            cfg.power_mode = PowerMode::Fixed { power_dbm };
        }
    }
    if let Some(drops) = cli.drops {
        cfg.num_drops = drops;
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = assemble_config(cli)?;
    let threads = worker_threads_from_env();

    let print_progress = |done: u64, total: u64| {
        let stride = (total / 20).max(1);
        if done % stride == 0 || done == total {
            eprintln!("drops: {done}/{total}");
        }
    };
    let progress: Option<&(dyn Fn(u64, u64) + Sync)> = if cli.quiet {
        None
    } else {
        Some(&print_progress)
    };

    let result = run_campaign_with(&cfg, threads, progress)?;
    let manifest = write_campaign_outputs(&result, &cli.out)?;

    if cli.dump_topology {
        let topology = drop_topology(&cfg, 0, cfg.master_seed)?;
        write_topology_csv(&topology, &cli.out.join("topology.csv"))?;
    }
    if cli.plot {
        write_rate_cdf_svg(&result, &cli.out.join("cdf.svg"))?;
    }

    if !cli.quiet {
        for path in &manifest.files {
            eprintln!("wrote {}", path.display());
        }
        for &(level, rate) in &result.rate_quantiles {
            eprintln!("rate at CDF {level}: {:.4} Mbit/s", rate / 1e6);
        }
        eprintln!("zero-rate fraction: {}", result.zero_rate_fraction);
        eprintln!("deferral fraction: {}", result.deferral_fraction);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
