//! `sqg` — twin experiments, sweeps and verification batteries.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sqg_core::config::{parse_config, ConfigError, ExperimentConfig};
use sqg_core::runner::{self, RunError, RunStatus};

#[derive(Parser)]
#[command(name = "sqg", version, about = "SQG nudging twin experiments with delayed averaged observations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value experiment config; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// output root; each run writes into <out>/<name>/
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// seed for the random initial state
    #[arg(long)]
    seed: Option<u64>,
    /// snapshot cadence in steps, or `off`
    #[arg(long)]
    snapshots: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Reference and nudged model side by side
    Twin(Common),
    /// Reference model only
    Simulate(Common),
    /// Inequality suite and Gronwall battery
    Verify {
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        fields: usize,
    },
    /// Approximation-of-identity battery for both observers
    ObserveTest {
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        fields: usize,
    },
    /// Twin runs over the product of μ, δ and h lists
    Sweep {
        #[command(flatten)]
        common: Common,
        /// comma-separated μ values (default: the config value)
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
        /// comma-separated δ values
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        /// comma-separated h values
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
    },
    /// Dimensionless parameter-window report from spin-up statistics
    Window(Common),
}

enum Failure {
    Config(String),
    BlowUp(String),
    Other(anyhow::Error),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(c) => Failure::Config(c.to_string()),
            e if e.is_blow_up() => Failure::BlowUp(e.to_string()),
            e => Failure::Other(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path).map_err(|e| match e {
            ConfigError::Io { .. } => Failure::Other(anyhow::Error::new(e)),
            e => Failure::Config(e.to_string()),
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.init_seed = seed;
    }
    if let Some(s) = &common.snapshots {
        cfg.set("snapshot_every", s).map_err(Failure::Config)?;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    if cfg.gamma_warning() {
        eprintln!("warning: gamma = 2 sits on the boundary of the covered range");
    }
    Ok(cfg)
}

fn report_path(out: &Path, name: &str) -> String {
    out.join(name).join("report.txt").display().to_string()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Twin(common) => {
            let cfg = load(&common)?;
            let prepared = runner::prepare(&cfg)?;
            let o = runner::run_twin_experiment(&cfg, &prepared, Some(&common.out))?;
            match (o.status, o.fit) {
                (RunStatus::Diverged { time }, _) => {
                    return Err(Failure::BlowUp(format!("nudged solution diverged at t = {time}")));
                }
                (_, Some(f)) => println!(
                    "lambda = {:.4} (R² = {:.4}), {:.1} decades",
                    f.lambda, f.r_squared, o.decades
                ),
                (_, None) => println!("no decay fit; {:.1} decades", o.decades),
            }
            println!("{}", report_path(&common.out, &cfg.name));
        }
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            let prepared = runner::prepare(&cfg)?;
            let s = runner::run_simulation(&cfg, &prepared, Some(&common.out))?;
            println!("sup L2 = {:.6e}, sup Lp = {:.6e}", s.stats.sup_l2, s.stats.sup_lp);
            println!("{}", report_path(&common.out, &cfg.name));
        }
        Command::Verify { out, seed, fields } => {
            let v = runner::run_verify(seed, fields, Some(&out))?;
            println!("{} failures", v.failures());
            println!("{}", report_path(&out, "verify"));
            if v.failures() > 0 {
                return Err(Failure::Other(anyhow::anyhow!("verification failures")));
            }
        }
        Command::ObserveTest { out, seed, fields } => {
            let o = runner::run_observe_test(seed, fields, Some(&out))?;
            println!(
                "spectral ratio max {:.3e} / {:.3e}, volume slope {:.3}",
                o.spectral_ratio[0], o.spectral_ratio[1], o.volume_slope
            );
            println!("{}", report_path(&out, "observe-test"));
        }
        Command::Sweep {
            common,
            mu,
            delta,
            h,
        } => {
            let cfg = load(&common)?;
            let or = |v: Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v };
            let rows = runner::run_sweep(
                &cfg,
                &or(mu, cfg.mu),
                &or(delta, cfg.delta),
                &or(h, cfg.h),
                Some(&common.out),
            )?;
            for r in &rows {
                println!("{}: {} lambda={} R²={}", r.name, r.status, r.lambda, r.r_squared);
            }
            println!(
                "{}",
                common.out.join(&cfg.name).join("summary.csv").display()
            );
            if rows.iter().any(|r| r.status.starts_with("error")) {
                return Err(Failure::Other(anyhow::anyhow!("some sweep points failed")));
            }
        }
        Command::Window(common) => {
            let cfg = load(&common)?;
            let prepared = runner::prepare(&cfg)?;
            let w = runner::run_window(&cfg, &prepared, Some(&common.out)).context("window check")?;
            print!("{}", w.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::BlowUp(msg)) => {
            eprintln!("blow-up: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
