//! `mrb`: spectral Galerkin solver for micropolar Rayleigh-Benard
//! convection with estimate audits and an attractor laboratory.

use clap::{Parser, Subcommand};
use mrb_cli::commands::{self, Ctx};
use mrb_cli::config;
use mrb_core::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mrb",
    about = "Micropolar Rayleigh-Benard spectral solver, estimate auditor and attractor lab",
    version
)]
struct Cli {
    /// Run configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker thread cap (0 = library default). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Basis cache directory (built on demand, reused bit-exactly).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Precompute and verify the three eigenbases.
    Basis,
    /// Integrate the configured run; write time-series CSV and checkpoint.
    Simulate {
        /// Override horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Override step size.
        #[arg(long)]
        dt: Option<f64>,
        /// Override scheme (euler | cnab2).
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Audit every explicit estimate along a run or an existing CSV.
    Audit {
        /// Audit an existing time-series CSV instead of simulating.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Sample the omega-limit cloud of the configured ensemble.
    Attractor {
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        members: Option<usize>,
    },
    /// Sweep the coupling K towards zero and report attractor distances.
    #[command(name = "sweep-k")]
    SweepK {
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        members: Option<usize>,
    },
    /// Estimate the Agmon constant on the configured domain.
    Calibrate {
        /// Number of random calibration samples.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_scheme(s: &str) -> Result<mrb_core::integrate::Scheme, Error> {
    match s {
        "euler" | "imex-euler" => Ok(mrb_core::integrate::Scheme::ImexEuler),
        "cnab2" => Ok(mrb_core::integrate::Scheme::Cnab2),
        other => Err(Error::Config(format!("unknown scheme `{other}`"))),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = config::load_config(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.ensemble.seed = seed;
    }

    match &cli.command {
        Cmd::Simulate { horizon, dt, scheme } => {
            if let Some(h) = horizon {
                cfg.horizon = *h;
            }
            if let Some(dt) = dt {
                cfg.dt = Some(*dt);
            }
            if let Some(s) = scheme {
                cfg.scheme = parse_scheme(s)?;
            }
        }
        Cmd::Audit { horizon, dt, .. } => {
            if let Some(h) = horizon {
                cfg.horizon = *h;
            }
            if let Some(dt) = dt {
                cfg.dt = Some(*dt);
            }
        }
        Cmd::Attractor { burn_in, window, members }
        | Cmd::SweepK { burn_in, window, members } => {
            if let Some(b) = burn_in {
                cfg.burn_in = *b;
            }
            if let Some(w) = window {
                cfg.window = *w;
            }
            if let Some(m) = members {
                cfg.ensemble.members = *m;
            }
        }
        Cmd::Calibrate { samples } => {
            if let Some(s) = samples {
                cfg.calibrate_samples = *s;
            }
        }
        Cmd::Basis => {}
    }

    let ctx = Ctx { cfg, out: cli.out.clone(), cache: cli.cache.clone() };
    match cli.command {
        Cmd::Basis => commands::cmd_basis(&ctx),
        Cmd::Simulate { .. } => commands::cmd_simulate(&ctx),
        Cmd::Audit { csv, .. } => commands::cmd_audit(&ctx, csv.as_deref()).map(|_| ()),
        Cmd::Attractor { .. } => commands::cmd_attractor(&ctx),
        Cmd::SweepK { .. } => commands::cmd_sweep_k(&ctx),
        Cmd::Calibrate { .. } => commands::cmd_calibrate(&ctx).map(|_| ()),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's help/version behavior, but map usage errors to
            // the config exit class
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
