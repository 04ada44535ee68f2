//! kaclab: parameter sweeps, certificate runs and trajectory traces for the
//! Kac-model entropy-production laboratory, with deterministic CSV output.

mod commands;
mod config;
mod csvout;
mod svg;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "kaclab",
    version,
    about = "Entropy-production laboratory for the Kac model",
    long_about = "Computes test-state functionals on the energy sphere: density checks,\n\
                  local-limit comparisons with certificates, normalization tables,\n\
                  production ratios, scheduled sweeps, collision-walk traces and\n\
                  inequality suites. Output is CSV with '#' header comments echoing\n\
                  the effective configuration; identical configurations and seeds\n\
                  reproduce outputs byte for byte (wall times print as zero unless\n\
                  --timing is given)."
)]
struct Cli {
    /// Flat key=value configuration file (precedence: flags > environment
    /// KACLAB_* > file > defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output CSV path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print measured wall times in the runtime column.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the one-particle density invariant suite.
    DensityCheck {
        #[arg(long)]
        delta: f64,
    },
    /// Compare the convolution power against the Gaussian local limit.
    Clt {
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Use the standard Gaussian (exact chi-square oracle) instead of
        /// the mixture.
        #[arg(long)]
        oracle_gaussian: bool,
    },
    /// Tabulate the normalization function along the squared radius.
    Zn {
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        oracle_gaussian: bool,
    },
    /// One scheduled point of the production-ratio experiment.
    Gamma {
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        beta: Option<f64>,
        /// Also cross-check the numerator by importance sampling with this
        /// many samples (N <= 64).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        grid_theta: Option<usize>,
        #[arg(long)]
        grid_phi: Option<usize>,
        #[arg(long)]
        grid_r: Option<usize>,
    },
    /// Scheduled sweep over a list of N with the decay-law fit.
    Sweep {
        /// Comma-separated list, e.g. 32,64,128,256,512,1024.
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        beta: Option<f64>,
        /// Emit the reference-decay fixture instead of computing.
        #[arg(long)]
        synthetic: bool,
        #[arg(long)]
        grid_theta: Option<usize>,
        #[arg(long)]
        grid_phi: Option<usize>,
        #[arg(long)]
        grid_r: Option<usize>,
    },
    /// Simulate the collision walk and trace observables.
    Walk {
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        steps: Option<u64>,
        /// Start from the rescaled product state with this delta; uniform
        /// start when absent.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Evaluate the inequality suites and region certificates.
    Bounds {
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Harness fixture: append a deliberately violated row.
        #[arg(long, hide = true)]
        inject_violation: bool,
    },
}

fn run(cli: Cli) -> kac_core::Result<bool> {
    let mut flags: Vec<(&str, Option<String>)> = vec![
        ("seed", cli.seed.map(|s| s.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("timing", cli.timing.then(|| "true".to_string())),
    ];
    let command_name;
    // Subcommand-specific switch: gamma's Monte Carlo cross-check, bounds'
    // injected-violation fixture.
    let aux;
    match &cli.command {
        Command::DensityCheck { delta } => {
            command_name = "density-check";
            aux = false;
            flags.push(("delta", Some(delta.to_string())));
        }
        Command::Clt {
            n,
            beta,
            delta,
            oracle_gaussian,
        }
        | Command::Zn {
            n,
            beta,
            delta,
            oracle_gaussian,
        } => {
            command_name = if matches!(cli.command, Command::Clt { .. }) {
                "clt"
            } else {
                "zn"
            };
            aux = false;
            flags.push(("n", Some(n.clone())));
            flags.push(("beta", beta.map(|b| b.to_string())));
            flags.push(("delta", delta.map(|d| d.to_string())));
            flags.push((
                "oracle_gaussian",
                oracle_gaussian.then(|| "true".to_string()),
            ));
        }
        Command::Gamma {
            n,
            beta,
            samples,
            grid_theta,
            grid_phi,
            grid_r,
        } => {
            command_name = "gamma";
            aux = samples.is_some();
            flags.push(("n", Some(n.clone())));
            flags.push(("beta", beta.map(|b| b.to_string())));
            flags.push(("samples", samples.map(|s| s.to_string())));
            flags.push(("grid_theta", grid_theta.map(|g| g.to_string())));
            flags.push(("grid_phi", grid_phi.map(|g| g.to_string())));
            flags.push(("grid_r", grid_r.map(|g| g.to_string())));
        }
        Command::Sweep {
            n,
            beta,
            synthetic,
            grid_theta,
            grid_phi,
            grid_r,
        } => {
            command_name = "sweep";
            aux = false;
            flags.push(("n", Some(n.clone())));
            flags.push(("beta", beta.map(|b| b.to_string())));
            flags.push(("synthetic", synthetic.then(|| "true".to_string())));
            flags.push(("grid_theta", grid_theta.map(|g| g.to_string())));
            flags.push(("grid_phi", grid_phi.map(|g| g.to_string())));
            flags.push(("grid_r", grid_r.map(|g| g.to_string())));
        }
        Command::Walk { n, steps, delta } => {
            command_name = "walk";
            aux = false;
            flags.push(("n", Some(n.clone())));
            flags.push(("steps", steps.map(|s| s.to_string())));
            flags.push(("delta", delta.map(|d| d.to_string())));
        }
        Command::Bounds {
            n,
            delta,
            beta,
            inject_violation,
        } => {
            command_name = "bounds";
            aux = *inject_violation;
            flags.push(("n", Some(n.clone())));
            flags.push(("delta", delta.map(|d| d.to_string())));
            flags.push(("beta", beta.map(|b| b.to_string())));
        }
    }

    let config = RunConfig::resolve(cli.config.as_deref(), &flags)?;
    if let Some(threads) = config.threads()? {
        // Thread budget affects runtime only; every reduction is ordered.
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| kac_core::Error::Config(format!("thread pool: {e}")))?;
    }

    match command_name {
        "density-check" => commands::density_check(&config),
        "clt" => commands::clt(&config),
        "zn" => commands::zn(&config),
        "gamma" => commands::gamma(&config, aux),
        "sweep" => commands::sweep(&config),
        "walk" => commands::walk_cmd(&config),
        "bounds" => commands::bounds(&config, aux),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
