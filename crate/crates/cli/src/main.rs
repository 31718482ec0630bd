//! `bridge-lab`: reproducible runs of the bridge-problem laboratory.
//!
//! Exit codes: 0 success, 2 domain error, 3 numerical failure, 4 I/O failure.
//! Failures print a one-line JSON error object on standard error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use bridge_core::BridgeError;
use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Direction;
use config::{ConfigRecord, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "bridge-lab", version, about = "Numerical laboratory for the Sobolev–Escobar bridge problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve and classify one bridge profile.
    Profile(RunConfig),
    /// Tabulate Φ², the multipliers and the model ball along both branches.
    Curve(RunConfig),
    /// Lowest discrete eigenvalues of every sector.
    Spectrum {
        #[command(flatten)]
        config: RunConfig,
        /// Eigenvalues per sector.
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Sector bottoms and the spectral gap.
    Gap(RunConfig),
    /// Residuals of the kernel identification.
    Kernel(RunConfig),
    /// Perturbation sweep of deficit against squared distance.
    Stability {
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, default_value_t = 2)]
        sector: usize,
        #[arg(long, value_enum, default_value_t = Direction::Argmin)]
        direction: Direction,
    },
    /// Monte Carlo cross-check of the constraint integrals.
    Oracle {
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Number of seeded (branch, t) pairs; ignored when --t is given.
        #[arg(long, default_value_t = 6)]
        pairs: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (name, config, args, out) = match &cli.command {
        Command::Profile(c) => ("profile", c, json!({}), commands::profile(c)),
        Command::Curve(c) => ("curve", c, json!({}), commands::curve(c)),
        Command::Spectrum { config, count } => ("spectrum", config, json!({ "count": count }), commands::spectrum(config, *count)),
        Command::Gap(c) => ("gap", c, json!({}), commands::gap(c)),
        Command::Kernel(c) => ("kernel", c, json!({}), commands::kernel(c)),
        Command::Stability { config, sector, direction } => (
            "stability",
            config,
            json!({ "sector": sector, "direction": direction }),
            commands::stability(config, *sector, *direction),
        ),
        Command::Oracle { config, samples, pairs } => (
            "oracle",
            config,
            json!({ "samples": samples, "pairs": pairs }),
            commands::oracle(config, *samples, *pairs),
        ),
    };
    let record = ConfigRecord::new(config, args)?;
    let text = output::render(name, &record, &out?)?;
    output::emit(config.output.as_deref(), &text)
}

fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    if let Some(e) = err.downcast_ref::<BridgeError>() {
        return (e.kind(), if e.is_domain() { 2 } else { 3 });
    }
    if err.chain().any(|c| c.is::<std::io::Error>()) {
        return ("IoError", 4);
    }
    ("InternalError", 3)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = classify(&err);
            eprintln!("{}", json!({ "error": kind, "message": format!("{err:#}"), "exit_code": code }));
            ExitCode::from(code)
        }
    }
}
