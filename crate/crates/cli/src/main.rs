//! `qrwt`: command-line driver for walk simulations, limit generators and
//! Hudson–Parthasarathy certification runs.
//!
//! Exit codes: 0 when every check passes, 1 on a failed tolerance or
//! certification, 2 on a configuration error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Outcome, RunError, Stopwatch};
use config::Config;

#[derive(Parser, Debug)]
#[command(name = "qrwt", version, about = "Quantum random walks with particles in an arbitrary normal state")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for `<subcommand>.json` and `<subcommand>.csv` reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "QRWT_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// GNS triple and conditional-expectation validation.
    Gns,
    /// Upper bound on the number of noises and the effective count of the limit.
    NoiseCount,
    /// Limit generator and, for Hamiltonians, convergence of the modified generators.
    LimitGen,
    /// Hudson–Parthasarathy isometry and unitarity conditions.
    CheckHp,
    /// Walk and cocycle matrix elements over the τ list and t grid.
    Simulate,
    /// Walk-to-cocycle convergence with fitted log-log slopes.
    Converge,
    /// Lindblad generator of the Evans–Hudson limit.
    Lindblad,
    /// The three-level example with ρ = diag(λ₁, λ₂, 0).
    ExampleC3,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Gns => "gns",
            Command::NoiseCount => "noise-count",
            Command::LimitGen => "limit-gen",
            Command::CheckHp => "check-hp",
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::Lindblad => "lindblad",
            Command::ExampleC3 => "example-c3",
        }
    }

    fn run(self, cfg: &Config, clock: &mut Stopwatch) -> Result<Outcome, RunError> {
        match self {
            Command::Gns => commands::gns(cfg, clock),
            Command::NoiseCount => commands::noise_count(cfg, clock),
            Command::LimitGen => commands::limit_gen(cfg, clock),
            Command::CheckHp => commands::check_hp(cfg, clock),
            Command::Simulate => commands::simulate(cfg, clock),
            Command::Converge => commands::converge(cfg, clock),
            Command::Lindblad => commands::lindblad_cmd(cfg, clock),
            Command::ExampleC3 => commands::example_c3_cmd(cfg, clock),
        }
    }
}

fn write_reports(dir: &Path, name: &str, json: &str, csv: Option<&str>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{name}.json")), json)?;
    if let Some(csv) = csv {
        std::fs::write(dir.join(format!("{name}.csv")), csv)?;
    }
    Ok(())
}

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }

    let mut clock = Stopwatch::start();
    let cfg = match config::load(cli.config.as_deref()).and_then(|f| Config::resolve(f, cli.seed)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    clock.lap("configuration");

    let name = cli.command.name();
    let outcome = match cli.command.run(&cfg, &mut clock) {
        Ok(o) => o,
        Err(e @ RunError::Config { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(RunError::Core(e @ qrwt_core::Error::IdentityViolated { .. })) => {
            eprintln!("{name}: FAIL ({e})");
            return ExitCode::from(EXIT_FAILED);
        }
        Err(RunError::Core(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    let mut json = serde_json::to_string_pretty(&outcome.summary).expect("summary serialises");
    json.push('\n');
    print!("{json}");
    if let Some(dir) = &cli.out {
        if let Err(e) = write_reports(dir, name, &json, outcome.csv.as_deref()) {
            eprintln!("error: cannot write reports to {}: {e}", dir.display());
            return ExitCode::from(EXIT_FAILED);
        }
    }
    eprintln!("{name}: {}", if outcome.passed { "PASS" } else { "FAIL" });
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}
