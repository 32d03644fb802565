use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Classical, quantum and experimental analysis of the two-player Bayesian game.
#[derive(Debug, Parser)]
#[command(name = "bayesgame", version, about)]
struct Cli {
    /// Emit a JSON document instead of the human summary.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Deterministic payoffs, classical region, Nash equilibria and the classical bound.
    Classical(ClassicalArgs),
    /// Payoffs, CHSH value and equilibrium verdict of a quantum strategy.
    Quantum(QuantumArgs),
    /// Best-response check of a quantum strategy.
    VerifyEq(VerifyArgs),
    /// Alternating best-response optimization of a weighted payoff.
    Seesaw(SeesawArgs),
    /// CSV bundle for the payoff-region plot.
    Region(RegionArgs),
    /// Moment-matrix upper bound on a weighted payoff.
    NpaBound(NpaArgs),
    /// Monte Carlo run of the photonic experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GameArg {
    /// Game JSON file; the standard game when absent.
    #[arg(long, value_name = "FILE")]
    game: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassicalArgs {
    #[command(flatten)]
    game: GameArg,
    /// Also write the region vertices (`F_A,F_B`) to this file.
    #[arg(long, value_name = "FILE")]
    region_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[command(flatten)]
    game: GameArg,
    /// Strategy JSON file; the fair-equilibrium strategy when absent.
    #[arg(long, value_name = "FILE")]
    strategy: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long, value_name = "FILE", conflicts_with_all = ["bell", "all_bell"])]
    strategy: Option<PathBuf>,
    /// Use Bell state k (0 φ⁺, 1 φ⁻, 2 ψ⁺, 3 ψ⁻) with correspondingly rotated bases.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..4), conflicts_with = "all_bell")]
    bell: Option<u8>,
    /// Check all four Bell-state strategies.
    #[arg(long)]
    all_bell: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
pub struct SeesawArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    wa: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    wb: f64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Also optimize the shared state between measurement updates.
    #[arg(long)]
    optimize_state: bool,
    /// Initial state JSON (4×4 [re,im]); |φ⁺⟩ when absent.
    #[arg(long, value_name = "FILE")]
    state: Option<PathBuf>,
    /// Write the best strategy to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Include the objective trace in the JSON output.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    game: GameArg,
    /// Number of weight directions over [0, π/2].
    #[arg(long, default_value_t = 33, value_parser = clap::value_parser!(u64).range(1..))]
    grid: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "2")]
    level: String,
    /// Output directory for the CSV files.
    #[arg(long, default_value = "region")]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NpaArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    wa: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    wb: f64,
    #[arg(long, default_value = "2")]
    level: String,
    /// Bound the CHSH expression instead of the payoff.
    #[arg(long)]
    chsh: bool,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long, conflicts_with_all = ["fidelity", "chsh"])]
    visibility: Option<f64>,
    /// Fidelity of the source state with |φ⁺⟩.
    #[arg(long, conflicts_with = "chsh")]
    fidelity: Option<f64>,
    /// Pick the visibility that gives this CHSH value.
    #[arg(long)]
    chsh: Option<f64>,
    /// werner, colored, or `custom FILE` with a 4×4 density operator.
    #[arg(long, num_args = 1..=2, value_names = ["KIND", "FILE"], default_values_t = ["werner".to_string()])]
    noise: Vec<String>,
    /// Fraction of recorded events that are uniformly random accidentals.
    #[arg(long, default_value_t = 0.0)]
    accidentals: f64,
    /// Report raw estimates without subtracting accidentals.
    #[arg(long)]
    no_correction: bool,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the coincidence tally (`xA,xB,yA,yB,count`) to this file.
    #[arg(long, value_name = "FILE")]
    tally: Option<PathBuf>,
}

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_SOLVER: u8 = 4;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classical(a) => commands::classical(a),
        Command::Quantum(a) => commands::quantum(a),
        Command::VerifyEq(a) => commands::verify_eq(a),
        Command::Seesaw(a) => commands::seesaw(a),
        Command::Region(a) => commands::region(a),
        Command::NpaBound(a) => commands::npa_bound(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match result {
        Ok(out) => {
            let body = if cli.json {
                serde_json::to_string_pretty(&out.json).expect("JSON value serializes") + "\n"
            } else {
                out.text
            };
            match std::io::stdout().lock().write_all(body.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<commands::UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match e.downcast_ref::<bayesgame::Error>() {
        Some(err) if !err.is_validation() => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}
