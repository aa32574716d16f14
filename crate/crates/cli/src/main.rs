mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use ubqp_core::{SolveMode, SolverConfig};

/// Robust optimization of unconstrained binary quadratic programs.
#[derive(Debug, Parser)]
#[command(name = "ubqp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance.
    Solve {
        /// Instance file.
        #[arg(long = "in")]
        input: PathBuf,
        /// JSON solution report.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fix dominant variables and report per-variable slack.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also list variables whose slack is within this distance of firing.
        #[arg(long)]
        tolerance: Option<f64>,
        /// JSON report of fixes and slacks.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reduced instance file.
        #[arg(long)]
        reduced: Option<PathBuf>,
    },
    /// Write the two-level design for a set of generators.
    Design {
        #[command(flatten)]
        source: GeneratorSource,
        /// Design CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every design scenario and pool the optimal solutions.
    Analyze {
        #[command(flatten)]
        source: GeneratorSource,
        /// JSON robustness report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-scenario CSV (index, bits, value, status).
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Report how often this solution is optimal across scenarios.
        #[arg(long, value_enum)]
        reference: Option<Reference>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fit the response surface from a scenario CSV.
    Fit {
        #[command(flatten)]
        source: GeneratorSource,
        /// Scenario CSV written by `analyze --scenarios`.
        #[arg(long)]
        fit_from: PathBuf,
        /// JSON model.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the surface bound with the positive-sum bound on random scenarios.
    Bound {
        #[command(flatten)]
        source: GeneratorSource,
        /// Scenario CSV written by `analyze --scenarios`; analyzed inline when absent.
        #[arg(long)]
        fit_from: Option<PathBuf>,
        /// Number of random interior scenarios to validate on.
        #[arg(long, default_value_t = 64)]
        validate: usize,
        /// Comparison CSV, sorted by descending surface-bound gap.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Reference {
    /// Optimal solution of the midpoint instance.
    Average,
}

/// Generators from a JSON file, or built by perturbing an instance.
#[derive(Debug, Args)]
struct GeneratorSource {
    /// Generators JSON.
    #[arg(long, conflicts_with_all = ["input", "perturb"], required_unless_present = "input")]
    r#gen: Option<PathBuf>,
    /// Instance file whose nonzero coefficients are perturbed.
    #[arg(long = "in", requires = "perturb")]
    input: Option<PathBuf>,
    /// Relative perturbation, e.g. 0.05 for +/-5%.
    #[arg(long, requires = "input")]
    perturb: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Worker threads for the scenario loop; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value = "auto", value_parser = parse_mode)]
    mode: SolveMode,
    #[arg(long, default_value_t = SolverConfig::default().seed)]
    seed: u64,
    /// Wall-clock limit per solve, in seconds. Output is no longer
    /// reproducible once it binds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = SolverConfig::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = SolverConfig::default().enum_threshold)]
    enum_threshold: usize,
}

fn parse_mode(s: &str) -> Result<SolveMode, String> {
    s.parse().map_err(|e: ubqp_core::Error| e.to_string())
}

impl SolverArgs {
    fn config(&self) -> anyhow::Result<SolverConfig> {
        let time_budget = match self.budget {
            None => None,
            Some(secs) if secs > 0.0 && secs.is_finite() => Some(Duration::from_secs_f64(secs)),
            Some(secs) => anyhow::bail!(ubqp_core::Error::Input(format!(
                "budget must be positive, got {secs}"
            ))),
        };
        let config = SolverConfig {
            mode: self.mode,
            seed: self.seed,
            time_budget,
            restarts: self.restarts,
            enum_threshold: self.enum_threshold,
            ..SolverConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 for bad input, 3 for a broken internal invariant.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ubqp_core::Error>() {
        Some(ubqp_core::Error::State(_)) => 3,
        _ => 2,
    }
}
