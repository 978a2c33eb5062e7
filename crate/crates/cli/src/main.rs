use clap::{Parser, Subcommand};
use dilaton_cli::{commands, CliError, ExperimentConfig, Report};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Verification runs for dilaton-warped product metrics.
///
/// Thread count follows RAYON_NUM_THREADS; output does not depend on it.
#[derive(Parser, Debug)]
#[command(name = "dilaton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the top-level seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Warping exponents for dimensions (m, n) and their residuals.
    Constants {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form curvature of the product against the finite-difference oracle.
    VerifyCurvature(RunArgs),
    /// Total scalar curvature of the product against the F-functional.
    VerifyIdentity(RunArgs),
    /// First variation of the product action along seeded directions.
    VerifyVariation(RunArgs),
    /// Coupled or decoupled flow with monotonicity and constraint diagnostics.
    Flow(RunArgs),
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    let csv = report.to_csv();
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn run(cli: Cli) -> Result<(Report, Option<PathBuf>), CliError> {
    let with_config = |args: RunArgs, f: fn(&ExperimentConfig) -> Result<Report, CliError>| {
        let cfg = ExperimentConfig::load(&args.config)?.with_seed(args.seed);
        Ok((f(&cfg)?, args.out))
    };
    match cli.command {
        Command::Constants { m, n, out } => Ok((commands::constants(m, n)?, out)),
        Command::VerifyCurvature(a) => with_config(a, commands::verify_curvature),
        Command::VerifyIdentity(a) => with_config(a, commands::verify_identity),
        Command::VerifyVariation(a) => with_config(a, commands::verify_variation),
        Command::Flow(a) => with_config(a, commands::flow),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = run(cli).and_then(|(report, out)| {
        emit(&report, out.as_deref())?;
        Ok(report)
    });
    match outcome {
        Ok(report) if report.passed() => {
            eprintln!("PASS {}", report.command);
            ExitCode::SUCCESS
        }
        Ok(report) => {
            for f in &report.failures {
                eprintln!("FAIL {}: {f}", report.command);
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
