//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 fixed-point divergence,
//! 4 invariant violation, 1 anything else.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use rbdsde::config::Config;
use rbdsde::error::Result;
use rbdsde::experiment::{
    self, compare_oracle, convergence_study, run_to_dir, study_errors_csv, study_timings_csv,
};
use rbdsde::path_engine::PathEnsemble;

#[derive(Parser)]
#[command(name = "rbdsde", about = "Reflected backward doubly stochastic solver with delayed generators")]
struct Cli {
    /// Path to the TOML configuration.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,

    /// Override the ensemble seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap the rayon thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write artifacts.
    Run {
        /// Output directory for conditions.json, summary.json, per_time.csv,
        /// audit.json.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Evaluate the feasibility conditions and print the report.
    CheckConditions,
    /// Sweep step and path counts against the configuration's reference
    /// solution.
    ConvergenceStudy {
        #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
        steps: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "5000,20000")]
        paths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Solve and report the error against the matching reference solution.
    CompareOracle,
    /// Sample-audit the declared generator constants on random segments.
    Audit {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Dump the simulated increments as CSV to stdout.
    DumpPaths,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiment::exit_code(&e) as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut config = Config::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.ensemble.seed = seed;
    }
    match &cli.command {
        Command::Run { out_dir } => {
            let output = run_to_dir(&config, out_dir)?;
            println!(
                "Y(0) = {:.6} +/- {:.6}, K(T) = {:.6}, {} iterations, converged = {}",
                output.summary.y0_mean,
                output.summary.y0_std_error,
                output.summary.k_terminal_mean,
                output.summary.iterations,
                output.summary.converged,
            );
            for warning in &output.summary.warnings {
                eprintln!("warning: {warning}");
            }
            println!("artifacts in {}", out_dir.display());
            Ok(())
        }
        Command::CheckConditions => {
            println!("{}", experiment::conditions_json(&config)?);
            Ok(())
        }
        Command::ConvergenceStudy {
            steps,
            paths,
            seeds,
            out_dir,
        } => {
            let rows = convergence_study(&config, steps, paths, seeds)?;
            std::fs::create_dir_all(out_dir)?;
            std::fs::write(out_dir.join("errors.csv"), study_errors_csv(&rows))?;
            std::fs::write(out_dir.join("timings.csv"), study_timings_csv(&rows))?;
            println!("{} rows in {}", rows.len(), out_dir.display());
            Ok(())
        }
        Command::CompareOracle => {
            let comparison = compare_oracle(&config)?;
            println!(
                "{:?}: {} = {:.6e}",
                comparison.kind, comparison.metric, comparison.error
            );
            Ok(())
        }
        Command::Audit { samples } => {
            let measure = config.delay()?;
            let generator = config.generator_spec()?;
            let audit = generator.lipschitz_audit(&measure, *samples, config.ensemble.seed)?;
            println!(
                "samples = {}, max ratio f = {:.6e}, max ratio g = {:.6e}, pass = {}",
                audit.samples, audit.max_ratio_f, audit.max_ratio_g, audit.pass
            );
            if !audit.pass {
                return Err(rbdsde::Error::InvariantViolation(
                    "declared Lipschitz constants fail the sampled audit".into(),
                ));
            }
            Ok(())
        }
        Command::DumpPaths => {
            let ensemble = PathEnsemble::simulate(
                config.ensemble.paths,
                config.ensemble.steps,
                config.ensemble.horizon,
                config.ensemble.seed,
            )?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            ensemble.dump(&mut lock)
        }
    }
}
