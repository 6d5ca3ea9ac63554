use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fblab::{run_report, run_solve, run_validate, run_verify, HarnessError, Scenario, Status};

/// Worker threads for the data-parallel kernels; unset uses every core.
const WORKERS_VAR: &str = "FBLAB_WORKERS";

#[derive(Parser)]
#[command(
    name = "fblab",
    version,
    about = "Solve and verify free-boundary scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a configuration and check that it describes an admissible problem.
    Validate {
        /// Config file or built-in scenario name.
        config: String,
    },
    /// Solve for (u, χ) and write fields, tables and plots.
    Solve {
        config: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the verification suite.
    Verify {
        config: String,
        /// Restrict to one module: a_operator, flow_geometry, pde_solver, barriers, free_boundary.
        #[arg(long)]
        only: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a stored verification summary.
    Report { dir: PathBuf },
}

fn configure_workers() -> Result<(), HarnessError> {
    let Ok(raw) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        HarnessError::Config(fblab::ConfigError::general(format!(
            "{WORKERS_VAR} must be a positive integer, got `{raw}`"
        )))
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| {
            HarnessError::Config(fblab::ConfigError::general(format!("{WORKERS_VAR}: {e}")))
        })?;
    #[cfg(not(feature = "parallel"))]
    if n != 1 {
        eprintln!("note: built without the parallel feature, ignoring {WORKERS_VAR}={n}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    configure_workers()?;
    match cli.command {
        Command::Validate { config } => {
            let sc = Scenario::load(&config)?;
            for line in run_validate(&sc)? {
                println!("{line}");
            }
        }
        Command::Solve { config, out } => {
            let sc = Scenario::load(&config)?;
            let res = run_solve(&sc, Some(&out))?;
            match res.solved.stats {
                Some(s) => println!(
                    "{}: {} outer, {} inner, {} linear iterations, residual {:e}, {:.2} s",
                    sc.name, s.outer, s.inner, s.linear, s.residual, s.seconds
                ),
                None => println!("{}: fixture fields", sc.name),
            }
            println!("wrote {}", out.display());
        }
        Command::Verify { config, only, out } => {
            let sc = Scenario::load(&config)?;
            let summary = run_verify(&sc, only.as_deref(), out.as_deref())?;
            println!("{summary}");
            let failed = summary.failures().count();
            if failed > 0 {
                return Err(HarnessError::Verification { failed });
            }
        }
        Command::Report { dir } => {
            let rows = run_report(&dir)?;
            for (_, _, line) in &rows {
                println!("{}", line.replace(',', "  "));
            }
            let failed = rows.iter().filter(|r| r.1 == Status::Fail).count();
            let passed = rows.iter().filter(|r| r.1 == Status::Pass).count();
            println!(
                "{passed} passed, {failed} failed, {} skipped",
                rows.len() - passed - failed
            );
            if failed > 0 {
                return Err(HarnessError::Verification { failed });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the config-error code; help and version succeed
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
