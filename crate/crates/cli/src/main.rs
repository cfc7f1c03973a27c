use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mono5_cli::{emit_report, run_scenario, CliError, Format, RunOptions, ScenarioConfig};

/// Thread count for the internal worker pool.
const THREADS_ENV: &str = "MONO5_THREADS";

#[derive(Parser)]
#[command(name = "mono5", version, about = "Run mono5 analysis scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its reports.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every configured tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("failed to configure the thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Run {
            config,
            out,
            format,
            seed,
            tol_scale,
        } => {
            if !(tol_scale > 0.0) || !tol_scale.is_finite() {
                eprintln!("error: --tol-scale must be finite and positive");
                return ExitCode::from(2);
            }
            match execute(&config, &out, format, RunOptions { seed, tol_scale }) {
                Ok(0) => ExitCode::SUCCESS,
                Ok(_) => ExitCode::from(1),
                Err(e) => {
                    let code = e
                        .downcast_ref::<CliError>()
                        .map(CliError::exit_code)
                        .unwrap_or(1);
                    eprintln!("error: {e:#}");
                    ExitCode::from(code as u8)
                }
            }
        }
    }
}

/// Returns the number of failed invariants.
fn execute(config: &std::path::Path, out: &std::path::Path, format: Format, opts: RunOptions) -> anyhow::Result<usize> {
    let cfg = ScenarioConfig::from_path(config)?;
    let bundle = run_scenario(&cfg, opts)?;
    let files = emit_report(&bundle, format, out)?;
    for f in &files {
        println!("{}", f.display());
    }
    if !bundle.failures.is_empty() {
        eprintln!("{} invariant check(s) failed:", bundle.failures.len());
        for f in &bundle.failures {
            eprintln!("  {} [{}]: |{:e}| > {:e}", f.check, f.context, f.value, f.tol);
        }
    }
    Ok(bundle.failures.len())
}
