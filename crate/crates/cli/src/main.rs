use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use logsense_ks::{resolve_out_dir, run_experiment, ExperimentConfig, Mode};

/// Keller-Segel laboratory with logarithmic sensitivity.
#[derive(Debug, Parser)]
#[command(name = "logsense-ks", version)]
struct Cli {
    mode: Mode,
    /// JSON experiment document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `$LOGSENSE_KS_OUT/<mode>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the one in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ladders, refinements and ensembles.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let config = ExperimentConfig::from_path(&cli.config)?;
    config.validate(cli.mode)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let out = resolve_out_dir(cli.out.as_deref(), &config, cli.mode);
    let manifest = run_experiment(cli.mode, &config, &out, cli.seed)?;
    for a in manifest.assertions.iter() {
        let status = if a.passed { "PASS" } else { "FAIL" };
        match (a.value, a.tolerance) {
            (Some(v), Some(t)) => println!("{status} {} ({v:e} vs {t:e})", a.name),
            _ => println!("{status} {}", a.name),
        }
    }
    for f in manifest.flags.iter().filter(|f| f.raised) {
        println!("FLAG {}: {}", f.name, f.note);
    }
    println!("manifest written to {}", out.join("manifest.json").display());
    Ok(manifest.passed)
}
