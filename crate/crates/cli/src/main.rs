use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use batlab_core::lab::{self, Command, RunOptions};
use clap::Parser;

/// Runs battery-laboratory scenarios and writes CSV reports plus
/// `summary.json`. Exits nonzero unless every check passes.
#[derive(Debug, Parser)]
#[command(name = "batlab", version)]
struct Args {
    /// Scenario file (TOML). Repeatable. Defaults to the bundled suite.
    #[arg(long)]
    scenario: Vec<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "lab_out")]
    out: PathBuf,

    /// Overrides every scenario seed.
    #[arg(long, env = "LAB_SEED")]
    seed: Option<u64>,

    /// density-oneshot, density-full, nondensity, bl-audit, monotonicity,
    /// collapse, flow or all.
    #[arg(long, default_value = "all")]
    command: Command,

    /// Overrides sample budgets of sampling commands.
    #[arg(long)]
    episodes: Option<usize>,

    /// Treat tolerance-only passes as failures.
    #[arg(long)]
    strict: bool,

    /// Run sequentially.
    #[arg(long)]
    sequential: bool,
}

fn run(args: Args) -> Result<bool> {
    if args.sequential {
        batlab_core::par::set_parallel(false);
    }
    let scenarios = if args.scenario.is_empty() {
        lab::bundled_suite().context("bundled scenarios")?
    } else {
        args.scenario
            .iter()
            .map(|p| lab::load_scenario(p))
            .collect::<Result<Vec<_>, _>>()?
    };
    let opts = RunOptions {
        seed: args.seed,
        episodes: args.episodes,
        strict: args.strict,
    };
    let summary = lab::execute(args.command, &scenarios, &args.out, &opts)
        .with_context(|| format!("writing reports to {}", args.out.display()))?;
    for c in &summary.commands {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} {}/{} rows={} failures={} warnings={}",
            c.scenario, c.command, c.rows, c.failures, c.warnings
        );
    }
    println!(
        "{} ({} reports in {})",
        if summary.passed {
            "all checks passed"
        } else {
            "some checks failed"
        },
        summary.commands.len(),
        args.out.display()
    );
    Ok(summary.passed)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
