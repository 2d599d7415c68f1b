//! `ucplab`: corpus generation, experiment pipelines and the verification
//! suite. Every invocation writes one run directory with a manifest.

mod beltrami;
mod config;
mod experiments;
mod landis;
mod pipeline;
mod report;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::config::ExperimentArgs;
use crate::run::RunDir;

#[derive(Debug, Parser)]
#[command(name = "ucplab", version, about = "Numerical lab for quantitative unique continuation in the plane")]
struct Cli {
    /// Experiment configuration (JSON); flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory to write (default: $UCPLAB_RUNS/<run_id> or runs/<run_id>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random potential V = V₊ − V₋.
    Gen(pipeline::GenArgs),
    /// Solve −Δu + Vu = 0 with random boundary data.
    Solve(pipeline::SolveArgs),
    /// Build the positive multiplier φ of the shifted potential.
    Multiplier(pipeline::MultiplierArgs),
    /// Stream functions, w₁, w₂ and the reduced Beltrami system.
    Stream(pipeline::StreamArgs),
    /// Solve ∂̄P = AP, or sweep the bound on ‖P‖ + ‖P⁻¹‖.
    Beltrami(beltrami::BeltramiArgs),
    /// Three-ball experiment over a corpus.
    Threeball(ExperimentArgs),
    /// Vanishing-order experiment over a corpus.
    Vanishing(ExperimentArgs),
    /// The iterated scale schedule.
    Landis(landis::LandisArgs),
    /// Run the invariant checks; nonzero exit on any failure.
    Verify {
        #[arg(value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<verify::Fault>,
    },
    /// Check digests and summarize the tables of existing runs.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Solve(_) => "solve",
            Command::Multiplier(_) => "multiplier",
            Command::Stream(_) => "stream",
            Command::Beltrami(_) => "beltrami",
            Command::Threeball(_) => "threeball",
            Command::Vanishing(_) => "vanishing",
            Command::Landis(_) => "landis",
            Command::Verify { .. } => "verify",
            Command::Report { .. } => "report",
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let seed = cli.seed;
    let experiment = match &cli.command {
        Command::Threeball(a) | Command::Vanishing(a) => Some(a.resolve(cli.config.as_deref(), seed)?),
        _ => None,
    };
    let mut run = RunDir::create(cli.out.as_deref(), cli.command.name())?;
    let mut seeds: Vec<u64> = seed.into_iter().collect();
    let mut sizes = vec![];
    let mut ok = true;
    let stage = |st: pipeline::Stage, seeds: &mut Vec<u64>, sizes: &mut Vec<usize>| {
        *seeds = st.seed.into_iter().collect();
        *sizes = st.n.into_iter().collect();
        st.summary
    };
    let summary = match &cli.command {
        Command::Gen(a) => stage(pipeline::gen(&mut run, a, seed.unwrap_or(0))?, &mut seeds, &mut sizes),
        Command::Solve(a) => stage(pipeline::solve(&mut run, a, seed)?, &mut seeds, &mut sizes),
        Command::Multiplier(a) => stage(pipeline::multiplier(&mut run, a)?, &mut seeds, &mut sizes),
        Command::Stream(a) => stage(pipeline::stream(&mut run, a)?, &mut seeds, &mut sizes),
        Command::Beltrami(a) => {
            let s = seed.unwrap_or(0);
            seeds = vec![s];
            sizes = vec![a.n];
            beltrami::beltrami(&mut run, a, s)?
        }
        Command::Threeball(_) | Command::Vanishing(_) => {
            let cfg = experiment.expect("resolved above");
            if let Some(p) = &cli.config {
                run.input(p);
            }
            seeds = cfg.seed_list.clone();
            sizes = cfg.n_list.clone();
            let summary = match cli.command {
                Command::Threeball(_) => experiments::threeball(&mut run, &cfg)?,
                _ => experiments::vanishing(&mut run, &cfg)?,
            };
            serde_json::json!({ "config": cfg, "summary": summary })
        }
        Command::Landis(a) => landis::landis(&mut run, a)?,
        Command::Verify { suite, inject_fault } => {
            let report = verify::verify(&mut run, *suite, *inject_fault)?;
            for c in &report.checks {
                let rel = if c.at_least { ">=" } else { "<=" };
                println!("[{}] {}/{}: {:.4e} ({rel} {:.4e})", if c.pass { "PASS" } else { "FAIL" }, c.suite, c.name, c.value, c.threshold);
            }
            ok = report.passed;
            serde_json::json!({ "suite": suite, "inject_fault": inject_fault.map(|f| format!("{f:?}")), "passed": report.passed })
        }
        Command::Report { runs } => serde_json::to_value(report::report(&mut run, runs)?)?,
    };
    if !matches!(cli.command, Command::Verify { .. }) {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    let config = serde_json::json!({ "command": cli.command.name(), "args": format!("{:?}", cli.command), "result": summary });
    let dir = run.finish(config, seeds, sizes)?;
    eprintln!("run written to {}", dir.display());
    Ok(ok)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
