use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cpg_core::diagnostics::{standard_suite, CheckReport};
use cpg_core::harness::presets::{preset, preset_names, PRESETS};
use cpg_core::harness::run::{load_records, summarize_dir, ExperimentSummary};
use cpg_core::harness::{aggregate, emit_plot_data, load_config, run_experiment, ExperimentConfig, XAxis};
use cpg_core::Result;

/// Primal-dual policy gradient experiments for constrained MDPs.
///
/// Relative output directories are resolved against $CPG_OUTPUT_ROOT when it
/// is set. Exit status is 0 when every run completed and every check passed,
/// 1 when a run aborted or a check failed, 2 on invalid input.
#[derive(Parser)]
#[command(name = "cpg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (sweep cell, seed) pair of a configuration.
    Run {
        /// Config file, or the name of a shipped preset.
        config: String,
    },
    /// Parse and validate a configuration without running it.
    Validate { config: String },
    /// Recompute the summary of an output directory from its records.
    Aggregate { dir: PathBuf },
    /// Write mean and 95% CI columns of one quantity for every cell.
    Plotdata {
        dir: PathBuf,
        #[arg(long)]
        quantity: String,
        #[arg(long, value_enum, default_value_t = Axis::Iterations)]
        x: Axis,
    },
    /// Run the estimator and gradient diagnostics suite.
    Check {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List shipped presets, or print one as TOML.
    Presets { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Iterations,
    Rollouts,
}

impl From<Axis> for XAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Iterations => XAxis::Iterations,
            Axis::Rollouts => XAxis::Rollouts,
        }
    }
}

fn resolve_config(arg: &str) -> Result<ExperimentConfig> {
    let path = Path::new(arg);
    if !path.exists() && preset_names().any(|n| n == arg) {
        return preset(arg);
    }
    load_config(path)
}

fn print_checks(checks: &[CheckReport]) {
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("  [{verdict}] {}: measured {:.6e}, bound {:.6e} (n={})", c.name, c.measured, c.bound, c.sample_size);
    }
}

fn print_summary(s: &ExperimentSummary) {
    println!("experiment {}", s.name);
    for cell in &s.cells {
        println!("cell {} ({} runs, {} aborted)", cell.label, cell.runs.len(), cell.aborted_seeds.len());
        for run in &cell.runs {
            if let cpg_core::optimizer::RunStatus::Aborted { iteration, reason } = &run.status {
                println!("  seed {} aborted at iteration {iteration}: {reason}", run.seed);
            }
        }
        for (name, w) in &cell.final_window {
            println!("  last {} iterations {name}: {:.6} +/- {:.6}", cell.window, w.mean, w.half_width);
        }
        let failed: Vec<CheckReport> = cell.checks.iter().filter(|c| !c.passed).cloned().collect();
        println!("  checks: {} passed, {} failed", cell.checks.len() - failed.len(), failed.len());
        print_checks(&failed);
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let cfg = resolve_config(&config)?;
            let summary = run_experiment(&cfg)?;
            print_summary(&summary);
            println!("output written to {}", cfg.output_dir().display());
            Ok(status(summary.success()))
        }
        Command::Validate { config } => {
            let cfg = resolve_config(&config)?;
            let cells = cfg.cells()?;
            println!(
                "{}: valid, {} cell(s) x {} seed(s) = {} runs",
                cfg.name,
                cells.len(),
                cfg.run.num_seeds,
                cells.len() * cfg.run.num_seeds
            );
            for c in cells {
                println!("  {}", c.label);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Aggregate { dir } => {
            let summary = summarize_dir(&dir)?;
            print_summary(&summary);
            Ok(status(summary.success()))
        }
        Command::Plotdata { dir, quantity, x } => {
            let (_, cells, grouped) = load_records(&dir)?;
            let axis = match x {
                Axis::Iterations => "iterations",
                Axis::Rollouts => "rollouts",
            };
            for (cell, runs) in cells.iter().zip(grouped) {
                let records: Vec<_> = runs.into_iter().map(|(_, r)| r).collect();
                let series = aggregate(&records)?;
                let out = dir.join(&cell.label).join(format!("plot_{quantity}_{axis}.csv"));
                emit_plot_data(&series, &quantity, x.into(), &out)?;
                println!("{}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { samples, seed } => {
            let reports = standard_suite(samples, seed)?;
            print_checks(&reports);
            let ok = reports.iter().all(|r| r.passed);
            println!("{} of {} checks passed", reports.iter().filter(|r| r.passed).count(), reports.len());
            Ok(status(ok))
        }
        Command::Presets { name } => {
            match name {
                None => preset_names().for_each(|n| println!("{n}")),
                Some(n) => {
                    let (_, text) = PRESETS
                        .iter()
                        .find(|(p, _)| *p == n)
                        .ok_or_else(|| cpg_core::Error::InvalidConfig(format!("unknown preset `{n}`")))?;
                    print!("{text}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
