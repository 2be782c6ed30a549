//! `mvba-sim`: run scenario files and report against the acceptance thresholds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mvba::scenario::{self, Grid, ScenarioConfig, Seeds, Thresholds, Verdict};

#[derive(Parser)]
#[command(name = "mvba-sim", version, about = "Deterministic simulator for the Reducer and Reducer++ MVBA protocols")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and print the report.
    Run {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Run a single seed instead of the file's seeds.
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Inclusive seed range such as `1..500`.
        #[arg(long)]
        seeds: Option<String>,
        /// Replace the grid, e.g. `t=1,2,3,4;ell=256,4096`.
        #[arg(long)]
        grid: Option<String>,
        /// Write one JSON record per run here.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Worker threads; each run stays single-threaded.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also exit nonzero when a scaling check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
    /// Aggregate previously written records.
    Aggregate {
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn print(v: &Verdict, format: Format) -> Result<()> {
    match format {
        Format::Text => print!("{}", scenario::render_text(v)),
        Format::Json => println!("{}", serde_json::to_string_pretty(v)?),
    }
    Ok(())
}

fn exit_code(v: &Verdict, strict: bool) -> ExitCode {
    let safe = v.aggregate.violations.values().sum::<usize>() == 0;
    if !safe || (strict && !v.pass) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run { scenario: path, seed, seeds, grid, output, format, jobs, strict } => {
            let mut cfg = ScenarioConfig::load(&path)?;
            if let Some(s) = seed {
                cfg.run.seeds = Seeds::One(s);
            }
            if let Some(s) = seeds {
                cfg.run.seeds = Seeds::parse(&s)?;
            }
            if let Some(g) = grid {
                cfg.grid = Grid::parse(&g)?;
            }
            let records = scenario::run_scenario(&cfg, jobs)?;
            if let Some(out) = output {
                let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
                let mut w = BufWriter::new(f);
                scenario::write_records(&mut w, &records)?;
                w.flush()?;
            }
            let v = scenario::report(&scenario::aggregate(&records)?, &Thresholds::default());
            print(&v, format)?;
            Ok(exit_code(&v, strict))
        }
        Cmd::Validate { scenario: path } => {
            let cfg = ScenarioConfig::load(&path)?;
            let points = cfg.points()?;
            let runs = points.len() as u64 * cfg.run.seeds.iter().count() as u64;
            println!("{}: valid, {} grid point(s), {runs} run(s)", cfg.name, points.len());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Aggregate { records, format } => {
            let s = std::fs::read_to_string(&records).with_context(|| format!("reading {}", records.display()))?;
            let recs = scenario::read_records(&s)?;
            let v = scenario::report(&scenario::aggregate(&recs)?, &Thresholds::default());
            print(&v, format)?;
            Ok(exit_code(&v, false))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
