//! Scenario files, seed sweeps, aggregation and reports.
//!
//! A scenario is a TOML document with an explicit `schema_version`; see the
//! `scenarios/` directory at the workspace root for examples. Each seed of
//! each grid point is one deterministic run producing one [`RunMetrics`]
//! record.

mod aggregate;
mod config;
mod report;

use std::io::Write;

pub use aggregate::{aggregate, bit_budget, fit_slope, AggregateError, AggregateReport, GroupStats, Scaling};
pub use config::{
    AdversarySection, BehaviorSpec, ConfigError, ForcedLeader, Grid, LeaderTrigger, Point, ProcessSet, ProtocolSection,
    RetractSpec, RunSection, ScenarioConfig, Seeds, SCHEMA_VERSION,
};
pub use report::{render_text, report, Check, ClaimRow, Thresholds, Verdict};

use crate::harness;
use crate::runtime::RunMetrics;

/// Run every (grid point, seed) pair. Records come back in grid-then-seed
/// order regardless of `jobs`.
pub fn run_scenario(cfg: &ScenarioConfig, jobs: usize) -> Result<Vec<RunMetrics>, ConfigError> {
    let points = cfg.points()?;
    let work: Vec<(usize, u64)> =
        (0..points.len()).flat_map(|i| cfg.run.seeds.iter().map(move |s| (i, s))).collect();
    let one = |&(i, seed): &(usize, u64)| {
        harness::run(&cfg.run_spec(&points[i], seed)).map_err(|e| ConfigError::Invalid(e.to_string()))
    };
    let jobs = jobs.max(1).min(work.len().max(1));
    if jobs == 1 {
        return work.iter().map(one).collect();
    }
    let chunk = work.len().div_ceil(jobs);
    let parts: Vec<Result<Vec<RunMetrics>, ConfigError>> = std::thread::scope(|s| {
        let handles: Vec<_> = work.chunks(chunk).map(|c| s.spawn(move || c.iter().map(one).collect())).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(work.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Write records as JSON lines.
pub fn write_records(w: &mut impl Write, records: &[RunMetrics]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records(s: &str) -> Result<Vec<RunMetrics>, serde_json::Error> {
    s.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
