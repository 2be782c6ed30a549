use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runtime::{percentile, RunMetrics};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("no run records to aggregate")]
    Empty,
}

/// Statistics for one (protocol, n, t, ell) configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub protocol: String,
    pub n: usize,
    pub t: usize,
    pub ell: u32,
    pub kappa: u16,
    pub runs: usize,
    pub decided: usize,
    pub timed_out: usize,
    pub mean_messages: f64,
    pub p95_messages: f64,
    pub mean_bits: f64,
    /// `mean_bits / (nℓ + n²κ log₂ n)`.
    pub bit_constant: f64,
    pub mean_depth: Option<f64>,
    pub p95_depth: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub p95_iterations: Option<f64>,
    pub violations: BTreeMap<String, usize>,
    pub violating_seeds: Vec<u64>,
}

/// Power-law fit over the groups that share one value length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub protocol: String,
    pub ell: u32,
    pub ns: Vec<usize>,
    /// Least-squares slope of `ln(mean messages)` against `ln n`.
    pub message_slope: f64,
    /// Mean decision depth at the largest `n` over that at the smallest.
    pub depth_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub scenario: String,
    pub runs: usize,
    pub groups: Vec<GroupStats>,
    pub scaling: Vec<Scaling>,
    /// Largest over smallest `bit_constant` across all groups.
    pub bit_constant_spread: Option<f64>,
    pub violations: BTreeMap<String, usize>,
    pub violating_seeds: Vec<u64>,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn bit_budget(n: usize, ell: u32, kappa: u16) -> f64 {
    let n = n as f64;
    n * ell as f64 + n * n * kappa as f64 * n.log2()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn group(records: &[&RunMetrics]) -> GroupStats {
    let r0 = records[0];
    let msgs: Vec<f64> = records.iter().map(|r| r.total_messages as f64).collect();
    let bits: Vec<f64> = records.iter().map(|r| r.total_bits as f64).collect();
    let depth: Vec<f64> = records.iter().filter_map(|r| r.mean_decision_depth()).collect();
    let iters: Vec<f64> = records.iter().filter_map(|r| r.iterations_to_decide.map(f64::from)).collect();
    let mut violations = BTreeMap::new();
    let mut violating_seeds = Vec::new();
    for r in records {
        let names = r.violations.names();
        if !names.is_empty() {
            violating_seeds.push(r.seed);
        }
        for name in names {
            *violations.entry(name.to_string()).or_default() += 1;
        }
    }
    let mean_bits = mean(&bits).unwrap();
    GroupStats {
        protocol: r0.protocol.clone(),
        n: r0.n,
        t: r0.t,
        ell: r0.ell,
        kappa: r0.kappa,
        runs: records.len(),
        decided: records.iter().filter(|r| r.all_decided).count(),
        timed_out: records.iter().filter(|r| r.timed_out).count(),
        mean_messages: mean(&msgs).unwrap(),
        p95_messages: percentile(&msgs, 95.0).unwrap(),
        mean_bits,
        bit_constant: mean_bits / bit_budget(r0.n, r0.ell, r0.kappa),
        mean_depth: mean(&depth),
        p95_depth: percentile(&depth, 95.0),
        mean_iterations: mean(&iters),
        p95_iterations: percentile(&iters, 95.0),
        violations,
        violating_seeds,
    }
}

/// Group records by configuration and fit the scaling statistics.
/// The result does not depend on record order.
pub fn aggregate(records: &[RunMetrics]) -> Result<AggregateReport, AggregateError> {
    if records.is_empty() {
        return Err(AggregateError::Empty);
    }
    let mut by_cfg: BTreeMap<(String, u32, usize, usize, u16), Vec<&RunMetrics>> = BTreeMap::new();
    for r in records {
        by_cfg.entry((r.protocol.clone(), r.ell, r.n, r.t, r.kappa)).or_default().push(r);
    }
    let groups: Vec<GroupStats> = by_cfg
        .into_values()
        .map(|mut rs| {
            rs.sort_by_key(|r| r.seed);
            group(&rs)
        })
        .collect();

    let mut by_ell: BTreeMap<(String, u32), Vec<&GroupStats>> = BTreeMap::new();
    for g in &groups {
        by_ell.entry((g.protocol.clone(), g.ell)).or_default().push(g);
    }
    let mut scaling = Vec::new();
    for ((protocol, ell), gs) in by_ell {
        let pts: Vec<(f64, f64)> = gs.iter().map(|g| ((g.n as f64).ln(), g.mean_messages.ln())).collect();
        let Some(message_slope) = fit_slope(&pts) else { continue };
        let lo = gs.iter().min_by_key(|g| g.n).unwrap();
        let hi = gs.iter().max_by_key(|g| g.n).unwrap();
        let depth_ratio = match (lo.mean_depth, hi.mean_depth) {
            (Some(a), Some(b)) if a > 0.0 => Some(b / a),
            _ => None,
        };
        scaling.push(Scaling { protocol, ell, ns: gs.iter().map(|g| g.n).collect(), message_slope, depth_ratio });
    }

    let cs: Vec<f64> = groups.iter().map(|g| g.bit_constant).collect();
    let bit_constant_spread = (cs.len() >= 2).then(|| {
        let max = cs.iter().cloned().fold(f64::MIN, f64::max);
        let min = cs.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    });
    let mut violations = BTreeMap::new();
    let mut violating_seeds = Vec::new();
    for g in &groups {
        for (k, v) in &g.violations {
            *violations.entry(k.clone()).or_default() += v;
        }
        violating_seeds.extend(&g.violating_seeds);
    }
    violating_seeds.sort();
    violating_seeds.dedup();
    Ok(AggregateReport {
        scenario: records[0].scenario.clone(),
        runs: records.len(),
        groups,
        scaling,
        bit_constant_spread,
        violations,
        violating_seeds,
    })
}
