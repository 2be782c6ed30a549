use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AggregateReport;

/// Pass thresholds applied by [`report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub slope_band: (f64, f64),
    pub max_depth_ratio: f64,
    pub max_bit_spread: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { slope_band: (1.6, 2.4), max_depth_ratio: 1.5, max_bit_spread: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: String,
    pub threshold: String,
}

/// One row of the claimed-versus-measured table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimRow {
    pub quantity: String,
    pub claim: String,
    pub measured: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub checks: Vec<Check>,
    pub claims: Vec<ClaimRow>,
    pub aggregate: AggregateReport,
}

pub fn report(agg: &AggregateReport, th: &Thresholds) -> Verdict {
    let mut checks = Vec::new();
    let total: usize = agg.violations.values().sum();
    let mut seeds = agg.violating_seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
    if seeds.is_empty() {
        seeds = "-".into();
    }
    checks.push(Check {
        name: "safety".into(),
        pass: total == 0,
        measured: format!("{total} violations {:?}, replay seeds: {seeds}", agg.violations),
        threshold: "0 violations".into(),
    });
    let mut claims = Vec::new();
    for s in &agg.scaling {
        let tag = format!("{} ell={}", s.protocol, s.ell);
        let (lo, hi) = th.slope_band;
        checks.push(Check {
            name: format!("message slope ({tag})"),
            pass: (lo..=hi).contains(&s.message_slope),
            measured: format!("{:.3} over n = {:?}", s.message_slope, s.ns),
            threshold: format!("[{lo}, {hi}]"),
        });
        claims.push(ClaimRow {
            quantity: format!("messages ({tag})"),
            claim: "O(n^2)".into(),
            measured: format!("slope {:.3}", s.message_slope),
        });
        if let Some(r) = s.depth_ratio {
            checks.push(Check {
                name: format!("depth ratio ({tag})"),
                pass: r <= th.max_depth_ratio,
                measured: format!("{r:.3}"),
                threshold: format!("<= {}", th.max_depth_ratio),
            });
            claims.push(ClaimRow {
                quantity: format!("time ({tag})"),
                claim: "O(1)".into(),
                measured: format!("depth ratio {r:.3}"),
            });
        }
    }
    if let Some(sp) = agg.bit_constant_spread {
        checks.push(Check {
            name: "bit constant spread".into(),
            pass: sp <= th.max_bit_spread,
            measured: format!("{sp:.3}"),
            threshold: format!("<= {}", th.max_bit_spread),
        });
        claims.push(ClaimRow {
            quantity: "bits".into(),
            claim: "O(n ell + n^2 kappa log n)".into(),
            measured: format!("constant spread {sp:.3}"),
        });
    }
    for g in &agg.groups {
        if let Some(it) = g.mean_iterations {
            claims.push(ClaimRow {
                quantity: format!("iterations ({} n={} ell={})", g.protocol, g.n, g.ell),
                claim: if g.protocol == "reducer" { "expected 2".into() } else { "expected O(1)".into() },
                measured: format!("mean {it:.2}"),
            });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Verdict { pass, checks, claims, aggregate: agg.clone() }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.1}"))
}

pub fn render_text(v: &Verdict) -> String {
    let a = &v.aggregate;
    let mut s = String::new();
    let _ = writeln!(s, "scenario {}: {} runs", a.scenario, a.runs);
    let _ = writeln!(
        s,
        "{:<10} {:>4} {:>3} {:>6} {:>6} {:>8} {:>12} {:>14} {:>8} {:>8} {:>7} {:>7} {:>6}",
        "protocol", "n", "t", "ell", "runs", "decided", "messages", "bits", "c_bits", "depth", "iters", "p95_it", "viol"
    );
    for g in &a.groups {
        let _ = writeln!(
            s,
            "{:<10} {:>4} {:>3} {:>6} {:>6} {:>8} {:>12.1} {:>14.1} {:>8.2} {:>8} {:>7} {:>7} {:>6}",
            g.protocol,
            g.n,
            g.t,
            g.ell,
            g.runs,
            g.decided,
            g.mean_messages,
            g.mean_bits,
            g.bit_constant,
            opt(g.mean_depth),
            g.mean_iterations.map_or("-".into(), |x| format!("{x:.2}")),
            opt(g.p95_iterations),
            g.violations.values().sum::<usize>()
        );
    }
    if !v.claims.is_empty() {
        let _ = writeln!(s, "\n{:<34} {:<28} measured", "quantity", "claim");
        for c in &v.claims {
            let _ = writeln!(s, "{:<34} {:<28} {}", c.quantity, c.claim, c.measured);
        }
    }
    let _ = writeln!(s);
    for c in &v.checks {
        let _ = writeln!(
            s,
            "{} {}: {} (threshold {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold
        );
    }
    let _ = writeln!(s, "{}", if v.pass { "OVERALL PASS" } else { "OVERALL FAIL" });
    s
}
