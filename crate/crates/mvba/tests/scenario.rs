use std::path::Path;

use mvba::runtime::RunMetrics;
use mvba::scenario::{
    aggregate, fit_slope, read_records, render_text, report, run_scenario, write_records, AggregateError,
    ConfigError, Grid, ScenarioConfig, Seeds, Thresholds,
};

const SCENARIOS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");

const SMALL: &str = r#"
schema_version = 1
name = "small"

[protocol]
kind = "reducer"
t = 1

[run]
seeds = "1..12"

[adversary]
static_corrupt = [5]
behaviors = [{ kind = "equivocate", digests = ["synthetic:a", "synthetic:b"], kinds = ["stored"] }]
"#;

fn synthetic(n: usize, messages: f64, depth: u64, bits: u64) -> RunMetrics {
    RunMetrics {
        scenario: "synthetic".into(),
        protocol: "reducer".into(),
        n,
        t: (n - 1) / 4,
        ell: 256,
        kappa: 256,
        total_messages: messages.round() as u64,
        total_bits: bits,
        decision_depth: vec![Some(depth); n],
        iterations_to_decide: Some(1),
        all_decided: true,
        ..Default::default()
    }
}

#[test]
fn parses_and_expands() {
    let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
    assert_eq!(cfg.run.seeds.iter().count(), 12);
    let points = cfg.points().unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].params.n, 5);
    let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back.points().unwrap().len(), 1);
}

#[test]
fn rejects_bad_configs() {
    let wrong_n = SMALL.replace("t = 1", "t = 1\nn = 7");
    assert!(matches!(ScenarioConfig::from_toml(&wrong_n), Err(ConfigError::Invalid(_))));
    let wrong_schema = SMALL.replace("schema_version = 1", "schema_version = 9");
    assert!(matches!(ScenarioConfig::from_toml(&wrong_schema), Err(ConfigError::Schema(9))));
    let junk = SMALL.replace("kind = \"reducer\"", "kind = \"nope\"");
    assert!(ScenarioConfig::from_toml(&junk).is_err());
    let too_many = SMALL.replace("static_corrupt = [5]", "static_corrupt = [4, 5]");
    assert!(ScenarioConfig::from_toml(&too_many).is_err());
    assert!(Seeds::parse("9..3").is_err());
    assert!(Grid::parse("t=").is_err());
}

#[test]
fn seed_ranges_and_grids() {
    assert_eq!(Seeds::parse("1..500").unwrap().iter().count(), 500);
    assert_eq!(Seeds::parse("7").unwrap().iter().collect::<Vec<_>>(), vec![7]);
    let mut cfg = ScenarioConfig::from_toml(SMALL).unwrap();
    cfg.adversary = Default::default();
    cfg.grid = Grid::parse("t=1,2;ell=256,512").unwrap();
    cfg.run.seeds = Seeds::parse("1..3").unwrap();
    let recs = run_scenario(&cfg, 2).unwrap();
    assert_eq!(recs.len(), 4 * 3);
    assert!(recs.iter().all(|r| r.all_decided && !r.violations.any()));
}

#[test]
fn rerun_is_byte_identical_and_job_count_does_not_matter() {
    let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_records(&mut a, &run_scenario(&cfg, 1).unwrap()).unwrap();
    write_records(&mut b, &run_scenario(&cfg, 3).unwrap()).unwrap();
    assert_eq!(a, b);
    let parsed = read_records(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(parsed.len(), 12);
    assert_eq!(parsed.iter().map(|r| r.seed).collect::<Vec<_>>(), (1..=12).collect::<Vec<_>>());
}

#[test]
fn slope_fit_recovers_known_exponents() {
    let ns = [5.0f64, 9.0, 13.0, 17.0];
    let quad: Vec<_> = ns.iter().map(|&n| (n.ln(), (7.0 * n * n).ln())).collect();
    let cubic: Vec<_> = ns.iter().map(|&n| (n.ln(), (5.0 * n * n * n).ln())).collect();
    assert!((fit_slope(&quad).unwrap() - 2.0).abs() < 0.01);
    assert!((fit_slope(&cubic).unwrap() - 3.0).abs() < 0.01);
    assert_eq!(fit_slope(&quad[..1]), None);

    let recs: Vec<RunMetrics> =
        [5usize, 9, 13, 17].iter().map(|&n| synthetic(n, 7.0 * (n * n) as f64, 40, 1000)).collect();
    let agg = aggregate(&recs).unwrap();
    assert!((agg.scaling[0].message_slope - 2.0).abs() < 0.01);
    assert_eq!(agg.scaling[0].depth_ratio, Some(1.0));
}

#[test]
fn aggregate_is_order_independent_and_rejects_empty() {
    assert_eq!(aggregate(&[]), Err(AggregateError::Empty));
    let mut recs: Vec<RunMetrics> = (0..6)
        .map(|i| {
            let mut r = synthetic(5 + 4 * (i % 2), 100.0 + i as f64, 10 + i as u64, 5000);
            r.seed = i as u64;
            r
        })
        .collect();
    let a = aggregate(&recs).unwrap();
    recs.reverse();
    assert_eq!(aggregate(&recs).unwrap(), a);
}

#[test]
fn report_passes_clean_runs_and_echoes_violating_seeds() {
    let recs: Vec<RunMetrics> = [5usize, 9, 13, 17]
        .iter()
        .map(|&n| synthetic(n, 3.0 * (n * n) as f64, 50, mvba::scenario::bit_budget(n, 256, 256) as u64 * 20))
        .collect();
    let v = report(&aggregate(&recs).unwrap(), &Thresholds::default());
    assert!(v.pass, "{}", render_text(&v));
    assert!(render_text(&v).contains("PASS safety"));

    let mut bad = recs.clone();
    bad[2].seed = 4242;
    bad[2].violations.agreement = true;
    let v = report(&aggregate(&bad).unwrap(), &Thresholds::default());
    assert!(!v.pass);
    let text = render_text(&v);
    assert!(text.contains("FAIL safety") && text.contains("4242"), "{text}");
}

#[test]
fn bundled_scenarios_load() {
    let mut seen = 0;
    for entry in std::fs::read_dir(SCENARIOS).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let cfg = ScenarioConfig::load(Path::new(&path)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!cfg.points().unwrap().is_empty(), "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 10);
}
