use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Digest, Kappa};
use crate::coin::{CoinTag, CoinValue};
use crate::harness::{proposals, ProposalMode, RunSpec};
use crate::mvba::{Epsilon, Params, ProtocolKind, Validity};
use crate::runtime::{AdversaryScript, Behavior, ProcessId, Retraction, SchedulePolicy, Trigger};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: ProtocolKind,
    pub t: usize,
    /// Checked against the population rule when given.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub epsilon: Epsilon,
    #[serde(default = "default_ell")]
    pub ell: u32,
    #[serde(default = "default_kappa")]
    pub kappa: u16,
    #[serde(default = "always_true")]
    pub validity: Validity,
}

fn one() -> Epsilon {
    Epsilon::ONE
}
fn default_ell() -> u32 {
    256
}
fn default_kappa() -> u16 {
    256
}
fn always_true() -> Validity {
    Validity::AlwaysTrue
}

/// Either one seed or a half-open range `[start, start + count)`. Files may
/// also write the range as a string such as `"1..500"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, try_from = "SeedsRepr")]
pub enum Seeds {
    One(u64),
    Range { start: u64, count: u64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedsRepr {
    One(u64),
    Range { start: u64, count: u64 },
    Text(String),
}

impl TryFrom<SeedsRepr> for Seeds {
    type Error = ConfigError;

    fn try_from(r: SeedsRepr) -> Result<Seeds, ConfigError> {
        match r {
            SeedsRepr::One(s) => Ok(Seeds::One(s)),
            SeedsRepr::Range { start, count } => Ok(Seeds::Range { start, count }),
            SeedsRepr::Text(s) => Seeds::parse(&s),
        }
    }
}

impl Seeds {
    pub fn iter(self) -> impl Iterator<Item = u64> {
        let (a, c) = match self {
            Seeds::One(s) => (s, 1),
            Seeds::Range { start, count } => (start, count),
        };
        a..a + c
    }

    /// Parses `"7"` or `"1..500"` (inclusive).
    pub fn parse(s: &str) -> Result<Seeds, ConfigError> {
        let bad = || invalid(format!("cannot parse seed range {s:?}"));
        match s.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
                if b < a {
                    return Err(bad());
                }
                Ok(Seeds::Range { start: a, count: b - a + 1 })
            }
            None => Ok(Seeds::One(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Seeds,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u32,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub proposals: ProposalMode,
}

fn default_max_iterations() -> u32 {
    1000
}
fn default_max_steps() -> u64 {
    50_000_000
}

/// Sweep axes; each present axis replaces the protocol field of the same name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub t: Vec<usize>,
    #[serde(default)]
    pub ell: Vec<u32>,
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        self.t.is_empty() && self.ell.is_empty()
    }

    /// Parses `t=1,2,3;ell=256,4096`.
    pub fn parse(s: &str) -> Result<Grid, ConfigError> {
        let mut g = Grid::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, vals) = part.split_once('=').ok_or_else(|| invalid(format!("grid axis {part:?} lacks '='")))?;
            let nums = || vals.split(',').map(|v| v.trim().parse::<u64>());
            let err = |_| invalid(format!("bad number in grid axis {part:?}"));
            match key.trim() {
                "t" => g.t = nums().map(|r| r.map(|v| v as usize)).collect::<Result<_, _>>().map_err(err)?,
                "ell" => g.ell = nums().map(|r| r.map(|v| v as u32)).collect::<Result<_, _>>().map_err(err)?,
                other => return Err(invalid(format!("unknown grid axis {other:?}"))),
            }
        }
        Ok(g)
    }
}

/// A set of processes, given explicitly or relative to `n` and `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProcessSet {
    Ids(Vec<u16>),
    /// `"none"`, `"first-t"` or `"last-t"`.
    Named(String),
}

impl Default for ProcessSet {
    fn default() -> Self {
        ProcessSet::Ids(Vec::new())
    }
}

impl ProcessSet {
    fn resolve(&self, n: usize, t: usize) -> Result<Vec<ProcessId>, ConfigError> {
        match self {
            ProcessSet::Ids(ids) => Ok(ids.iter().map(|&i| ProcessId(i)).collect()),
            ProcessSet::Named(s) => match s.as_str() {
                "none" => Ok(Vec::new()),
                "first-t" => Ok((1..=t).map(|i| ProcessId(i as u16)).collect()),
                "last-t" => Ok((n - t + 1..=n).map(|i| ProcessId(i as u16)).collect()),
                other => Err(invalid(format!("unknown process set {other:?}"))),
            },
        }
    }
}

/// A digest in a scenario file: hex, or `"synthetic:<label>"`.
fn parse_digest(s: &str, kappa: Kappa) -> Result<Digest, ConfigError> {
    if let Some(label) = s.strip_prefix("synthetic:") {
        let mut bytes = b"synthetic:".to_vec();
        bytes.extend_from_slice(label.as_bytes());
        return Ok(crate::codec::cro_hash(kappa, &bytes));
    }
    let raw = hex::decode(s).map_err(|e| invalid(format!("digest {s:?}: {e}")))?;
    if raw.len() != kappa.bytes() {
        return Err(invalid(format!("digest {s:?} has {} bytes, kappa needs {}", raw.len(), kappa.bytes())));
    }
    Ok(Digest::from_prefix(kappa, &raw))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BehaviorSpec {
    Crash,
    SilentOn { kinds: Vec<String> },
    Equivocate { digests: Vec<String>, #[serde(default)] kinds: Vec<String> },
    Mutate { probability: f64 },
    Replay { probability: f64 },
}

impl BehaviorSpec {
    fn resolve(&self, kappa: Kappa) -> Result<Behavior, ConfigError> {
        Ok(match self {
            BehaviorSpec::Crash => Behavior::Crash,
            BehaviorSpec::SilentOn { kinds } => Behavior::SilentOn(kinds.clone()),
            BehaviorSpec::Equivocate { digests, kinds } => Behavior::Equivocate {
                digests: digests.iter().map(|d| parse_digest(d, kappa)).collect::<Result<_, _>>()?,
                kinds: kinds.clone(),
            },
            BehaviorSpec::Mutate { probability } => Behavior::Mutate { probability: *probability },
            BehaviorSpec::Replay { probability } => Behavior::Replay { probability: *probability },
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RetractSpec {
    #[default]
    None,
    All,
    Fraction { fraction: f64 },
    Kinds { kinds: Vec<String> },
}

impl RetractSpec {
    fn resolve(&self) -> Retraction {
        match self {
            RetractSpec::None => Retraction::None,
            RetractSpec::All => Retraction::All,
            RetractSpec::Fraction { fraction } => Retraction::Fraction(*fraction),
            RetractSpec::Kinds { kinds } => Retraction::Kinds(kinds.clone()),
        }
    }
}

/// Corrupt the elected leader of each listed iteration as soon as the
/// election coin is revealed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderTrigger {
    pub iterations: Vec<u32>,
    #[serde(default)]
    pub retract: RetractSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedLeader {
    pub k: u32,
    pub leader: u16,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    #[serde(default)]
    pub static_corrupt: ProcessSet,
    #[serde(default)]
    pub behaviors: Vec<BehaviorSpec>,
    #[serde(default)]
    pub corrupt_leaders: Vec<LeaderTrigger>,
    #[serde(default)]
    pub forced_leaders: Vec<ForcedLeader>,
    #[serde(default)]
    pub peek_early: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub protocol: ProtocolSection,
    pub run: RunSection,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub scheduler: SchedulePolicy,
    #[serde(default)]
    pub adversary: AdversarySection,
}

/// One grid point, fully resolved.
#[derive(Clone, Debug)]
pub struct Point {
    pub params: Arc<Params>,
    pub script: AdversaryScript,
    pub forced: Vec<(CoinTag, CoinValue)>,
}

impl ScenarioConfig {
    pub fn from_toml(s: &str) -> Result<ScenarioConfig, ConfigError> {
        let c: ScenarioConfig = toml::from_str(s)?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(c.schema_version));
        }
        c.points()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        ScenarioConfig::from_toml(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Resolve every grid point; fails on the first invalid one.
    pub fn points(&self) -> Result<Vec<Point>, ConfigError> {
        if self.name.is_empty() {
            return Err(invalid("name must not be empty"));
        }
        if self.run.max_iterations == 0 {
            return Err(invalid("max_iterations must be positive"));
        }
        if matches!(self.run.seeds, Seeds::Range { count: 0, .. }) {
            return Err(invalid("seed range is empty"));
        }
        let pr = &self.protocol;
        let ts = if self.grid.t.is_empty() { vec![pr.t] } else { self.grid.t.clone() };
        let ells = if self.grid.ell.is_empty() { vec![pr.ell] } else { self.grid.ell.clone() };
        if !self.grid.t.is_empty() && pr.n.is_some() {
            return Err(invalid("give either protocol.n or a t grid, not both"));
        }
        let kappa = Kappa::new(pr.kappa).map_err(|e| invalid(e.to_string()))?;
        let mut out = Vec::new();
        for &ell in &ells {
            for &t in &ts {
                out.push(self.point(t, ell, kappa)?);
            }
        }
        Ok(out)
    }

    fn point(&self, t: usize, ell: u32, kappa: Kappa) -> Result<Point, ConfigError> {
        let pr = &self.protocol;
        let params = match pr.n {
            Some(n) => Params::with_n(pr.kind, n, t, pr.epsilon, ell, kappa, pr.validity.clone()),
            None => match pr.kind {
                ProtocolKind::Reducer => Params::reducer(t, ell, kappa, pr.validity.clone()),
                ProtocolKind::ReducerPp => Params::reducer_pp(t, pr.epsilon, ell, kappa, pr.validity.clone()),
            },
        };
        let mut params = params.map_err(|e| invalid(e.to_string()))?;
        params.max_iterations = self.run.max_iterations;
        let n = params.n;
        let adv = &self.adversary;
        let mut triggers = Vec::new();
        let instance: Arc<str> = Arc::from(self.name.as_str());
        for lt in &adv.corrupt_leaders {
            for &k in &lt.iterations {
                triggers.push(Trigger { tag: CoinTag::election(&instance, k), retract: lt.retract.resolve() });
            }
        }
        let script = AdversaryScript {
            static_corrupt: adv.static_corrupt.resolve(n, t)?,
            triggers,
            behaviors: adv.behaviors.iter().map(|b| b.resolve(kappa)).collect::<Result<_, _>>()?,
            schedule: self.scheduler.clone(),
            peek_early: adv.peek_early,
        };
        script.validate(n, t).map_err(|e| invalid(e.to_string()))?;
        let mut forced = Vec::new();
        for f in &adv.forced_leaders {
            if f.leader == 0 || f.leader as usize > n {
                return Err(invalid(format!("forced leader p{} outside [1, {n}]", f.leader)));
            }
            forced.push((CoinTag::election(&instance, f.k), CoinValue::forcing(f.leader as u64)));
        }
        let probe = proposals(&params, 0, self.run.proposals);
        if probe.iter().any(|v| !params.validity.valid(v)) {
            return Err(invalid("proposal generator produced an invalid value"));
        }
        Ok(Point { params: Arc::new(params), script, forced })
    }

    pub fn run_spec(&self, point: &Point, seed: u64) -> RunSpec {
        let mut spec = RunSpec::new(&self.name, point.params.clone(), seed, point.script.clone());
        spec.proposals = proposals(&point.params, seed, self.run.proposals);
        spec.forced_coins = point.forced.clone();
        spec.max_steps = self.run.max_steps;
        spec
    }
}
