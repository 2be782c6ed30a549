//! Idealized common coins.
//!
//! Every coin is a keyed pseudorandom function of the run seed and a
//! canonical tag, so all callers observe the same value. The oracle records
//! who asked for each tag; a value becomes visible to the adversary only once
//! `t + 1` distinct processes have queried it.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::codec::{Digest, Kappa, Noise};
use crate::runtime::ProcessId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoinKind {
    Election,
    Index,
    Noise,
    BaRound,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoinTag {
    pub instance: Arc<str>,
    pub kind: CoinKind,
    pub k: u32,
    pub x: Option<u32>,
    pub r: Option<u32>,
}

impl CoinTag {
    pub fn election(instance: &Arc<str>, k: u32) -> CoinTag {
        CoinTag { instance: instance.clone(), kind: CoinKind::Election, k, x: None, r: None }
    }

    pub fn index(instance: &Arc<str>, k: u32) -> CoinTag {
        CoinTag { instance: instance.clone(), kind: CoinKind::Index, k, x: None, r: None }
    }

    pub fn noise(instance: &Arc<str>, k: u32, x: u32) -> CoinTag {
        CoinTag { instance: instance.clone(), kind: CoinKind::Noise, k, x: Some(x), r: None }
    }

    pub fn ba_round(instance: &Arc<str>, r: u32) -> CoinTag {
        CoinTag { instance: instance.clone(), kind: CoinKind::BaRound, k: 0, x: None, r: Some(r) }
    }

    fn canonical(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.instance.len() + 24);
        out.extend_from_slice(&(self.instance.len() as u32).to_be_bytes());
        out.extend_from_slice(self.instance.as_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.k.to_be_bytes());
        for part in [self.x, self.r] {
            match part {
                Some(v) => {
                    out.push(1);
                    out.extend_from_slice(&v.to_be_bytes());
                }
                None => out.push(0),
            }
        }
        out
    }
}

/// Raw coin output; interpreted by the typed accessors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CoinValue(pub [u8; 32]);

impl CoinValue {
    fn word(&self) -> u64 {
        u64::from_be_bytes(self.0[..8].try_into().unwrap())
    }

    /// Uniform in `[1, range]`.
    pub fn in_range(&self, range: u64) -> u64 {
        1 + self.word() % range
    }

    pub fn as_process(&self, n: usize) -> ProcessId {
        ProcessId(self.in_range(n as u64) as u16)
    }

    pub fn as_bit(&self) -> bool {
        self.0[31] & 1 == 1
    }

    pub fn as_noise(&self, kappa: Kappa) -> Noise {
        Noise(Digest::from_prefix(kappa, &self.0))
    }

    /// A raw value whose `in_range` image is `v` (for any range ≥ v).
    pub fn forcing(v: u64) -> CoinValue {
        let mut raw = [0u8; 32];
        raw[..8].copy_from_slice(&(v - 1).to_be_bytes());
        CoinValue(raw)
    }
}

/// The per-run coin oracle.
#[derive(Clone, Debug)]
pub struct CoinOracle {
    seed: u64,
    t: usize,
    queries: HashMap<CoinTag, BTreeSet<ProcessId>>,
    forced: HashMap<CoinTag, CoinValue>,
    early_peeks: Vec<CoinTag>,
}

impl CoinOracle {
    pub fn new(seed: u64, t: usize) -> CoinOracle {
        CoinOracle {
            seed,
            t,
            queries: HashMap::new(),
            forced: HashMap::new(),
            early_peeks: Vec::new(),
        }
    }

    /// Pin the value of one tag, e.g. to script a particular leader.
    pub fn force(&mut self, tag: CoinTag, value: CoinValue) {
        self.forced.insert(tag, value);
    }

    fn value(&self, tag: &CoinTag) -> CoinValue {
        if let Some(v) = self.forced.get(tag) {
            return *v;
        }
        let mut h = Sha256::new();
        h.update(b"mvba-coin");
        h.update(self.seed.to_be_bytes());
        h.update(tag.canonical());
        CoinValue(h.finalize().into())
    }

    /// Query on behalf of a process; the caller is recorded.
    pub fn query(&mut self, tag: &CoinTag, caller: ProcessId) -> CoinValue {
        self.queries.entry(tag.clone()).or_default().insert(caller);
        self.value(tag)
    }

    pub fn queriers(&self, tag: &CoinTag) -> usize {
        self.queries.get(tag).map_or(0, |s| s.len())
    }

    pub fn is_revealed(&self, tag: &CoinTag) -> bool {
        self.queriers(tag) > self.t
    }

    /// Adversary access. Returns `None` while the coin is hidden and records
    /// the attempt as a model violation.
    pub fn adversary_peek(&mut self, tag: &CoinTag) -> Option<CoinValue> {
        if self.is_revealed(tag) {
            Some(self.value(tag))
        } else {
            self.early_peeks.push(tag.clone());
            None
        }
    }

    /// Tags the adversary tried to read before they were revealed.
    pub fn early_peeks(&self) -> &[CoinTag] {
        &self.early_peeks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst() -> Arc<str> {
        Arc::from("run")
    }

    #[test]
    fn all_callers_agree() {
        let mut o = CoinOracle::new(7, 1);
        let tag = CoinTag::election(&inst(), 1);
        let vals: Vec<_> = (1..=5).map(|p| o.query(&tag, ProcessId(p)).as_process(5)).collect();
        assert!(vals.windows(2).all(|w| w[0] == w[1]));
        assert!((1..=5).contains(&vals[0].0));
    }

    #[test]
    fn reveal_after_t_plus_one() {
        let mut o = CoinOracle::new(1, 2);
        let tag = CoinTag::index(&inst(), 3);
        assert!(o.adversary_peek(&tag).is_none());
        o.query(&tag, ProcessId(1));
        o.query(&tag, ProcessId(1));
        o.query(&tag, ProcessId(2));
        assert!(!o.is_revealed(&tag));
        assert!(o.adversary_peek(&tag).is_none());
        o.query(&tag, ProcessId(4));
        assert!(o.is_revealed(&tag));
        assert!(o.adversary_peek(&tag).is_some());
        assert_eq!(o.early_peeks().len(), 2);
    }

    #[test]
    fn tags_are_distinct() {
        let o = CoinOracle::new(3, 1);
        let a = o.value(&CoinTag::noise(&inst(), 1, 1));
        let b = o.value(&CoinTag::noise(&inst(), 1, 2));
        let c = o.value(&CoinTag::noise(&Arc::from("other"), 1, 1));
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn index_ranges() {
        let o = CoinOracle::new(11, 1);
        for k in 1..200 {
            let v = o.value(&CoinTag::index(&inst(), k));
            assert!((1..=3).contains(&v.in_range(3)));
            assert!((1..=19).contains(&v.in_range(19)));
        }
    }

    #[test]
    fn forced_values() {
        let mut o = CoinOracle::new(5, 1);
        let tag = CoinTag::election(&inst(), 2);
        o.force(tag.clone(), CoinValue::forcing(4));
        assert_eq!(o.query(&tag, ProcessId(1)).as_process(5), ProcessId(4));
    }
}
