use serde::{Deserialize, Serialize};

/// Ground-truth property violations observed in one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violations {
    pub agreement: bool,
    pub external_validity: bool,
    pub integrity: bool,
    pub justification: bool,
    pub strong_validity: bool,
    pub strong_unanimity: bool,
    /// The adversary tried something outside the model (e.g. read a hidden coin).
    pub model: bool,
}

impl Violations {
    pub fn any(&self) -> bool {
        self.agreement
            || self.external_validity
            || self.integrity
            || self.justification
            || self.strong_validity
            || self.strong_unanimity
            || self.model
    }

    pub fn merge(&mut self, o: &Violations) {
        self.agreement |= o.agreement;
        self.external_validity |= o.external_validity;
        self.integrity |= o.integrity;
        self.justification |= o.justification;
        self.strong_validity |= o.strong_validity;
        self.strong_unanimity |= o.strong_unanimity;
        self.model |= o.model;
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (on, name) in [
            (self.agreement, "agreement"),
            (self.external_validity, "external-validity"),
            (self.integrity, "integrity"),
            (self.justification, "justification"),
            (self.strong_validity, "strong-validity"),
            (self.strong_unanimity, "strong-unanimity"),
            (self.model, "model"),
        ] {
            if on {
                v.push(name);
            }
        }
        v
    }
}

/// Per-run record; one JSON line per run in sweep output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub protocol: String,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    pub ell: u32,
    pub kappa: u16,
    pub total_messages: u64,
    pub total_bits: u64,
    pub steps: u64,
    /// Causal depth at decision, per process (None if undecided or faulty).
    pub decision_depth: Vec<Option<u64>>,
    pub iterations_to_decide: Option<u32>,
    /// Short fingerprint of each process's decision.
    pub decided: Vec<Option<String>>,
    pub all_decided: bool,
    pub timed_out: bool,
    pub corrupted: Vec<u16>,
    pub retracted: u64,
    pub violations: Violations,
    #[serde(default)]
    pub observations: Observations,
}

impl RunMetrics {
    pub fn mean_decision_depth(&self) -> Option<f64> {
        let d: Vec<u64> = self.decision_depth.iter().flatten().copied().collect();
        if d.is_empty() {
            None
        } else {
            Some(d.iter().sum::<u64>() as f64 / d.len() as f64)
        }
    }
}

/// Protocol-level bookkeeping used by the property suites.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    /// Iterations whose leader lies in the first-finisher's DONE set.
    pub good_iterations: Vec<u32>,
    pub first_good_iteration: Option<u32>,
    /// Every correct process quasi-decided the leader's value in the first
    /// good iteration.
    pub good_iteration_quasi_decided: Option<bool>,
    pub max_candidates_per_process: usize,
    pub max_committed_in_good_iteration: usize,
    /// The commit condition held in every good iteration observed.
    pub commit_condition_held: bool,
    /// Size of the DONE set seen by the first finisher.
    pub d_first_size: Option<usize>,
    /// The decided value was proposed by a process that was faulty when it proposed.
    pub adversarial_decision: Option<bool>,
    pub quasi_decisions: usize,
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(sample: &[f64], q: f64) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((q / 100.0) * s.len() as f64).ceil().max(1.0) as usize;
    Some(s[rank.min(s.len()) - 1])
}
