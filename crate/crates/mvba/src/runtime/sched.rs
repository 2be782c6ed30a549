use serde::{Deserialize, Serialize};

use super::ProcessId;

/// Default age cap, in scheduler picks.
pub const DEFAULT_AGE_CAP: u64 = 20_000;

/// Reweights pending envelopes that match every given filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityRule {
    #[serde(default)]
    pub from: Option<Vec<ProcessId>>,
    #[serde(default)]
    pub to: Option<Vec<ProcessId>>,
    #[serde(default)]
    pub kinds: Option<Vec<String>>,
    pub weight: f64,
}

impl PriorityRule {
    pub fn matches(&self, from: ProcessId, to: ProcessId, kind: &str) -> bool {
        self.from.as_ref().is_none_or(|s| s.contains(&from))
            && self.to.as_ref().is_none_or(|s| s.contains(&to))
            && self.kinds.as_ref().is_none_or(|s| s.iter().any(|k| k == kind))
    }
}

/// Random scheduling with optional reweighting. Any envelope that has been
/// pending for more than `age_cap` picks is delivered next, oldest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulePolicy {
    #[serde(default = "default_age_cap")]
    pub age_cap: Option<u64>,
    #[serde(default)]
    pub rules: Vec<PriorityRule>,
}

fn default_age_cap() -> Option<u64> {
    Some(DEFAULT_AGE_CAP)
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        SchedulePolicy { age_cap: default_age_cap(), rules: Vec::new() }
    }
}

impl SchedulePolicy {
    /// First matching rule wins; unmatched envelopes weigh 1.
    pub fn weight(&self, from: ProcessId, to: ProcessId, kind: &str) -> f64 {
        self.rules
            .iter()
            .find(|r| r.matches(from, to, kind))
            .map_or(1.0, |r| r.weight)
    }

    /// Reject policies that could starve a link between correct processes.
    pub fn validate(&self, n: usize, faulty: &[ProcessId]) -> Result<(), String> {
        if self.age_cap == Some(0) {
            return Err("age cap must be positive".into());
        }
        for r in &self.rules {
            if !(r.weight >= 0.0 && r.weight.is_finite()) {
                return Err(format!("rule weight must be finite and non-negative, got {}", r.weight));
            }
        }
        if self.age_cap.is_some() {
            return Ok(());
        }
        for (i, r) in self.rules.iter().enumerate() {
            if r.weight > 0.0 {
                continue;
            }
            for from in ProcessId::all(n).filter(|p| !faulty.contains(p)) {
                for to in ProcessId::all(n).filter(|p| !faulty.contains(p)) {
                    let shadowed = self.rules[..i].iter().any(|e| {
                        e.weight > 0.0 && e.from.as_ref().is_none_or(|s| s.contains(&from))
                            && e.to.as_ref().is_none_or(|s| s.contains(&to))
                            && e.kinds.is_none()
                    });
                    if !shadowed && r.from.as_ref().is_none_or(|s| s.contains(&from))
                        && r.to.as_ref().is_none_or(|s| s.contains(&to))
                    {
                        return Err(format!(
                            "rule {i} starves correct link {from} -> {to} and no age cap is set"
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn starve(from: u16, to: u16) -> PriorityRule {
        PriorityRule {
            from: Some(vec![ProcessId(from)]),
            to: Some(vec![ProcessId(to)]),
            kinds: None,
            weight: 0.0,
        }
    }

    #[test]
    fn starving_correct_link_without_cap_is_unfair() {
        let p = SchedulePolicy { age_cap: None, rules: vec![starve(1, 2)] };
        assert!(p.validate(4, &[]).is_err());
    }

    #[test]
    fn starving_with_cap_is_fair() {
        let p = SchedulePolicy { age_cap: Some(100), rules: vec![starve(1, 2)] };
        assert!(p.validate(4, &[]).is_ok());
    }

    #[test]
    fn starving_faulty_sender_is_fair() {
        let p = SchedulePolicy { age_cap: None, rules: vec![starve(4, 2)] };
        assert!(p.validate(4, &[ProcessId(4)]).is_ok());
    }

    #[test]
    fn negative_weight_rejected() {
        let mut r = starve(1, 2);
        r.weight = -1.0;
        let p = SchedulePolicy { age_cap: Some(10), rules: vec![r] };
        assert!(p.validate(4, &[]).is_err());
    }

    #[test]
    fn first_rule_wins() {
        let mut a = starve(1, 2);
        a.weight = 5.0;
        let p = SchedulePolicy { age_cap: None, rules: vec![a, starve(1, 2)] };
        assert_eq!(p.weight(ProcessId(1), ProcessId(2), "x"), 5.0);
        assert_eq!(p.weight(ProcessId(2), ProcessId(1), "x"), 1.0);
        assert!(p.validate(4, &[]).is_ok());
    }
}
