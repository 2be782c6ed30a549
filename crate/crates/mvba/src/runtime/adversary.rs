use thiserror::Error;

use super::{ProcessId, SchedulePolicy};
use crate::codec::Digest;
use crate::coin::CoinTag;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("script corrupts more than t = {t} processes")]
    TooManyCorruptions { t: usize },
    #[error("unknown process {0}")]
    UnknownProcess(ProcessId),
    #[error("unfair schedule: {0}")]
    Unfair(String),
    #[error("invalid script: {0}")]
    Invalid(String),
}

/// Outgoing-message filter applied to every corrupted process.
#[derive(Clone, Debug, PartialEq)]
pub enum Behavior {
    /// Send nothing.
    Crash,
    /// Drop every message whose kind is listed.
    SilentOn(Vec<String>),
    /// Replace every carried digest by `digests[receiver mod len]`, for the
    /// listed kinds (all kinds if empty).
    Equivocate { digests: Vec<Digest>, kinds: Vec<String> },
    /// Corrupt one field of a message with the given probability.
    Mutate { probability: f64 },
    /// With the given probability, also resend an earlier message.
    Replay { probability: f64 },
}

/// Which in-flight envelopes of a freshly corrupted process to delete.
#[derive(Clone, Debug, PartialEq)]
pub enum Retraction {
    None,
    All,
    Fraction(f64),
    Kinds(Vec<String>),
}

/// Adaptive corruption: once `tag` is revealed, corrupt the process it names.
#[derive(Clone, Debug, PartialEq)]
pub struct Trigger {
    pub tag: CoinTag,
    pub retract: Retraction,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct AdversaryScript {
    pub static_corrupt: Vec<ProcessId>,
    pub triggers: Vec<Trigger>,
    pub behaviors: Vec<Behavior>,
    pub schedule: SchedulePolicy,
    /// Harness self-test: try to read trigger coins before they are revealed.
    pub peek_early: bool,
}

impl AdversaryScript {
    pub fn fault_free() -> AdversaryScript {
        AdversaryScript::default()
    }

    pub fn validate(&self, n: usize, t: usize) -> Result<(), ScriptError> {
        let mut seen = Vec::new();
        for &p in &self.static_corrupt {
            if p.0 == 0 || p.idx() >= n {
                return Err(ScriptError::UnknownProcess(p));
            }
            if !seen.contains(&p) {
                seen.push(p);
            }
        }
        if seen.len() > t {
            return Err(ScriptError::TooManyCorruptions { t });
        }
        for b in &self.behaviors {
            match b {
                Behavior::Mutate { probability } | Behavior::Replay { probability }
                    if !(0.0..=1.0).contains(probability) =>
                {
                    return Err(ScriptError::Invalid("probability outside [0, 1]".into()))
                }
                Behavior::Equivocate { digests, .. } if digests.is_empty() => {
                    return Err(ScriptError::Invalid("equivocation needs at least one digest".into()))
                }
                _ => {}
            }
        }
        for tr in &self.triggers {
            if let Retraction::Fraction(f) = tr.retract {
                if !(0.0..=1.0).contains(&f) {
                    return Err(ScriptError::Invalid("retraction fraction outside [0, 1]".into()));
                }
            }
        }
        self.schedule.validate(n, &seen).map_err(ScriptError::Unfair)
    }
}
