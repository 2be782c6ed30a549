use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Validity;
use crate::codec::{default_digest, Digest, Kappa};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ParamError {
    ParamError::Invalid(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Reducer,
    #[serde(rename = "reducerpp")]
    ReducerPp,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Reducer => "reducer",
            ProtocolKind::ReducerPp => "reducerpp",
        }
    }
}

/// A positive rational `num / den`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Epsilon {
    num: u32,
    den: u32,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Epsilon {
    pub const ONE: Epsilon = Epsilon { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Epsilon, ParamError> {
        if num == 0 || den == 0 {
            return Err(invalid("epsilon must be a positive rational"));
        }
        if num > den {
            return Err(invalid("epsilon must not exceed 1"));
        }
        let g = gcd(num, den);
        Ok(Epsilon { num: num / g, den: den / g })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    /// `εt`, if it is an integer.
    pub fn times(self, t: usize) -> Option<usize> {
        let p = self.num as usize * t;
        (p % self.den as usize == 0).then(|| p / self.den as usize)
    }

    /// `⌈12/ε²⌉ + ⌈7/ε⌉`.
    pub fn trials(self) -> usize {
        let (n, d) = (self.num as u64, self.den as u64);
        ((12 * d * d).div_ceil(n * n) + (7 * d).div_ceil(n)) as usize
    }

    /// `⌈3/ε⌉`.
    pub fn candidate_cap(self) -> usize {
        (3 * self.den).div_ceil(self.num) as usize
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Epsilon {
    type Err = ParamError;

    /// Accepts `"1"`, `"1/2"` or a terminating decimal such as `"0.25"`.
    fn from_str(s: &str) -> Result<Epsilon, ParamError> {
        let s = s.trim();
        let bad = || invalid(format!("cannot parse epsilon {s:?}"));
        if let Some((a, b)) = s.split_once('/') {
            return Epsilon::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 6 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10u32.pow(frac.len() as u32);
            let int: u32 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let frac: u32 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            return Epsilon::new(int * den + frac, den);
        }
        Epsilon::new(s.parse().map_err(|_| bad())?, 1)
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Epsilon, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Float(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => Epsilon::new(i, 1),
            Raw::Float(f) => format!("{f}").parse(),
            Raw::Str(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Fully derived protocol constants shared by all processes of one run.
#[derive(Clone, Debug)]
pub struct Params {
    pub kind: ProtocolKind,
    pub n: usize,
    pub t: usize,
    pub epsilon: Epsilon,
    pub ell: u32,
    pub kappa: Kappa,
    pub validity: Validity,
    /// Polynomial degree of the dissemination encoding.
    pub degree: usize,
    /// Sub-iterations per iteration.
    pub trials: usize,
    /// Range of the Index coin.
    pub index_range: u64,
    /// Largest number of candidates a correct process can hold.
    pub candidate_cap: usize,
    pub default_digest: Digest,
    pub max_iterations: u32,
}

impl Params {
    pub fn reducer(t: usize, ell: u32, kappa: Kappa, validity: Validity) -> Result<Params, ParamError> {
        Params::build(ProtocolKind::Reducer, 4 * t + 1, t, Epsilon::ONE, ell, kappa, validity)
    }

    pub fn reducer_pp(
        t: usize,
        epsilon: Epsilon,
        ell: u32,
        kappa: Kappa,
        validity: Validity,
    ) -> Result<Params, ParamError> {
        let et = epsilon
            .times(t)
            .ok_or_else(|| invalid(format!("epsilon * t = {epsilon} * {t} is not an integer")))?;
        Params::build(ProtocolKind::ReducerPp, 3 * t + et + 1, t, epsilon, ell, kappa, validity)
    }

    /// Check an explicitly given `n` against the protocol's population rule.
    pub fn with_n(
        kind: ProtocolKind,
        n: usize,
        t: usize,
        epsilon: Epsilon,
        ell: u32,
        kappa: Kappa,
        validity: Validity,
    ) -> Result<Params, ParamError> {
        let p = match kind {
            ProtocolKind::Reducer => Params::reducer(t, ell, kappa, validity)?,
            ProtocolKind::ReducerPp => Params::reducer_pp(t, epsilon, ell, kappa, validity)?,
        };
        if p.n != n {
            return Err(invalid(match kind {
                ProtocolKind::Reducer => format!("reducer needs n = 4t + 1 = {}, got n = {n}", p.n),
                ProtocolKind::ReducerPp => format!("reducerpp needs n = (3 + ε)t + 1 = {}, got n = {n}", p.n),
            }));
        }
        Ok(p)
    }

    fn build(
        kind: ProtocolKind,
        n: usize,
        t: usize,
        epsilon: Epsilon,
        ell: u32,
        kappa: Kappa,
        validity: Validity,
    ) -> Result<Params, ParamError> {
        if t == 0 {
            return Err(invalid("t must be at least 1"));
        }
        if ell == 0 {
            return Err(invalid("value length must be positive"));
        }
        let log_n = usize::BITS - (n - 1).leading_zeros();
        if kappa.bits() as u32 <= log_n {
            return Err(invalid(format!("kappa = {} must exceed log n", kappa.bits())));
        }
        validity.check_length(ell)?;
        let (degree, trials, index_range, candidate_cap) = match kind {
            ProtocolKind::Reducer => (t, 3, 3, 2),
            ProtocolKind::ReducerPp => {
                let et = epsilon.times(t).expect("checked by caller");
                (et, epsilon.trials(), epsilon.trials() as u64, epsilon.candidate_cap())
            }
        };
        let default_digest = default_digest(kappa, ell, degree, n).map_err(|e| invalid(e.to_string()))?;
        Ok(Params {
            kind,
            n,
            t,
            epsilon,
            ell,
            kappa,
            validity,
            degree,
            trials,
            index_range,
            candidate_cap,
            default_digest,
            max_iterations: 1000,
        })
    }

    pub fn quorum(&self) -> usize {
        self.n - self.t
    }

    /// STORED count needed for candidacy: `n - 3t`.
    pub fn candidate_threshold(&self) -> usize {
        self.n - 3 * self.t
    }

    /// SUGGEST count needed to commit: `n - 2t`.
    pub fn commit_threshold(&self) -> usize {
        self.n - 2 * self.t
    }
}
