//! Reducer and Reducer++: asynchronous multi-valued validated Byzantine
//! agreement with erasure-coded dissemination, run inside a deterministic
//! adversarial network simulator.
//!
//! Layering, bottom up:
//!
//! * [`codec`]: Reed–Solomon coding, Merkle accumulators, hashes.
//! * [`coin`]: idealized common coins with reveal-after-`t + 1` semantics.
//! * [`runtime`]: the event loop, scheduler, adversary and metrics.
//! * [`agreement`]: graded consensus, binary agreement and MBA.
//! * [`crb`] and [`smba`]: collective reliable broadcast and strong MBA.
//! * [`mvba`]: the two MVBA protocols.
//! * [`harness`]: one full run with ground-truth safety checks.
//! * [`standalone`]: drives a single sub-protocol for property tests.
//! * [`scenario`]: scenario files, run orchestration and reports.

pub mod codec;
pub mod agreement;
pub mod coin;
pub mod crb;
pub mod harness;
pub mod mvba;
pub mod runtime;
pub mod scenario;
pub mod smba;
pub mod standalone;
pub mod wire;

pub use codec::{Digest, Kappa, RsSymbol, Value, Witness};
pub use runtime::{ProcessId, RunMetrics, Violations};
