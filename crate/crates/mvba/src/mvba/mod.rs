//! The Reducer and Reducer++ MVBA protocols.
//!
//! Both share one automaton, [`MvbaProcess`]: erasure-coded dissemination,
//! then iterations of leader election, candidate filtering and
//! per-candidate agreement on a reconstructed value. Reducer runs strong MBA
//! on digests before reconstruction; Reducer++ instead picks a candidate by
//! salted hash and tries many times per iteration.

mod msg;
mod params;
mod process;
mod validity;

pub use msg::{value_id, MvbaMsg, SymbolRecord};
pub use params::{Epsilon, ParamError, Params, ProtocolKind};
pub use process::{pick_quasi, proposal_digest, MvbaEvent, MvbaProcess};
pub use validity::Validity;
