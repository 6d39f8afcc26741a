//! k-spending asset transfer over heterogeneous (per-process) trust.
//!
//! * [`trust_model`]: quorum systems, fault models, trust graphs and the
//!   inconsistency number that bounds how often an input can be spent.
//! * [`ledger`]: transactions, histories, well-formedness and spending
//!   measures.
//! * [`sigscheme`]: signatures and content hashes.
//! * [`engine`]: the per-process protocol state machine.
//! * [`sim`]: scheduled runs, attack synthesis and property checking.

pub mod engine;
pub mod ledger;
pub mod process;
pub mod sim;
pub mod sigscheme;
pub mod trust_model;

pub use process::{ProcessId, ProcessSet};
