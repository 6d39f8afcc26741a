//! Deterministic simulation of protocol runs.

mod attack;
mod kcb;
mod properties;
mod run;
mod scenario;
mod scheduler;

pub use attack::{attack_message, synthesize_multispend_attack, AttackError, MultispendAttack};
pub use kcb::{kcb_broadcast, kcb_collect, KcbOutcome};
pub use properties::{evaluate_properties, PropertyReport, Verdict};
pub use run::{run, Outcome, RunOptions, RunReport, SpendingPoint, TraceEvent};
pub use scenario::{
    uniform_genesis, ByzantinePayload, ByzantineSendSpec, ByzantineSpec, HonestAction, InputRef,
    IssuedSpec, KeySpec, OutputSpec, Scenario, ScenarioError, ScenarioFile, TxSpec,
    DEFAULT_GENESIS_AMOUNT, DEFAULT_MAX_EVENTS, SYNTHESIZED_MULTISPEND,
};
pub use scheduler::SchedulerSpec;
