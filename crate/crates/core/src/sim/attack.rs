//! Builds the run that makes a trust model spend one input as many times as
//! its inconsistency number allows.
//!
//! Take a witness `(F, S, C)` with `F` nonempty, pick the source `r = min F`
//! and for each target `p_i ∈ C` a transaction `tx_i` spending `r`'s genesis
//! output. `r` requests `tx_i` from `S(p_i)` only, the faulty members of
//! `S(p_i)` echo it to `S(p_i)`, and the scheduler runs one isolated phase
//! `{r} ∪ S(p_i)` per target before letting everything else through. Since
//! chosen quorums of distinct targets share only faulty processes, no correct
//! process sees two of the requests before every target has accepted its own.

use serde::{Deserialize, Serialize};

use crate::engine::{Envelope, Message};
use crate::ledger::Transaction;
use crate::process::{ProcessId, ProcessSet};
use crate::sigscheme::TransactionRef;
use crate::trust_model::{analyze_faulty_sets, InconsistencyWitness, Limits, TrustModel, TrustModelError};

use super::scenario::{uniform_genesis, KeySpec, Scenario, DEFAULT_GENESIS_AMOUNT, DEFAULT_MAX_EVENTS};
use super::scheduler::SchedulerSpec;

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error("model is not vulnerable: no nonempty faulty set yields two independent processes")]
    NotVulnerable,
    #[error(transparent)]
    Model(#[from] TrustModelError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultispendAttack {
    pub scenario: Scenario,
    pub witness: InconsistencyWitness,
    pub source: ProcessId,
    pub targets: Vec<ProcessId>,
    /// `transactions[i]` is meant for `targets[i]`.
    pub transactions: Vec<TransactionRef>,
}

impl MultispendAttack {
    pub fn expected_spending(&self) -> usize {
        self.targets.len()
    }
}

/// Message carried by the `i`-th conflicting spend.
pub fn attack_message(i: usize) -> Vec<u8> {
    format!("m{}", i + 1).into_bytes()
}

pub fn synthesize_multispend_attack(
    model: &TrustModel,
    keys: KeySpec,
    limits: &Limits,
) -> Result<MultispendAttack, AttackError> {
    // Equivocation needs a faulty source, so F = ∅ is useless here.
    let candidates: Vec<ProcessSet> = model.faulty_sets().into_iter().filter(|f| !f.is_empty()).collect();
    if candidates.is_empty() {
        return Err(AttackError::NotVulnerable);
    }
    let witness = analyze_faulty_sets(model, limits, &candidates)?;
    if witness.size() < 2 {
        return Err(AttackError::NotVulnerable);
    }
    let faulty = witness.faulty;
    let source = faulty.first().expect("faulty set is nonempty");
    let genesis = uniform_genesis(model.n(), DEFAULT_GENESIS_AMOUNT);
    let source_key = keys.key(source);

    let targets: Vec<ProcessId> = witness.independent_set.iter().collect();
    let mut byzantine = Vec::new();
    let mut phases = Vec::new();
    let mut transactions = Vec::new();
    for (i, &p) in targets.iter().enumerate() {
        let quorum = witness.quorum_map.get(p).members();
        let tx = Transaction::new(source, [(p, DEFAULT_GENESIS_AMOUNT)], [genesis.id()])
            .with_message(attack_message(i));
        let request = tx.sign(&source_key);
        byzantine.push(Envelope {
            sender: source,
            recipients: quorum,
            message: Message::Req {
                request: request.clone(),
            },
        });
        for f in quorum.intersection(faulty).iter() {
            byzantine.push(Envelope {
                sender: f,
                recipients: quorum,
                message: Message::Echo {
                    request: request.clone(),
                    echo_signature: keys.key(f).sign(&tx.encode()),
                },
            });
        }
        phases.push(quorum.with(source));
        transactions.push(tx.id());
    }

    let scenario = Scenario {
        model: model.clone(),
        faulty,
        genesis,
        keys,
        byzantine,
        honest: Vec::new(),
        scheduler: SchedulerSpec::Adversarial { phases },
        max_events: DEFAULT_MAX_EVENTS,
    };
    Ok(MultispendAttack {
        scenario,
        witness,
        source,
        targets,
        transactions,
    })
}
