//! Per-process state machine of the k-spending asset transfer protocol.
//!
//! A [`ProcessState`] consumes one [`Event`] at a time and returns the
//! messages it wants sent. There are no clocks and no I/O: identical
//! `(state, event)` pairs always produce identical results, which is what
//! lets the simulator replay runs bit for bit.
//!
//! Processing order inside one event: the message handler runs, then the
//! quorum trigger for the touched transaction, then conflict detection for
//! the touched issuer, and finally pending promotion to a fixpoint.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ledger::{
    self, tx_valid, verify_acc, Accusation, History, Issuer, SignedTransaction, Transaction,
};
use crate::process::{ProcessId, ProcessSet};
use crate::sigscheme::{KeyDirectory, KeyPair, Signature, TransactionRef};
use crate::trust_model::Quorum;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("refusing to issue transaction {id:?}: {reason}")]
    InvalidTransaction { id: TransactionRef, reason: String },
}

/// Protocol messages.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Message {
    /// `[REQ, tx, σ_issuer]`
    Req { request: SignedTransaction },
    /// `[ECHO, (tx, σ_issuer), σ_echoer]`
    Echo {
        request: SignedTransaction,
        echo_signature: Signature,
    },
    /// `[ACC, accusation]`
    Acc { accusation: Accusation },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Req { .. } => "REQ",
            Message::Echo { .. } => "ECHO",
            Message::Acc { .. } => "ACC",
        }
    }
}

/// A message together with its sender and intended recipients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub sender: ProcessId,
    pub recipients: ProcessSet,
    pub message: Message,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Transfer(Transaction),
    Deliver { from: ProcessId, message: Message },
}

/// Knobs for deliberately broken protocol variants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineConfig {
    /// Echo every request, ignoring inputs already used by its issuer.
    #[cfg(feature = "mutants")]
    pub skip_used_input_guard: bool,
}

impl EngineConfig {
    /// The mutant that skips the used-input guard, when this build has
    /// test mutants compiled in.
    pub fn without_used_input_guard() -> Option<Self> {
        #[cfg(feature = "mutants")]
        {
            Some(EngineConfig {
                skip_used_input_guard: true,
            })
        }
        #[cfg(not(feature = "mutants"))]
        {
            None
        }
    }

    fn guard_enabled(&self) -> bool {
        #[cfg(feature = "mutants")]
        {
            !self.skip_used_input_guard
        }
        #[cfg(not(feature = "mutants"))]
        {
            true
        }
    }
}

/// What one transition produced.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transition {
    pub outbound: Vec<Envelope>,
    /// Transactions added to the local history, in order.
    pub accepted: Vec<TransactionRef>,
    /// Accusations added to the local accusation history, in order.
    pub accused: Vec<Accusation>,
}

impl Transition {
    fn absorb(&mut self, other: Transition) {
        self.outbound.extend(other.outbound);
        self.accepted.extend(other.accepted);
        self.accused.extend(other.accused);
    }
}

/// One replica's protocol state.
#[derive(Clone, Debug)]
pub struct ProcessState {
    me: ProcessId,
    everyone: ProcessSet,
    quorums: Vec<Quorum>,
    keys: KeyPair,
    directory: KeyDirectory,
    config: EngineConfig,

    echoes: BTreeMap<ProcessId, BTreeSet<TransactionRef>>,
    used_inputs: BTreeMap<ProcessId, BTreeSet<TransactionRef>>,
    pending: BTreeSet<TransactionRef>,
    history: History,
    signed_requests: BTreeMap<ProcessId, BTreeSet<SignedTransaction>>,
    accusations: BTreeSet<Accusation>,
    /// Every transaction body seen in a verified request or echo.
    known: BTreeMap<TransactionRef, Transaction>,
    issued: Vec<TransactionRef>,
}

impl ProcessState {
    pub fn new(
        me: ProcessId,
        n: usize,
        quorums: Vec<Quorum>,
        keys: KeyPair,
        directory: KeyDirectory,
        genesis: Transaction,
    ) -> Self {
        ProcessState {
            me,
            everyone: ProcessSet::full(n),
            quorums,
            keys,
            directory,
            config: EngineConfig::default(),
            echoes: BTreeMap::new(),
            used_inputs: BTreeMap::new(),
            pending: BTreeSet::new(),
            history: History::new(genesis),
            signed_requests: BTreeMap::new(),
            accusations: BTreeSet::new(),
            known: BTreeMap::new(),
            issued: Vec::new(),
        }
    }

    pub fn with_config(mut self, config: EngineConfig) -> Self {
        self.config = config;
        self
    }

    pub fn id(&self) -> ProcessId {
        self.me
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn accusations(&self) -> &BTreeSet<Accusation> {
        &self.accusations
    }

    pub fn pending(&self) -> &BTreeSet<TransactionRef> {
        &self.pending
    }

    pub fn signed_requests(&self, issuer: ProcessId) -> impl Iterator<Item = &SignedTransaction> {
        self.signed_requests.get(&issuer).into_iter().flatten()
    }

    pub fn used_inputs(&self, issuer: ProcessId) -> impl Iterator<Item = &TransactionRef> {
        self.used_inputs.get(&issuer).into_iter().flatten()
    }

    pub fn echoed_by(&self, p: ProcessId) -> impl Iterator<Item = &TransactionRef> {
        self.echoes.get(&p).into_iter().flatten()
    }

    pub fn issued(&self) -> &[TransactionRef] {
        &self.issued
    }

    pub fn step(&mut self, event: Event) -> Result<Transition, EngineError> {
        let out = match event {
            Event::Transfer(tx) => self.transfer(tx)?,
            Event::Deliver { from, message } => match message {
                Message::Req { request } => self.handle_req(from, request),
                Message::Echo {
                    request,
                    echo_signature,
                } => self.handle_echo(from, request, echo_signature),
                Message::Acc { accusation } => self.handle_acc(accusation),
            },
        };
        debug_assert!(
            ledger::is_well_formed(&self.history, false).is_ok(),
            "{} history became malformed",
            self.me
        );
        Ok(out)
    }

    fn broadcast(&self, message: Message) -> Envelope {
        Envelope {
            sender: self.me,
            recipients: self.everyone,
            message,
        }
    }

    /// Signs `tx` and sends it as a request to every process.
    ///
    /// Refuses anything a correct issuer would not send: a transaction by
    /// someone else, one whose inputs are not all in the local history, an
    /// invalid one, or one sharing an input with something already issued or
    /// accepted.
    pub fn transfer(&mut self, tx: Transaction) -> Result<Transition, EngineError> {
        let refuse = |reason: &str| EngineError::InvalidTransaction {
            id: tx.id(),
            reason: reason.to_string(),
        };
        if tx.issuer() != Issuer::Process(self.me) {
            return Err(refuse("issuer is not this process"));
        }
        if let Some(missing) = tx.inputs().iter().find(|r| !self.history.contains(r)) {
            return Err(refuse(&format!("input {missing:?} is not in the local history")));
        }
        if !tx_valid(&tx, &self.history).unwrap_or(false) {
            return Err(refuse("transaction is not valid"));
        }
        let clashes = |other: &Transaction| {
            other.issuer() == tx.issuer() && other.id() != tx.id() && !other.inputs().is_disjoint(tx.inputs())
        };
        if self.history.iter().any(clashes)
            || self.issued.iter().any(|r| self.known.get(r).is_some_and(clashes))
        {
            return Err(refuse("conflicts with an earlier transaction"));
        }
        if !self.issued.contains(&tx.id()) {
            self.issued.push(tx.id());
        }
        self.known.insert(tx.id(), tx.clone());
        let request = tx.sign(&self.keys);
        Ok(Transition {
            outbound: vec![self.broadcast(Message::Req { request })],
            ..Transition::default()
        })
    }

    /// Issuer signature check; the genesis transaction is never signed.
    fn issuer_signed(&self, request: &SignedTransaction) -> Option<ProcessId> {
        let issuer = request.tx.issuer().process()?;
        request.verify(&self.directory).then_some(issuer)
    }

    /// Echo `request` unless its issuer already used one of its inputs.
    fn maybe_echo(&mut self, issuer: ProcessId, request: &SignedTransaction) -> Option<Envelope> {
        let used = self.used_inputs.entry(issuer).or_default();
        if self.config.guard_enabled() && !used.is_disjoint(request.tx.inputs()) {
            return None;
        }
        used.extend(request.tx.inputs().iter().copied());
        let echo_signature = self.keys.sign(&request.tx.encode());
        // own echo counts toward own quorums
        self.echoes
            .entry(self.me)
            .or_default()
            .insert(request.tx.id());
        Some(self.broadcast(Message::Echo {
            request: request.clone(),
            echo_signature,
        }))
    }

    fn store_request(&mut self, issuer: ProcessId, request: &SignedTransaction) -> bool {
        self.known
            .entry(request.tx.id())
            .or_insert_with(|| request.tx.clone());
        self.signed_requests
            .entry(issuer)
            .or_default()
            .insert(request.clone())
    }

    pub fn handle_req(&mut self, from: ProcessId, request: SignedTransaction) -> Transition {
        let Some(issuer) = self.issuer_signed(&request) else {
            return Transition::default();
        };
        // a request must come from its issuer
        if issuer != from {
            return Transition::default();
        }
        if !self.store_request(issuer, &request) {
            return Transition::default();
        }
        let mut out = Transition::default();
        out.outbound.extend(self.maybe_echo(issuer, &request));
        out.absorb(self.after_update(issuer, request.tx.id()));
        out
    }

    pub fn handle_echo(
        &mut self,
        from: ProcessId,
        request: SignedTransaction,
        echo_signature: Signature,
    ) -> Transition {
        if !self
            .directory
            .verify(from, &request.tx.encode(), &echo_signature)
        {
            return Transition::default();
        }
        let Some(issuer) = self.issuer_signed(&request) else {
            return Transition::default();
        };
        let id = request.tx.id();
        let fresh_echo = self.echoes.entry(from).or_default().insert(id);
        let fresh_request = self.store_request(issuer, &request);
        if !fresh_echo && !fresh_request {
            return Transition::default();
        }
        let mut out = Transition::default();
        out.outbound.extend(self.maybe_echo(issuer, &request));
        out.absorb(self.after_update(issuer, id));
        out
    }

    pub fn handle_acc(&mut self, accusation: Accusation) -> Transition {
        if self.accusations.contains(&accusation) || !verify_acc(&accusation, &self.directory) {
            return Transition::default();
        }
        self.accusations.insert(accusation.clone());
        Transition {
            outbound: vec![self.broadcast(Message::Acc {
                accusation: accusation.clone(),
            })],
            accused: vec![accusation],
            ..Transition::default()
        }
    }

    fn after_update(&mut self, issuer: ProcessId, tx: TransactionRef) -> Transition {
        if self.quorum_check(&tx) && !self.history.contains(&tx) && !self.pending.contains(&tx) {
            self.pending.insert(tx);
        }
        let mut out = self.detect_conflicts_of(issuer);
        out.accepted = self.promote_pending();
        out
    }

    /// Whether every member of some own quorum has echoed `tx`.
    pub fn quorum_check(&self, tx: &TransactionRef) -> bool {
        self.quorums.iter().any(|q| {
            q.members()
                .iter()
                .all(|p| self.echoes.get(&p).is_some_and(|s| s.contains(tx)))
        })
    }

    /// Completeness, validity and no-conflict against the local history.
    pub fn ready(&self, tx: &Transaction) -> bool {
        let complete = tx.inputs().iter().all(|r| self.history.contains(r));
        complete
            && tx_valid(tx, &self.history).unwrap_or(false)
            && !self.history.iter().any(|h| {
                h.issuer() == tx.issuer() && !h.inputs().is_disjoint(tx.inputs())
            })
    }

    /// Moves ready pending transactions into the history until nothing
    /// changes, smallest hash first. Returns what was accepted.
    pub fn promote_pending(&mut self) -> Vec<TransactionRef> {
        let mut accepted = Vec::new();
        loop {
            let next = self
                .pending
                .iter()
                .find(|r| self.known.get(r).is_some_and(|tx| self.ready(tx)))
                .copied();
            let Some(r) = next else { break };
            self.pending.remove(&r);
            self.history.insert(self.known[&r].clone());
            accepted.push(r);
        }
        accepted
    }

    /// Builds accusations from every pair of stored conflicting requests.
    pub fn detect_conflicts(&mut self) -> Transition {
        let issuers: Vec<ProcessId> = self.signed_requests.keys().copied().collect();
        let mut out = Transition::default();
        for j in issuers {
            out.absorb(self.detect_conflicts_of(j));
        }
        out
    }

    fn detect_conflicts_of(&mut self, issuer: ProcessId) -> Transition {
        let Some(requests) = self.signed_requests.get(&issuer) else {
            return Transition::default();
        };
        let requests: Vec<&SignedTransaction> = requests.iter().collect();
        let mut fresh = Vec::new();
        for i in 0..requests.len() {
            for j in (i + 1)..requests.len() {
                if ledger::conflicts(&requests[i].tx, &requests[j].tx) {
                    let acc = Accusation::new(
                        ProcessSet::singleton(issuer),
                        [requests[i].clone(), requests[j].clone()],
                    );
                    if !self.accusations.contains(&acc) {
                        fresh.push(acc);
                    }
                }
            }
        }
        let mut out = Transition::default();
        for acc in fresh {
            if self.accusations.insert(acc.clone()) {
                out.outbound.push(self.broadcast(Message::Acc {
                    accusation: acc.clone(),
                }));
                out.accused.push(acc);
            }
        }
        out
    }

    /// JSON view of the state for reports; never includes key material.
    pub fn dump(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump<'a> {
            process: ProcessId,
            quorums: &'a [Quorum],
            public_key: String,
            echoes: &'a BTreeMap<ProcessId, BTreeSet<TransactionRef>>,
            used_inputs: &'a BTreeMap<ProcessId, BTreeSet<TransactionRef>>,
            pending: &'a BTreeSet<TransactionRef>,
            history: Vec<TransactionRef>,
            signed_requests: BTreeMap<ProcessId, Vec<TransactionRef>>,
            accusations: &'a BTreeSet<Accusation>,
        }
        serde_json::to_value(Dump {
            process: self.me,
            quorums: &self.quorums,
            public_key: self.keys.public().to_hex(),
            echoes: &self.echoes,
            used_inputs: &self.used_inputs,
            pending: &self.pending,
            history: self.history.refs().copied().collect(),
            signed_requests: self
                .signed_requests
                .iter()
                .map(|(p, s)| (*p, s.iter().map(|st| st.tx.id()).collect()))
                .collect(),
            accusations: &self.accusations,
        })
        .expect("state dump serializes")
    }
}
