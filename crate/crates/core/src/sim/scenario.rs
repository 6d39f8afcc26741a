//! Scenarios: what happens in a run, before any scheduling.
//!
//! A [`Scenario`] is fully resolved: Byzantine sends carry signed payloads
//! and honest actions carry concrete transactions. [`ScenarioFile`] is the
//! JSON form, where transactions are written as specs whose inputs may name
//! the genesis transaction, another labelled spec, or a raw hash.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Envelope, Message};
use crate::ledger::{Accusation, Issuer, SignedTransaction, Transaction};
use crate::process::{ProcessId, ProcessSet};
use crate::sigscheme::{KeyDirectory, KeyPair, Scheme, TransactionRef};
use crate::trust_model::{Limits, TrustModel, TrustModelError};

use super::attack::synthesize_multispend_attack;
use super::scheduler::SchedulerSpec;

pub const DEFAULT_GENESIS_AMOUNT: u64 = 10;
pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] TrustModelError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Attack(#[from] super::attack::AttackError),
}

type Result<T> = std::result::Result<T, ScenarioError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ScenarioError::Invalid(msg.into()))
}

/// Signature scheme and seed from which every process key is derived.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySpec {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub seed: u64,
}

impl KeySpec {
    pub fn key(&self, p: ProcessId) -> KeyPair {
        KeyPair::derive(self.scheme, self.seed, p)
    }

    pub fn keys(&self, n: usize) -> Vec<KeyPair> {
        (0..n).map(|i| self.key(ProcessId::from(i))).collect()
    }

    pub fn directory(&self, n: usize) -> KeyDirectory {
        KeyDirectory(self.keys(n).iter().map(|k| k.public().clone()).collect())
    }
}

/// A correct process calling `transfer`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HonestAction {
    pub issuer: ProcessId,
    pub tx: Transaction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub model: TrustModel,
    pub faulty: ProcessSet,
    pub genesis: Transaction,
    pub keys: KeySpec,
    /// Sends by faulty processes, all injected before the first delivery.
    pub byzantine: Vec<Envelope>,
    /// Issued in order, each as soon as its inputs are in the issuer's
    /// history.
    pub honest: Vec<HonestAction>,
    pub scheduler: SchedulerSpec,
    pub max_events: u64,
}

/// Genesis paying `amount` to every process.
pub fn uniform_genesis(n: usize, amount: u64) -> Transaction {
    Transaction::genesis((0..n).map(|i| (ProcessId::from(i), amount)))
}

impl Scenario {
    /// A scenario with no faults, no actions, uniform genesis and FIFO order.
    pub fn quiet(model: TrustModel) -> Self {
        let genesis = uniform_genesis(model.n(), DEFAULT_GENESIS_AMOUNT);
        Scenario {
            model,
            faulty: ProcessSet::EMPTY,
            genesis,
            keys: KeySpec::default(),
            byzantine: Vec::new(),
            honest: Vec::new(),
            scheduler: SchedulerSpec::Fifo,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn correct(&self) -> ProcessSet {
        self.model.all().difference(self.faulty)
    }

    /// Checks compliance with the fault model and that Byzantine sends only
    /// sign as faulty processes.
    pub fn validate(&self) -> Result<()> {
        let n = self.model.n();
        let all = self.model.all();
        if !self.model.admits_faulty_set(self.faulty) {
            return invalid(format!(
                "faulty set {} is not allowed by the fault model",
                self.faulty
            ));
        }
        if self.genesis.issuer() != Issuer::Genesis {
            return invalid("genesis transaction must have the genesis issuer");
        }
        if let Some(p) = self.genesis.outputs().keys().find(|p| p.index() >= n) {
            return invalid(format!("genesis pays unknown process {p}"));
        }
        for a in &self.honest {
            if !self.correct().contains(a.issuer) {
                return invalid(format!("honest action by {} which is not correct", a.issuer));
            }
            if a.tx.issuer() != Issuer::Process(a.issuer) {
                return invalid(format!("honest action by {} issues another process's transaction", a.issuer));
            }
        }
        let dir = self.keys.directory(n);
        let forged = |st: &SignedTransaction| match st.tx.issuer() {
            Issuer::Process(s) => !self.faulty.contains(s) && st.verify(&dir),
            Issuer::Genesis => false,
        };
        for (i, env) in self.byzantine.iter().enumerate() {
            if !self.faulty.contains(env.sender) {
                return invalid(format!("byzantine send #{i} comes from correct process {}", env.sender));
            }
            if !env.recipients.is_subset(all) {
                return invalid(format!("byzantine send #{i} addresses unknown processes"));
            }
            let forges = match &env.message {
                Message::Req { request } | Message::Echo { request, .. } => forged(request),
                Message::Acc { accusation } => accusation.proof().iter().any(forged),
            };
            if forges {
                return invalid(format!("byzantine send #{i} carries a correct process's signature"));
            }
        }
        if let SchedulerSpec::Adversarial { phases } = &self.scheduler {
            if phases.iter().any(|ph| !ph.is_subset(all)) {
                return invalid("scheduler phase names unknown processes");
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON scenario files

/// Where a transaction input comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputRef {
    Genesis,
    Label(String),
    Hash(TransactionRef),
}

impl Serialize for InputRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InputRef::Genesis => s.serialize_str("genesis"),
            InputRef::Label(l) => s.serialize_str(&format!("@{l}")),
            InputRef::Hash(h) => s.serialize_str(&h.to_hex()),
        }
    }
}

impl<'de> Deserialize<'de> for InputRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "genesis" {
            Ok(InputRef::Genesis)
        } else if let Some(label) = s.strip_prefix('@') {
            Ok(InputRef::Label(label.to_string()))
        } else {
            TransactionRef::from_hex(&s)
                .map(InputRef::Hash)
                .map_err(|e| serde::de::Error::custom(format!("input {s:?}: {e}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub to: ProcessId,
    pub amount: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxSpec {
    /// Name other specs can use as an input (`"@name"`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub outputs: Vec<OutputSpec>,
    pub inputs: Vec<InputRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuedSpec {
    pub issuer: ProcessId,
    pub tx: TxSpec,
}

/// Payload of one Byzantine send. Requests are signed by their issuer's
/// key, which must belong to a faulty process.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ByzantinePayload {
    /// Request issued by the sender itself.
    Req(TxSpec),
    Echo(IssuedSpec),
    Acc {
        accused: ProcessSet,
        proof: Vec<IssuedSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByzantineSendSpec {
    pub from: ProcessId,
    pub to: ProcessSet,
    #[serde(flatten)]
    pub payload: ByzantinePayload,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ByzantineSpec {
    Sends(Vec<ByzantineSendSpec>),
    /// `"synthesized-multispend"`
    Tag(String),
}

impl Default for ByzantineSpec {
    fn default() -> Self {
        ByzantineSpec::Sends(Vec::new())
    }
}

pub const SYNTHESIZED_MULTISPEND: &str = "synthesized-multispend";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<TrustModel>,
    /// Path of a trust model file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faulty: Option<ProcessSet>,
    /// Per-process genesis amounts; defaults to 10 each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genesis: Option<Vec<u64>>,
    #[serde(default)]
    pub keys: KeySpec,
    #[serde(default)]
    pub byzantine: ByzantineSpec,
    #[serde(default)]
    pub honest: Vec<IssuedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_events: Option<u64>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ScenarioFile = serde_json::from_str(&text)?;
        file.resolve(path.parent())
    }

    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Scenario> {
        let model = match (&self.model, &self.model_file) {
            (Some(m), None) => m.clone(),
            (None, Some(f)) => {
                let path = base_dir.map_or_else(|| Path::new(f).to_path_buf(), |d| d.join(f));
                let text = std::fs::read_to_string(&path).map_err(|source| ScenarioError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                serde_json::from_str(&text)?
            }
            _ => return invalid("exactly one of `model` and `model_file` is required"),
        };
        let n = model.n();
        let genesis = match &self.genesis {
            None => uniform_genesis(n, DEFAULT_GENESIS_AMOUNT),
            Some(amounts) if amounts.len() == n => {
                Transaction::genesis(amounts.iter().enumerate().map(|(i, a)| (ProcessId::from(i), *a)))
            }
            Some(amounts) => {
                return invalid(format!("genesis lists {} amounts for {n} processes", amounts.len()))
            }
        };
        let max_events = self.max_events.unwrap_or(DEFAULT_MAX_EVENTS);

        let mut resolver = Resolver::new(genesis.clone());
        let mut specs: Vec<(ProcessId, &TxSpec)> = self.honest.iter().map(|a| (a.issuer, &a.tx)).collect();
        if let ByzantineSpec::Sends(sends) = &self.byzantine {
            for s in sends {
                match &s.payload {
                    ByzantinePayload::Req(tx) => specs.push((s.from, tx)),
                    ByzantinePayload::Echo(i) => specs.push((i.issuer, &i.tx)),
                    ByzantinePayload::Acc { proof, .. } => {
                        specs.extend(proof.iter().map(|i| (i.issuer, &i.tx)))
                    }
                }
            }
        }
        resolver.register(&specs)?;

        let honest = self
            .honest
            .iter()
            .map(|a| {
                Ok(HonestAction {
                    issuer: a.issuer,
                    tx: resolver.resolve(a.issuer, &a.tx)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let scenario = match &self.byzantine {
            ByzantineSpec::Tag(tag) if tag == SYNTHESIZED_MULTISPEND => {
                if self.faulty.is_some() || self.scheduler.is_some() {
                    return invalid("a synthesized attack chooses its own `faulty` and `scheduler`");
                }
                let attack = synthesize_multispend_attack(&model, self.keys, &Limits::default())?;
                let mut s = attack.scenario;
                s.genesis = genesis;
                s.honest = honest;
                s.max_events = max_events;
                s
            }
            ByzantineSpec::Tag(tag) => return invalid(format!("unknown byzantine tag {tag:?}")),
            ByzantineSpec::Sends(sends) => {
                let faulty = self.faulty.unwrap_or_default();
                let mut byzantine = Vec::with_capacity(sends.len());
                for s in sends {
                    let mut sign = |issuer: ProcessId, tx: &TxSpec| -> Result<SignedTransaction> {
                        if issuer.index() >= n {
                            return invalid(format!("unknown issuer {issuer}"));
                        }
                        Ok(resolver.resolve(issuer, tx)?.sign(&self.keys.key(issuer)))
                    };
                    if s.from.index() >= n {
                        return invalid(format!("unknown sender {}", s.from));
                    }
                    let message = match &s.payload {
                        ByzantinePayload::Req(tx) => Message::Req {
                            request: sign(s.from, tx)?,
                        },
                        ByzantinePayload::Echo(i) => {
                            let request = sign(i.issuer, &i.tx)?;
                            let echo_signature = self.keys.key(s.from).sign(&request.tx.encode());
                            Message::Echo {
                                request,
                                echo_signature,
                            }
                        }
                        ByzantinePayload::Acc { accused, proof } => Message::Acc {
                            accusation: Accusation::new(
                                *accused,
                                proof
                                    .iter()
                                    .map(|i| sign(i.issuer, &i.tx))
                                    .collect::<Result<Vec<_>>>()?,
                            ),
                        },
                    };
                    byzantine.push(Envelope {
                        sender: s.from,
                        recipients: s.to,
                        message,
                    });
                }
                Scenario {
                    model,
                    faulty,
                    genesis,
                    keys: self.keys,
                    byzantine,
                    honest,
                    scheduler: self.scheduler.clone().unwrap_or_default(),
                    max_events,
                }
            }
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Turns transaction specs into transactions, following labels.
struct Resolver<'a> {
    genesis: Transaction,
    labelled: BTreeMap<String, (ProcessId, &'a TxSpec)>,
    done: BTreeMap<String, TransactionRef>,
}

impl<'a> Resolver<'a> {
    fn new(genesis: Transaction) -> Self {
        Resolver {
            genesis,
            labelled: BTreeMap::new(),
            done: BTreeMap::new(),
        }
    }

    fn register(&mut self, specs: &[(ProcessId, &'a TxSpec)]) -> Result<()> {
        for (issuer, spec) in specs {
            if let Some(label) = &spec.label {
                if let Some((other_issuer, other)) = self.labelled.get(label) {
                    if other_issuer != issuer || *other != *spec {
                        return invalid(format!("label {label:?} is defined twice"));
                    }
                }
                self.labelled.insert(label.clone(), (*issuer, *spec));
            }
        }
        let labels: Vec<String> = self.labelled.keys().cloned().collect();
        for label in labels {
            self.label_ref(&label, &mut Vec::new())?;
        }
        Ok(())
    }

    fn label_ref(&mut self, label: &str, stack: &mut Vec<String>) -> Result<TransactionRef> {
        if let Some(r) = self.done.get(label) {
            return Ok(*r);
        }
        if stack.iter().any(|l| l == label) {
            return invalid(format!("label cycle through {label:?}"));
        }
        let Some(&(issuer, spec)) = self.labelled.get(label) else {
            return invalid(format!("unknown input label {label:?}"));
        };
        stack.push(label.to_string());
        let tx = self.build(issuer, spec, stack)?;
        stack.pop();
        self.done.insert(label.to_string(), tx.id());
        Ok(tx.id())
    }

    fn build(&mut self, issuer: ProcessId, spec: &TxSpec, stack: &mut Vec<String>) -> Result<Transaction> {
        let mut inputs = Vec::with_capacity(spec.inputs.len());
        for i in &spec.inputs {
            inputs.push(match i {
                InputRef::Genesis => self.genesis.id(),
                InputRef::Hash(h) => *h,
                InputRef::Label(l) => self.label_ref(l, stack)?,
            });
        }
        let mut tx = Transaction::new(issuer, spec.outputs.iter().map(|o| (o.to, o.amount)), inputs);
        if let Some(t) = spec.timestamp {
            if t == 0 {
                return invalid("timestamps start at 1");
            }
            tx = tx.with_timestamp(t);
        }
        if let Some(m) = &spec.message {
            tx = tx.with_message(m.as_bytes().to_vec());
        }
        Ok(tx)
    }

    /// After `register`, every label lookup hits the cache.
    fn resolve(&mut self, issuer: ProcessId, spec: &TxSpec) -> Result<Transaction> {
        self.build(issuer, spec, &mut Vec::new())
    }
}
