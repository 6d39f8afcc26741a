use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{EngineConfig, Envelope, Event, ProcessState, Transition};
use crate::ledger::{
    self, cover_number, Accusation, Cover, History, HistoryCollection, Issuer, Transaction,
    DEFAULT_MAX_COVER_HISTORIES,
};
use crate::process::{ProcessId, ProcessSet};
use crate::sigscheme::{KeyDirectory, TransactionRef};
use crate::trust_model::{inconsistency_number, is_live, Limits};

use super::kcb::KcbOutcome;
use super::properties::{evaluate_properties, PropertyReport};
use super::scenario::{Scenario, ScenarioError};
use super::scheduler::{InFlight, Scheduler};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub engine: EngineConfig,
    pub limits: Limits,
    /// Largest collection for which the exact cover number is computed.
    pub max_cover_histories: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            engine: EngineConfig::default(),
            limits: Limits::default(),
            max_cover_histories: DEFAULT_MAX_COVER_HISTORIES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// No message in flight and no honest action left that could be issued.
    Quiescent,
    /// The event budget ran out with messages still queued.
    Nontermination,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// A Byzantine send placed in the network before the run starts.
    Inject {
        from: ProcessId,
        to: ProcessSet,
        kind: String,
        digest: String,
    },
    Issue {
        process: ProcessId,
        tx: TransactionRef,
    },
    Refuse {
        process: ProcessId,
        tx: TransactionRef,
        reason: String,
    },
    Deliver {
        step: u64,
        from: ProcessId,
        to: ProcessId,
        kind: String,
        digest: String,
    },
    Accept {
        process: ProcessId,
        tx: TransactionRef,
    },
    Accuse {
        process: ProcessId,
        accused: ProcessSet,
        refers_to: Vec<TransactionRef>,
    },
}

/// Spending number of the correct histories right after a trace event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpendingPoint {
    pub trace_index: usize,
    pub gamma: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub outcome: Outcome,
    pub n: usize,
    pub faulty: ProcessSet,
    /// Correct processes with a quorum free of faulty processes.
    pub live: ProcessSet,
    /// Inconsistency number of the model, if it was within limits.
    pub inconsistency_number: Option<usize>,
    pub public_keys: KeyDirectory,
    pub genesis: TransactionRef,
    /// Bodies of every transaction referenced by the histories, issued
    /// transactions and accusations below.
    pub transactions: BTreeMap<TransactionRef, Transaction>,
    /// Transactions issued by correct processes, in issue order.
    pub issued: Vec<(ProcessId, TransactionRef)>,
    /// Honest actions never issued because an input never arrived.
    pub never_enabled: Vec<(ProcessId, TransactionRef)>,
    /// Final history of each correct process.
    pub histories: BTreeMap<ProcessId, BTreeSet<TransactionRef>>,
    /// Final accusation history of each correct process.
    pub accusations: BTreeMap<ProcessId, BTreeSet<Accusation>>,
    pub deliveries: u64,
    pub undelivered: usize,
    pub trace: Vec<TraceEvent>,
    pub trace_hash: String,
    /// Changes of the spending number over the run, starting at 0.
    pub spending_timeline: Vec<SpendingPoint>,
    pub spending_number: usize,
    /// `None` if the collection exceeded the exact cover cap.
    pub cover: Option<Cover>,
    pub properties: PropertyReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kcb: Option<KcbOutcome>,
}

impl RunReport {
    pub fn history(&self, p: ProcessId) -> History {
        History::from_parts(
            self.genesis,
            self.histories
                .get(&p)
                .into_iter()
                .flatten()
                .map(|r| self.transactions[r].clone()),
        )
    }

    /// Final histories of the correct processes.
    pub fn collection(&self) -> HistoryCollection {
        HistoryCollection(self.histories.keys().map(|&p| (p, self.history(p))).collect())
    }

    pub fn cover_number(&self) -> Option<usize> {
        self.cover.as_ref().map(Cover::number)
    }

    /// Spending number after every trace prefix, rebuilt from the accept
    /// events alone. Index `i` holds the value after event `i - 1`.
    pub fn replay_spending(&self) -> Vec<usize> {
        let mut tracker = SpendingTracker::default();
        let mut out = Vec::with_capacity(self.trace.len() + 1);
        out.push(0);
        for ev in &self.trace {
            if let TraceEvent::Accept { tx, .. } = ev {
                tracker.add(&self.transactions[tx]);
            }
            out.push(tracker.gamma);
        }
        out
    }

    /// Histories of the correct processes after the first `prefix` trace
    /// events.
    pub fn collection_at(&self, prefix: usize) -> HistoryCollection {
        let genesis = self.transactions[&self.genesis].clone();
        let mut hs: BTreeMap<ProcessId, History> = self
            .histories
            .keys()
            .map(|&p| (p, History::new(genesis.clone())))
            .collect();
        for ev in &self.trace[..prefix] {
            if let TraceEvent::Accept { process, tx } = ev {
                hs.get_mut(process)
                    .expect("accepts come from correct processes")
                    .insert(self.transactions[tx].clone());
            }
        }
        HistoryCollection(hs)
    }
}

/// Incremental spending number over accepted transactions.
#[derive(Default)]
struct SpendingTracker {
    spends: BTreeMap<(ProcessId, TransactionRef), BTreeSet<TransactionRef>>,
    gamma: usize,
}

impl SpendingTracker {
    fn add(&mut self, tx: &Transaction) {
        let Issuer::Process(r) = tx.issuer() else {
            return;
        };
        for input in tx.inputs() {
            let s = self.spends.entry((r, *input)).or_default();
            s.insert(tx.id());
            self.gamma = self.gamma.max(s.len());
        }
    }
}

fn digest(message: &crate::engine::Message) -> String {
    let bytes = serde_json::to_vec(message).expect("messages serialize");
    hex::encode(Sha256::digest(bytes))
}

struct Runner<'a> {
    scenario: &'a Scenario,
    correct: ProcessSet,
    states: BTreeMap<ProcessId, ProcessState>,
    queue: VecDeque<InFlight>,
    trace: Vec<TraceEvent>,
    transactions: BTreeMap<TransactionRef, Transaction>,
    spending: SpendingTracker,
    timeline: Vec<SpendingPoint>,
    issued: Vec<(ProcessId, TransactionRef)>,
    waiting: Vec<usize>,
}

impl Runner<'_> {
    fn enqueue(&mut self, env: Envelope) -> String {
        let d = digest(&env.message);
        let digest: Arc<str> = Arc::from(d.as_str());
        let message = Arc::new(env.message);
        // faulty recipients ignore everything, so their copies are dropped
        for to in env.recipients.intersection(self.correct).iter() {
            self.queue.push_back(InFlight {
                from: env.sender,
                to,
                message: Arc::clone(&message),
                digest: Arc::clone(&digest),
            });
        }
        d
    }

    fn apply(&mut self, p: ProcessId, t: Transition) {
        for r in t.accepted {
            let tx = self.states[&p]
                .history()
                .get(&r)
                .expect("accepted transaction is in the history")
                .clone();
            self.trace.push(TraceEvent::Accept { process: p, tx: r });
            let before = self.spending.gamma;
            self.spending.add(&tx);
            self.transactions.insert(r, tx);
            if self.spending.gamma != before {
                self.timeline.push(SpendingPoint {
                    trace_index: self.trace.len() - 1,
                    gamma: self.spending.gamma,
                });
            }
        }
        for a in t.accused {
            for st in a.proof() {
                self.transactions.entry(st.tx.id()).or_insert_with(|| st.tx.clone());
            }
            self.trace.push(TraceEvent::Accuse {
                process: p,
                accused: a.accused,
                refers_to: a.proof().iter().map(|st| st.tx.id()).collect(),
            });
        }
        for env in t.outbound {
            self.enqueue(env);
        }
    }

    /// Issues every waiting honest action whose inputs its issuer now has.
    fn issue_enabled(&mut self) {
        let mut still = Vec::with_capacity(self.waiting.len());
        for i in std::mem::take(&mut self.waiting) {
            let action = &self.scenario.honest[i];
            let state = &self.states[&action.issuer];
            if !action.tx.inputs().iter().all(|r| state.history().contains(r)) {
                still.push(i);
                continue;
            }
            let (p, tx) = (action.issuer, action.tx.clone());
            let id = tx.id();
            match self.states.get_mut(&p).expect("issuer is correct").step(Event::Transfer(tx.clone())) {
                Ok(t) => {
                    self.transactions.insert(id, tx);
                    self.issued.push((p, id));
                    self.trace.push(TraceEvent::Issue { process: p, tx: id });
                    self.apply(p, t);
                }
                Err(e) => self.trace.push(TraceEvent::Refuse {
                    process: p,
                    tx: id,
                    reason: e.to_string(),
                }),
            }
        }
        self.waiting = still;
    }
}

/// Runs `scenario` to quiescence or until its event budget is spent.
pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<RunReport, ScenarioError> {
    scenario.validate()?;
    let model = &scenario.model;
    let n = model.n();
    let correct = scenario.correct();
    let keys = scenario.keys.keys(n);
    let directory = scenario.keys.directory(n);
    let states = correct
        .iter()
        .map(|p| {
            let st = ProcessState::new(
                p,
                n,
                model.quorums(p).to_vec(),
                keys[p.index()].clone(),
                directory.clone(),
                scenario.genesis.clone(),
            )
            .with_config(options.engine);
            (p, st)
        })
        .collect();
    let mut runner = Runner {
        scenario,
        correct,
        states,
        queue: VecDeque::new(),
        trace: Vec::new(),
        transactions: BTreeMap::from([(scenario.genesis.id(), scenario.genesis.clone())]),
        spending: SpendingTracker::default(),
        timeline: vec![SpendingPoint {
            trace_index: 0,
            gamma: 0,
        }],
        issued: Vec::new(),
        waiting: (0..scenario.honest.len()).collect(),
    };
    for env in &scenario.byzantine {
        let (from, to, kind) = (env.sender, env.recipients, env.message.kind().to_string());
        let digest = runner.enqueue(env.clone());
        runner.trace.push(TraceEvent::Inject {
            from,
            to,
            kind,
            digest,
        });
    }

    let mut scheduler = Scheduler::new(&scenario.scheduler);
    let mut deliveries = 0u64;
    let outcome = loop {
        runner.issue_enabled();
        if runner.queue.is_empty() {
            break Outcome::Quiescent;
        }
        if deliveries >= scenario.max_events {
            break Outcome::Nontermination;
        }
        let i = scheduler.pick(&runner.queue);
        let m = runner.queue.remove(i).expect("picked index is in range");
        deliveries += 1;
        runner.trace.push(TraceEvent::Deliver {
            step: deliveries,
            from: m.from,
            to: m.to,
            kind: m.message.kind().to_string(),
            digest: m.digest.to_string(),
        });
        let event = Event::Deliver {
            from: m.from,
            message: Arc::unwrap_or_clone(m.message),
        };
        let t = runner
            .states
            .get_mut(&m.to)
            .expect("only correct processes receive")
            .step(event)
            .expect("deliveries never fail");
        runner.apply(m.to, t);
    };

    let trace_hash = hex::encode(Sha256::digest(
        serde_json::to_vec(&runner.trace).expect("trace serializes"),
    ));
    let histories: BTreeMap<ProcessId, BTreeSet<TransactionRef>> = runner
        .states
        .iter()
        .map(|(p, s)| (*p, s.history().refs().copied().collect()))
        .collect();
    let accusations = runner
        .states
        .iter()
        .map(|(p, s)| (*p, s.accusations().clone()))
        .collect();
    let never_enabled = runner
        .waiting
        .iter()
        .map(|&i| (scenario.honest[i].issuer, scenario.honest[i].tx.id()))
        .collect();
    for a in &scenario.honest {
        runner.transactions.entry(a.tx.id()).or_insert_with(|| a.tx.clone());
    }
    let live = correct
        .iter()
        .filter(|&p| is_live(model, p, scenario.faulty))
        .collect();
    let mut report = RunReport {
        outcome,
        n,
        faulty: scenario.faulty,
        live,
        inconsistency_number: inconsistency_number(model, &options.limits).ok(),
        public_keys: directory,
        genesis: scenario.genesis.id(),
        transactions: runner.transactions,
        issued: runner.issued,
        never_enabled,
        histories,
        accusations,
        deliveries,
        undelivered: runner.queue.len(),
        trace: runner.trace,
        trace_hash,
        spending_timeline: runner.timeline,
        spending_number: runner.spending.gamma,
        cover: None,
        properties: PropertyReport::default(),
        kcb: None,
    };
    report.cover = cover_number(&report.collection(), options.max_cover_histories).ok();
    debug_assert_eq!(
        ledger::spending_number(&report.collection()).ok(),
        Some(report.spending_number)
    );
    report.properties = evaluate_properties(&report);
    Ok(report)
}
