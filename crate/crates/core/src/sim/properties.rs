//! Verdicts for the eight properties of a k-spending asset transfer run.
//!
//! Eventual properties are judged at quiescence; on a run that hit its
//! event budget they come back inconclusive. Safety properties are judged
//! on whatever the trace contains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ledger::{conflicts, verify_acc, Accusation, Issuer};
use crate::process::ProcessId;
use crate::sigscheme::TransactionRef;

use super::run::{Outcome, RunReport, TraceEvent};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    /// The premise never arose in this run.
    #[default]
    Vacuous,
    Inconclusive { reason: String },
    Violated {
        detail: String,
        /// Trace event witnessing the violation, when there is one.
        trace_index: Option<usize>,
    },
}

impl Verdict {
    /// Holds or vacuous.
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Holds | Verdict::Vacuous)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }

    fn violated(detail: impl Into<String>, trace_index: Option<usize>) -> Self {
        Verdict::Violated {
            detail: detail.into(),
            trace_index,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Vacuous => write!(f, "holds (vacuous)"),
            Verdict::Inconclusive { reason } => write!(f, "inconclusive: {reason}"),
            Verdict::Violated {
                detail,
                trace_index: Some(i),
            } => write!(f, "VIOLATED at trace event {i}: {detail}"),
            Verdict::Violated { detail, .. } => write!(f, "VIOLATED: {detail}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub validity: Verdict,
    pub k_spending: Verdict,
    pub eventual_conviction: Verdict,
    pub accuracy: Verdict,
    pub agreement: Verdict,
    pub integrity: Verdict,
    pub monotonicity: Verdict,
    pub termination: Verdict,
}

impl PropertyReport {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Verdict)> {
        [
            ("validity", &self.validity),
            ("k-spending", &self.k_spending),
            ("eventual conviction", &self.eventual_conviction),
            ("accuracy", &self.accuracy),
            ("agreement", &self.agreement),
            ("integrity", &self.integrity),
            ("monotonicity", &self.monotonicity),
            ("termination", &self.termination),
        ]
        .into_iter()
    }

    pub fn all_ok(&self) -> bool {
        self.iter().all(|(_, v)| v.is_ok())
    }

    pub fn any_violated(&self) -> bool {
        self.iter().any(|(_, v)| v.is_violated())
    }
}

pub fn evaluate_properties(report: &RunReport) -> PropertyReport {
    let ctx = Context::new(report);
    PropertyReport {
        validity: ctx.validity(),
        k_spending: ctx.k_spending(),
        eventual_conviction: ctx.eventual_conviction(),
        accuracy: ctx.accuracy(),
        agreement: ctx.agreement(),
        integrity: ctx.integrity(),
        monotonicity: ctx.monotonicity(),
        termination: ctx.termination(),
    }
}

struct Context<'a> {
    r: &'a RunReport,
    quiescent: bool,
    /// Trace index of each (process, tx) acceptance.
    accepted_at: BTreeMap<(ProcessId, TransactionRef), usize>,
}

impl<'a> Context<'a> {
    fn new(r: &'a RunReport) -> Self {
        let accepted_at = r
            .trace
            .iter()
            .enumerate()
            .filter_map(|(i, ev)| match ev {
                TraceEvent::Accept { process, tx } => Some(((*process, *tx), i)),
                _ => None,
            })
            .collect();
        Context {
            r,
            quiescent: r.outcome == Outcome::Quiescent,
            accepted_at,
        }
    }

    fn unfinished(&self) -> Option<Verdict> {
        (!self.quiescent).then(|| Verdict::Inconclusive {
            reason: "run stopped before quiescence".into(),
        })
    }

    /// `tx` and every transaction it transitively spends, genesis excluded.
    fn deps(&self, tx: TransactionRef) -> BTreeSet<TransactionRef> {
        let mut out = BTreeSet::new();
        let mut stack = vec![tx];
        while let Some(t) = stack.pop() {
            if t == self.r.genesis || !out.insert(t) {
                continue;
            }
            if let Some(body) = self.r.transactions.get(&t) {
                stack.extend(body.inputs().iter().copied());
            }
        }
        out
    }

    fn accuses_any(&self, q: ProcessId, txs: &BTreeSet<TransactionRef>) -> bool {
        self.r
            .accusations
            .get(&q)
            .is_some_and(|a| a.iter().any(|acc| txs.iter().any(|t| acc.refers_to(t))))
    }

    fn has(&self, q: ProcessId, tx: &TransactionRef) -> bool {
        self.r.histories.get(&q).is_some_and(|h| h.contains(tx))
    }

    /// Every live correct process holds `tx` or an accusation about it or
    /// one of its dependencies.
    fn reaches_live(&self, tx: TransactionRef) -> Result<(), ProcessId> {
        let deps = self.deps(tx);
        match self
            .r
            .live
            .iter()
            .find(|&q| !self.has(q, &tx) && !self.accuses_any(q, &deps))
        {
            Some(q) => Err(q),
            None => Ok(()),
        }
    }

    fn validity(&self) -> Verdict {
        if self.r.issued.is_empty() {
            return Verdict::Vacuous;
        }
        if let Some(v) = self.unfinished() {
            return v;
        }
        for (p, tx) in &self.r.issued {
            if let Err(q) = self.reaches_live(*tx) {
                return Verdict::violated(
                    format!("{p} issued {tx:?} but live {q} neither accepted it nor accused a dependency"),
                    None,
                );
            }
        }
        Verdict::Holds
    }

    fn termination(&self) -> Verdict {
        let accepted: BTreeSet<TransactionRef> = self
            .accepted_at
            .keys()
            .map(|(_, tx)| *tx)
            .collect();
        if accepted.is_empty() {
            return Verdict::Vacuous;
        }
        if let Some(v) = self.unfinished() {
            return v;
        }
        for tx in accepted {
            if let Err(q) = self.reaches_live(tx) {
                return Verdict::violated(
                    format!("{tx:?} was accepted by a correct process but live {q} neither accepted it nor accused a dependency"),
                    None,
                );
            }
        }
        Verdict::Holds
    }

    fn k_spending(&self) -> Verdict {
        let Some(k) = self.r.inconsistency_number else {
            return Verdict::Inconclusive {
                reason: "inconsistency number exceeded the analysis limits".into(),
            };
        };
        match self.r.spending_timeline.iter().find(|pt| pt.gamma > k) {
            Some(pt) => Verdict::violated(
                format!("spending number reached {} above the bound {k}", pt.gamma),
                Some(pt.trace_index),
            ),
            None => Verdict::Holds,
        }
    }

    fn eventual_conviction(&self) -> Verdict {
        let accepted: Vec<(ProcessId, TransactionRef)> = self.accepted_at.keys().copied().collect();
        let mut pairs = Vec::new();
        for (i, &(p, a)) in accepted.iter().enumerate() {
            for &(q, b) in &accepted[i + 1..] {
                if conflicts(&self.r.transactions[&a], &self.r.transactions[&b]) {
                    pairs.push((p, a, q, b));
                }
            }
        }
        if pairs.is_empty() {
            return Verdict::Vacuous;
        }
        if let Some(v) = self.unfinished() {
            return v;
        }
        for (p, a, q, b) in pairs {
            for who in [p, q] {
                for tx in [a, b] {
                    let held = self.r.accusations.get(&who).is_some_and(|acs| acs.iter().any(|acc| acc.refers_to(&tx)));
                    if !held {
                        return Verdict::violated(
                            format!("{p} and {q} accepted conflicting {a:?} and {b:?}, but {who} has no accusation about {tx:?}"),
                            Some(self.accepted_at[&(q, b)].max(self.accepted_at[&(p, a)])),
                        );
                    }
                }
            }
        }
        Verdict::Holds
    }

    fn accuracy(&self) -> Verdict {
        let mut any = false;
        for (p, acs) in &self.r.accusations {
            for acc in acs {
                any = true;
                if !verify_acc(acc, &self.r.public_keys) {
                    return Verdict::violated(format!("{p} holds an accusation that does not verify"), None);
                }
                if !acc.accused.is_subset(self.r.faulty) {
                    return Verdict::violated(
                        format!("{p} holds an accusation against {} outside the faulty set {}", acc.accused, self.r.faulty),
                        None,
                    );
                }
            }
        }
        if any {
            Verdict::Holds
        } else {
            Verdict::Vacuous
        }
    }

    fn agreement(&self) -> Verdict {
        let union: BTreeSet<&Accusation> = self.r.accusations.values().flatten().collect();
        if union.is_empty() {
            return Verdict::Vacuous;
        }
        if let Some(v) = self.unfinished() {
            return v;
        }
        for (p, acs) in &self.r.accusations {
            if acs.len() != union.len() {
                return Verdict::violated(
                    format!("{p} holds {} of the {} accusations known to correct processes", acs.len(), union.len()),
                    None,
                );
            }
        }
        Verdict::Holds
    }

    fn integrity(&self) -> Verdict {
        let issued_at: BTreeMap<TransactionRef, usize> = self
            .r
            .trace
            .iter()
            .enumerate()
            .filter_map(|(i, ev)| match ev {
                TraceEvent::Issue { tx, .. } => Some((*tx, i)),
                _ => None,
            })
            .collect();
        let mut any = false;
        for (&(p, tx), &at) in &self.accepted_at {
            let Issuer::Process(s) = self.r.transactions[&tx].issuer() else {
                continue;
            };
            if self.r.faulty.contains(s) {
                continue;
            }
            any = true;
            if !issued_at.get(&tx).is_some_and(|&i| i < at) {
                return Verdict::violated(format!("{p} accepted {tx:?} which correct {s} never issued"), Some(at));
            }
        }
        if any {
            Verdict::Holds
        } else {
            Verdict::Vacuous
        }
    }

    fn monotonicity(&self) -> Verdict {
        let mut any = false;
        let mut seen: BTreeMap<ProcessId, usize> = BTreeMap::new();
        for (i, ev) in self.r.trace.iter().enumerate() {
            let TraceEvent::Accuse { process, accused, refers_to } = ev else {
                continue;
            };
            any = true;
            *seen.entry(*process).or_default() += 1;
            let kept = self.r.accusations.get(process).is_some_and(|acs| {
                acs.iter().any(|a| a.accused == *accused && a.proof().iter().map(|st| st.tx.id()).eq(refers_to.iter().copied()))
            });
            if !kept {
                return Verdict::violated(format!("{process} lost an accusation it had added"), Some(i));
            }
        }
        for (p, acs) in &self.r.accusations {
            if acs.len() != seen.get(p).copied().unwrap_or(0) {
                return Verdict::violated(format!("{p}'s accusation history does not match its additions"), None);
            }
        }
        if any {
            Verdict::Holds
        } else {
            Verdict::Vacuous
        }
    }
}
