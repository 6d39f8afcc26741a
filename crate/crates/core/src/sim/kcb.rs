//! k-consistent broadcast on top of k-spending asset transfer.
//!
//! Broadcasting `m` means the source issuing a transaction that spends its
//! genesis output and carries `m`. A process delivers `m` when it accepts
//! such a transaction; only the first one it accepts counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ledger::{Issuer, Transaction};
use crate::process::ProcessId;

use super::run::{RunReport, TraceEvent};

/// The transaction that broadcasts `m` from `source`.
pub fn kcb_broadcast(source: ProcessId, genesis: &Transaction, m: &[u8]) -> Transaction {
    let amount = genesis.pays(source);
    Transaction::new(source, [(source, amount)], [genesis.id()]).with_message(m.to_vec())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KcbOutcome {
    pub source: ProcessId,
    /// Value delivered by each correct process that delivered one.
    #[serde(with = "delivered_hex")]
    pub delivered: BTreeMap<ProcessId, Vec<u8>>,
}

impl KcbOutcome {
    /// The set `M` of distinct delivered values.
    pub fn values(&self) -> BTreeSet<&[u8]> {
        self.delivered.values().map(Vec::as_slice).collect()
    }
}

mod delivered_hex {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::process::ProcessId;

    pub fn serialize<S: Serializer>(m: &BTreeMap<ProcessId, Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|(p, v)| (*p, hex::encode(v)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<ProcessId, Vec<u8>>, D::Error> {
        BTreeMap::<ProcessId, String>::deserialize(d)?
            .into_iter()
            .map(|(p, h)| Ok((p, hex::decode(h).map_err(serde::de::Error::custom)?)))
            .collect()
    }
}

/// Reads deliveries off a finished run.
pub fn kcb_collect(report: &RunReport, source: ProcessId) -> KcbOutcome {
    let mut delivered = BTreeMap::new();
    for ev in &report.trace {
        let TraceEvent::Accept { process, tx } = ev else {
            continue;
        };
        if delivered.contains_key(process) {
            continue;
        }
        let body = &report.transactions[tx];
        let is_broadcast = body.issuer() == Issuer::Process(source)
            && body.inputs().len() == 1
            && body.inputs().contains(&report.genesis);
        if let (true, Some(m)) = (is_broadcast, body.message()) {
            delivered.insert(*process, m.to_vec());
        }
    }
    KcbOutcome { source, delivered }
}
