//! Transactions, histories and the measurements taken over them.
//!
//! # Canonical encoding
//!
//! A transaction's identity is the SHA-256 of its canonical encoding, which
//! is also the preimage its issuer signs. The encoding is five fields in a
//! fixed order, each written as a `u32` big-endian byte length followed by
//! the field bytes:
//!
//! 1. issuer: `0x00` for the genesis sentinel, or `0x01` then the process id as `u32`
//! 2. outputs: `u32` count, then `(u32 id, u64 amount)` pairs sorted by id;
//!    zero amounts are never stored
//! 3. inputs: `u32` count, then the 32-byte input hashes in ascending order
//! 4. timestamp: `u64`, `0` when absent
//! 5. message: `0x00` when absent, or `0x01` then the raw bytes
//!
//! All integers are big-endian.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::process::{ProcessId, ProcessSet};
use crate::sigscheme::{content_hash, KeyDirectory, KeyPair, Signature, TransactionRef};

/// Default cap on the number of histories for exact cover search.
pub const DEFAULT_MAX_COVER_HISTORIES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("input {0:?} does not resolve in the history")]
    UnresolvedInput(TransactionRef),
    #[error("history is not well-formed: {0:?}")]
    MalformedHistory(Vec<Violation>),
    #[error("size limit exceeded: {0}")]
    SizeLimitExceeded(String),
}

pub type Result<T> = std::result::Result<T, LedgerError>;

/// Who issued a transaction. Only the initial distribution uses `Genesis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Issuer {
    Genesis,
    Process(ProcessId),
}

impl Issuer {
    pub fn process(self) -> Option<ProcessId> {
        match self {
            Issuer::Genesis => None,
            Issuer::Process(p) => Some(p),
        }
    }
}

impl fmt::Display for Issuer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issuer::Genesis => f.write_str("genesis"),
            Issuer::Process(p) => write!(f, "{p}"),
        }
    }
}

// JSON: the string "genesis" or a 0-based process index.
impl Serialize for Issuer {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Issuer::Genesis => s.serialize_str("genesis"),
            Issuer::Process(p) => s.serialize_u32(p.0),
        }
    }
}

impl<'de> Deserialize<'de> for Issuer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Id(u32),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Id(i) => Ok(Issuer::Process(ProcessId(i))),
            Repr::Tag(t) if t == "genesis" => Ok(Issuer::Genesis),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("unknown issuer {t:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TransactionRepr {
    issuer: Issuer,
    outputs: BTreeMap<ProcessId, u64>,
    inputs: BTreeSet<TransactionRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_hex")]
    message: Option<Vec<u8>>,
}

mod opt_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_str(&hex::encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|h| hex::decode(h).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// `(issuer, outputs, inputs, timestamp, message)`, identified by content hash.
///
/// Equality, ordering and hashing go through the content hash.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "TransactionRepr", into = "TransactionRepr")]
pub struct Transaction {
    issuer: Issuer,
    outputs: BTreeMap<ProcessId, u64>,
    inputs: BTreeSet<TransactionRef>,
    timestamp: Option<u64>,
    message: Option<Vec<u8>>,
    id: TransactionRef,
}

impl TryFrom<TransactionRepr> for Transaction {
    type Error = String;

    fn try_from(r: TransactionRepr) -> std::result::Result<Self, String> {
        if r.timestamp == Some(0) {
            return Err("timestamps are positive".into());
        }
        Ok(Transaction::build(r.issuer, r.outputs, r.inputs, r.timestamp, r.message))
    }
}

impl From<Transaction> for TransactionRepr {
    fn from(t: Transaction) -> Self {
        TransactionRepr {
            issuer: t.issuer,
            outputs: t.outputs,
            inputs: t.inputs,
            timestamp: t.timestamp,
            message: t.message,
        }
    }
}

impl Transaction {
    /// A transfer by `issuer` spending `inputs`.
    pub fn new(
        issuer: ProcessId,
        outputs: impl IntoIterator<Item = (ProcessId, u64)>,
        inputs: impl IntoIterator<Item = TransactionRef>,
    ) -> Self {
        Transaction::build(
            Issuer::Process(issuer),
            outputs.into_iter().collect(),
            inputs.into_iter().collect(),
            None,
            None,
        )
    }

    /// The initial stake distribution.
    pub fn genesis(allocation: impl IntoIterator<Item = (ProcessId, u64)>) -> Self {
        Transaction::build(
            Issuer::Genesis,
            allocation.into_iter().collect(),
            BTreeSet::new(),
            None,
            None,
        )
    }

    /// # Panics
    /// If `tm` is zero.
    pub fn with_timestamp(self, tm: u64) -> Self {
        assert!(tm > 0, "timestamps are positive");
        Transaction::build(self.issuer, self.outputs, self.inputs, Some(tm), self.message)
    }

    pub fn with_message(self, message: impl Into<Vec<u8>>) -> Self {
        Transaction::build(
            self.issuer,
            self.outputs,
            self.inputs,
            self.timestamp,
            Some(message.into()),
        )
    }

    fn build(
        issuer: Issuer,
        mut outputs: BTreeMap<ProcessId, u64>,
        inputs: BTreeSet<TransactionRef>,
        timestamp: Option<u64>,
        message: Option<Vec<u8>>,
    ) -> Self {
        outputs.retain(|_, v| *v > 0);
        let mut tx = Transaction {
            issuer,
            outputs,
            inputs,
            timestamp,
            message,
            id: TransactionRef([0; 32]),
        };
        tx.id = content_hash(&tx.encode());
        tx
    }

    pub fn id(&self) -> TransactionRef {
        self.id
    }

    pub fn issuer(&self) -> Issuer {
        self.issuer
    }

    pub fn outputs(&self) -> &BTreeMap<ProcessId, u64> {
        &self.outputs
    }

    pub fn inputs(&self) -> &BTreeSet<TransactionRef> {
        &self.inputs
    }

    pub fn timestamp(&self) -> Option<u64> {
        self.timestamp
    }

    pub fn message(&self) -> Option<&[u8]> {
        self.message.as_deref()
    }

    /// Amount paid to `p`.
    pub fn pays(&self, p: ProcessId) -> u64 {
        self.outputs.get(&p).copied().unwrap_or(0)
    }

    pub fn is_incoming_to(&self, p: ProcessId) -> bool {
        self.pays(p) > 0
    }

    pub fn out_value(&self) -> u128 {
        self.outputs.values().map(|&v| v as u128).sum()
    }

    /// Canonical encoding; see the module docs.
    pub fn encode(&self) -> Vec<u8> {
        fn field(out: &mut Vec<u8>, bytes: &[u8]) {
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(bytes);
        }
        let mut out = Vec::new();

        let mut issuer = Vec::with_capacity(5);
        match self.issuer {
            Issuer::Genesis => issuer.push(0),
            Issuer::Process(p) => {
                issuer.push(1);
                issuer.extend_from_slice(&p.0.to_be_bytes());
            }
        }
        field(&mut out, &issuer);

        let mut outputs = Vec::with_capacity(4 + 12 * self.outputs.len());
        outputs.extend_from_slice(&(self.outputs.len() as u32).to_be_bytes());
        for (p, v) in &self.outputs {
            outputs.extend_from_slice(&p.0.to_be_bytes());
            outputs.extend_from_slice(&v.to_be_bytes());
        }
        field(&mut out, &outputs);

        let mut inputs = Vec::with_capacity(4 + 32 * self.inputs.len());
        inputs.extend_from_slice(&(self.inputs.len() as u32).to_be_bytes());
        for r in &self.inputs {
            inputs.extend_from_slice(&r.0);
        }
        field(&mut out, &inputs);

        field(&mut out, &self.timestamp.unwrap_or(0).to_be_bytes());

        let mut msg = Vec::new();
        match &self.message {
            None => msg.push(0),
            Some(m) => {
                msg.push(1);
                msg.extend_from_slice(m);
            }
        }
        field(&mut out, &msg);
        out
    }

    pub fn sign(&self, keys: &KeyPair) -> SignedTransaction {
        SignedTransaction {
            signature: keys.sign(&self.encode()),
            tx: self.clone(),
        }
    }
}

impl PartialEq for Transaction {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Transaction {}

impl PartialOrd for Transaction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Transaction {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl Hash for Transaction {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl fmt::Debug for Transaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transaction")
            .field("id", &self.id)
            .field("issuer", &self.issuer)
            .field("outputs", &self.outputs)
            .field("inputs", &self.inputs)
            .field("timestamp", &self.timestamp)
            .finish()
    }
}

/// A transaction with its issuer's signature over the canonical encoding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignedTransaction {
    pub tx: Transaction,
    pub signature: Signature,
}

impl SignedTransaction {
    pub fn verify(&self, keys: &KeyDirectory) -> bool {
        match self.tx.issuer() {
            Issuer::Genesis => false,
            Issuer::Process(p) => keys.verify(p, &self.tx.encode(), &self.signature),
        }
    }
}

/// Two distinct transactions by the same issuer sharing an input.
pub fn conflicts(a: &Transaction, b: &Transaction) -> bool {
    a.id != b.id && a.issuer == b.issuer && !a.inputs.is_disjoint(&b.inputs)
}

/// A set of transactions anchored at a genesis transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    genesis: TransactionRef,
    txs: BTreeMap<TransactionRef, Transaction>,
}

impl History {
    pub fn new(genesis: Transaction) -> Self {
        let id = genesis.id();
        History {
            genesis: id,
            txs: BTreeMap::from([(id, genesis)]),
        }
    }

    /// A history that may lack its genesis; used for fragments and for
    /// exercising the well-formedness checker.
    pub fn from_parts(genesis: TransactionRef, txs: impl IntoIterator<Item = Transaction>) -> Self {
        History {
            genesis,
            txs: txs.into_iter().map(|t| (t.id(), t)).collect(),
        }
    }

    pub fn genesis_ref(&self) -> TransactionRef {
        self.genesis
    }

    pub fn genesis(&self) -> Option<&Transaction> {
        self.txs.get(&self.genesis)
    }

    pub fn insert(&mut self, tx: Transaction) -> bool {
        self.txs.insert(tx.id(), tx).is_none()
    }

    pub fn remove(&mut self, id: &TransactionRef) -> Option<Transaction> {
        self.txs.remove(id)
    }

    pub fn contains(&self, id: &TransactionRef) -> bool {
        self.txs.contains_key(id)
    }

    pub fn get(&self, id: &TransactionRef) -> Option<&Transaction> {
        self.txs.get(id)
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    /// Transactions in hash order.
    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.txs.values()
    }

    pub fn refs(&self) -> impl Iterator<Item = &TransactionRef> {
        self.txs.keys()
    }

    pub fn is_subset(&self, other: &History) -> bool {
        self.txs.keys().all(|k| other.txs.contains_key(k))
    }

    /// Union of several histories sharing a genesis.
    pub fn union<'a>(genesis: TransactionRef, parts: impl IntoIterator<Item = &'a History>) -> History {
        let mut out = History {
            genesis,
            txs: BTreeMap::new(),
        };
        for h in parts {
            for tx in h.iter() {
                out.txs.entry(tx.id()).or_insert_with(|| tx.clone());
            }
        }
        out
    }
}

/// Sum of what the inputs of `tx` pay its issuer.
pub fn in_value(tx: &Transaction, resolver: &History) -> Result<u128> {
    let mut sum = 0u128;
    for r in tx.inputs() {
        let input = resolver.get(r).ok_or(LedgerError::UnresolvedInput(*r))?;
        if let Issuer::Process(s) = tx.issuer() {
            sum += input.pays(s) as u128;
        }
    }
    Ok(sum)
}

/// Validity of a transaction against the history its inputs resolve in.
///
/// The history's genesis is valid by fiat. Anything else must spend only
/// inputs incoming to its issuer and have a positive output value equal to
/// the input value.
pub fn tx_valid(tx: &Transaction, resolver: &History) -> Result<bool> {
    if tx.id() == resolver.genesis_ref() {
        return Ok(true);
    }
    let Issuer::Process(s) = tx.issuer() else {
        return Ok(false);
    };
    for r in tx.inputs() {
        let input = resolver.get(r).ok_or(LedgerError::UnresolvedInput(*r))?;
        if !input.is_incoming_to(s) {
            return Ok(false);
        }
    }
    let out = tx.out_value();
    Ok(out > 0 && out == in_value(tx, resolver)?)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "clause")]
pub enum Violation {
    /// T-Validity: the genesis transaction is missing.
    MissingGenesis,
    /// T-Validity: a non-genesis transaction is invalid.
    Invalid { tx: TransactionRef },
    /// Completeness: an input is not in the history.
    Incomplete { tx: TransactionRef, missing: TransactionRef },
    /// No-Conflict.
    Conflict { a: TransactionRef, b: TransactionRef },
    /// Cycle-Freedom: `tx` depends on itself.
    Cycle { tx: TransactionRef },
    /// Timestamped histories: a transaction with `tm > 1` lacks its predecessor.
    MissingPredecessor { tx: TransactionRef },
}

/// Outcome of [`is_well_formed`] with the failed clauses listed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WellFormedness {
    pub violations: Vec<Violation>,
}

impl WellFormedness {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks T-Validity, Completeness, No-Conflict and Cycle-Freedom, plus
/// predecessor chaining when `check_timestamps` is set.
pub fn is_well_formed(h: &History, check_timestamps: bool) -> WellFormedness {
    let mut violations = Vec::new();
    if !h.contains(&h.genesis_ref()) {
        violations.push(Violation::MissingGenesis);
    }
    for tx in h.iter() {
        let missing: Vec<_> = tx.inputs().iter().filter(|r| !h.contains(r)).collect();
        for m in &missing {
            violations.push(Violation::Incomplete {
                tx: tx.id(),
                missing: **m,
            });
        }
        if missing.is_empty() && !tx_valid(tx, h).unwrap_or(false) {
            violations.push(Violation::Invalid { tx: tx.id() });
        }
    }

    // conflicts: group by (issuer, input)
    let mut spenders: BTreeMap<(Issuer, TransactionRef), Vec<TransactionRef>> = BTreeMap::new();
    for tx in h.iter() {
        for r in tx.inputs() {
            spenders.entry((tx.issuer(), *r)).or_default().push(tx.id());
        }
    }
    let mut seen = BTreeSet::new();
    for ids in spenders.values() {
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                let pair = (ids[i].min(ids[j]), ids[i].max(ids[j]));
                if seen.insert(pair) {
                    violations.push(Violation::Conflict {
                        a: pair.0,
                        b: pair.1,
                    });
                }
            }
        }
    }

    for id in find_cycles(h) {
        violations.push(Violation::Cycle { tx: id });
    }

    if check_timestamps {
        let stamps: BTreeSet<(Issuer, u64)> = h
            .iter()
            .filter_map(|t| t.timestamp().map(|tm| (t.issuer(), tm)))
            .collect();
        for tx in h.iter() {
            if tx.issuer() == Issuer::Genesis {
                continue;
            }
            match tx.timestamp() {
                Some(tm) if tm > 1 && !stamps.contains(&(tx.issuer(), tm - 1)) => {
                    violations.push(Violation::MissingPredecessor { tx: tx.id() })
                }
                None => violations.push(Violation::MissingPredecessor { tx: tx.id() }),
                _ => {}
            }
        }
    }
    violations.sort();
    WellFormedness { violations }
}

/// Transactions lying on a dependency cycle within `h`.
fn find_cycles(h: &History) -> Vec<TransactionRef> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<TransactionRef, Mark> = BTreeMap::new();
    let mut on_cycle = BTreeSet::new();
    for start in h.refs() {
        if marks.contains_key(start) {
            continue;
        }
        // iterative DFS over input edges
        let mut stack: Vec<(TransactionRef, Vec<TransactionRef>)> = Vec::new();
        marks.insert(*start, Mark::Open);
        stack.push((*start, h.get(start).unwrap().inputs().iter().copied().collect()));
        while let Some((node, children)) = stack.last_mut() {
            let node = *node;
            match children.pop() {
                Some(c) if h.contains(&c) => match marks.get(&c) {
                    None => {
                        marks.insert(c, Mark::Open);
                        let next = h.get(&c).unwrap().inputs().iter().copied().collect();
                        stack.push((c, next));
                    }
                    Some(Mark::Open) => {
                        // every open node from c to the top is on the cycle
                        let pos = stack.iter().position(|(n, _)| *n == c).unwrap();
                        on_cycle.extend(stack[pos..].iter().map(|(n, _)| *n));
                    }
                    Some(Mark::Done) => {}
                },
                Some(_) => {}
                None => {
                    marks.insert(node, Mark::Done);
                    stack.pop();
                }
            }
        }
    }
    on_cycle.into_iter().collect()
}

fn require_well_formed(h: &History) -> Result<()> {
    let wf = is_well_formed(h, false);
    if wf.is_ok() {
        Ok(())
    } else {
        Err(LedgerError::MalformedHistory(wf.violations))
    }
}

/// Incoming minus outgoing stake of `w`.
pub fn balance(h: &History, w: ProcessId) -> Result<i128> {
    require_well_formed(h)?;
    let incoming: i128 = h.iter().map(|t| t.pays(w) as i128).sum();
    let outgoing: i128 = h
        .iter()
        .filter(|t| t.issuer() == Issuer::Process(w))
        .map(|t| t.out_value() as i128)
        .sum();
    Ok(incoming - outgoing)
}

/// Transactions of `h` issued by `r`, in hash order.
pub fn projection(h: &History, r: ProcessId) -> Vec<&Transaction> {
    h.iter().filter(|t| t.issuer() == Issuer::Process(r)).collect()
}

/// Local histories of a set of processes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HistoryCollection(pub BTreeMap<ProcessId, History>);

impl HistoryCollection {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_well_formed(&self) -> Result<()> {
        self.0.values().try_for_each(require_well_formed)
    }
}

/// Largest number of distinct transactions by one issuer spending the same
/// input across the collection.
pub fn spending_number(g: &HistoryCollection) -> Result<usize> {
    g.check_well_formed()?;
    let mut spends: BTreeMap<(ProcessId, TransactionRef), BTreeSet<TransactionRef>> =
        BTreeMap::new();
    for h in g.0.values() {
        for tx in h.iter() {
            let Issuer::Process(r) = tx.issuer() else {
                continue;
            };
            for input in tx.inputs() {
                spends.entry((r, *input)).or_default().insert(tx.id());
            }
        }
    }
    Ok(spends.values().map(|s| s.len()).max().unwrap_or(0))
}

fn issuer_projections(h: &History) -> BTreeMap<Issuer, BTreeSet<TransactionRef>> {
    let mut out: BTreeMap<Issuer, BTreeSet<TransactionRef>> = BTreeMap::new();
    for tx in h.iter() {
        out.entry(tx.issuer()).or_default().insert(tx.id());
    }
    out
}

/// Whether two histories may share a cluster: for every issuer one
/// projection contains the other.
pub fn cluster_compatible(a: &History, b: &History) -> bool {
    let pa = issuer_projections(a);
    let pb = issuer_projections(b);
    let empty = BTreeSet::new();
    pa.keys().chain(pb.keys()).all(|r| {
        let x = pa.get(r).unwrap_or(&empty);
        let y = pb.get(r).unwrap_or(&empty);
        x.is_subset(y) || y.is_subset(x)
    })
}

/// A minimum cover of a collection by clusters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub clusters: Vec<Vec<ProcessId>>,
}

impl Cover {
    pub fn number(&self) -> usize {
        self.clusters.len()
    }
}

/// Minimum number of clusters whose union is the whole collection.
///
/// The cluster condition is pairwise, so every subset of a cluster is a
/// cluster; a minimum cover by possibly overlapping clusters therefore has
/// the same size as a minimum partition, which is what the subset DP finds.
pub fn cover_number(g: &HistoryCollection, max_histories: usize) -> Result<Cover> {
    let m = g.len();
    if m > max_histories {
        return Err(LedgerError::SizeLimitExceeded(format!(
            "{m} histories exceed the exact cover cap of {max_histories}"
        )));
    }
    g.check_well_formed()?;
    let owners: Vec<ProcessId> = g.0.keys().copied().collect();
    let hs: Vec<&History> = g.0.values().collect();
    let mut compat = vec![0u32; m];
    for i in 0..m {
        compat[i] |= 1 << i;
        for j in (i + 1)..m {
            if cluster_compatible(hs[i], hs[j]) {
                compat[i] |= 1 << j;
                compat[j] |= 1 << i;
            }
        }
    }
    let full = if m == 0 { 0 } else { (1u32 << m) - 1 };
    let size = 1usize << m;
    let mut clusterable = vec![false; size];
    clusterable[0] = true;
    for mask in 1..size as u32 {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        clusterable[mask as usize] = clusterable[rest as usize] && compat[low] & mask == mask;
    }
    // best[mask] = (clusters needed, chosen cluster containing the lowest bit)
    let mut best: Vec<(u32, u32)> = vec![(u32::MAX, 0); size];
    best[0] = (0, 0);
    for mask in 1..size as u32 {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        // submasks of rest, each joined with low
        let mut sub = rest;
        loop {
            let s = sub | low;
            if clusterable[s as usize] {
                let cand = best[(mask ^ s) as usize].0.saturating_add(1);
                if cand < best[mask as usize].0 {
                    best[mask as usize] = (cand, s);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut clusters = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let s = best[mask as usize].1;
        clusters.push(
            (0..m)
                .filter(|i| s & (1 << i) != 0)
                .map(|i| owners[i])
                .collect(),
        );
        mask ^= s;
    }
    Ok(Cover { clusters })
}

/// `(AC, P)`: accused processes and signed conflicting transactions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Accusation {
    pub accused: ProcessSet,
    proof: Vec<SignedTransaction>,
}

impl Accusation {
    /// Canonicalizes the proof: sorted by transaction hash, then signature,
    /// without duplicates.
    pub fn new(accused: ProcessSet, proof: impl IntoIterator<Item = SignedTransaction>) -> Self {
        let mut proof: Vec<_> = proof.into_iter().collect();
        proof.sort();
        proof.dedup();
        Accusation { accused, proof }
    }

    pub fn proof(&self) -> &[SignedTransaction] {
        &self.proof
    }

    /// Whether the proof contains `tx`.
    pub fn refers_to(&self, tx: &TransactionRef) -> bool {
        self.proof.iter().any(|s| s.tx.id() == *tx)
    }
}

/// Checks an accusation using only the proof and public keys: every proof
/// entry carries a valid issuer signature, and every accused process issued at
/// least two distinct proof transactions that pairwise share an input.
pub fn verify_acc(a: &Accusation, keys: &KeyDirectory) -> bool {
    if a.accused.is_empty() || a.proof.is_empty() {
        return false;
    }
    for st in &a.proof {
        let Issuer::Process(p) = st.tx.issuer() else {
            return false;
        };
        if !a.accused.contains(p) || !st.verify(keys) {
            return false;
        }
    }
    for p in a.accused.iter() {
        let mut txs: Vec<&Transaction> = a
            .proof
            .iter()
            .filter(|s| s.tx.issuer() == Issuer::Process(p))
            .map(|s| &s.tx)
            .collect();
        txs.sort();
        txs.dedup();
        if txs.len() < 2 {
            return false;
        }
        for i in 0..txs.len() {
            for j in (i + 1)..txs.len() {
                if !conflicts(txs[i], txs[j]) {
                    return false;
                }
            }
        }
    }
    true
}
