//! Decentralized trust assumptions and their graph analysis.
//!
//! A [`TrustModel`] gives every process a set of quorums and fixes a fault
//! model, stored as its maximal faulty sets. For a faulty set `F` and a
//! [`QuorumMap`] `S` picking one quorum per process, the [`TrustGraph`] has
//! the correct processes as nodes and joins `p` and `q` whenever `S(p)` and
//! `S(q)` share a correct process. The inconsistency number of a model is the
//! largest independence number over all such graphs; it is the tightest
//! bound on how many times a single input can be spent across correct
//! histories.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::process::{ProcessId, ProcessSet, MAX_PROCESSES};

/// Default node cap for exact maximum independent set search.
pub const DEFAULT_MAX_MIS_NODES: usize = 24;
/// Default cap on search steps (or enumerated graphs) for the inconsistency number.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrustModelError {
    #[error("invalid trust model: {0}")]
    InvalidModel(String),
    #[error("faulty set {0} is not contained in any maximal faulty set")]
    InvalidFaultySet(ProcessSet),
    #[error("quorum map assigns {quorum} to {process}, which is not one of its quorums")]
    InvalidQuorumMap {
        process: ProcessId,
        quorum: ProcessSet,
    },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("size limit exceeded: {what} (best value found so far: {partial:?})")]
    SizeLimitExceeded {
        what: String,
        partial: Option<usize>,
    },
}

pub type Result<T> = std::result::Result<T, TrustModelError>;

/// One quorum of a process. Never empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Quorum(pub ProcessSet);

impl Quorum {
    pub fn members(self) -> ProcessSet {
        self.0
    }
}

/// Search limits shared by every exact computation in this module.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_mis_nodes: usize,
    pub enumeration_budget: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_mis_nodes: DEFAULT_MAX_MIS_NODES,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TrustModelFile {
    n: usize,
    quorums: Vec<Vec<ProcessSet>>,
    fault_model_maximal: Vec<ProcessSet>,
}

/// Quorum systems for every process plus a fault model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TrustModelFile", into = "TrustModelFile")]
pub struct TrustModel {
    n: usize,
    quorums: Vec<Vec<Quorum>>,
    fault_model: Vec<ProcessSet>,
}

impl TryFrom<TrustModelFile> for TrustModel {
    type Error = TrustModelError;

    fn try_from(file: TrustModelFile) -> Result<Self> {
        TrustModel::new(
            file.n,
            file.quorums
                .into_iter()
                .map(|qs| qs.into_iter().map(Quorum).collect())
                .collect(),
            file.fault_model_maximal,
        )
    }
}

impl From<TrustModel> for TrustModelFile {
    fn from(m: TrustModel) -> Self {
        TrustModelFile {
            n: m.n,
            quorums: m
                .quorums
                .into_iter()
                .map(|qs| qs.into_iter().map(|q| q.0).collect())
                .collect(),
            fault_model_maximal: m.fault_model,
        }
    }
}

impl TrustModel {
    /// Validates and builds a model. An empty fault model is read as `{∅}`.
    pub fn new(n: usize, quorums: Vec<Vec<Quorum>>, fault_model: Vec<ProcessSet>) -> Result<Self> {
        if n == 0 || n > MAX_PROCESSES {
            return Err(TrustModelError::InvalidModel(format!(
                "process count {n} outside 1..={MAX_PROCESSES}"
            )));
        }
        if quorums.len() != n {
            return Err(TrustModelError::InvalidModel(format!(
                "expected {n} quorum systems, found {}",
                quorums.len()
            )));
        }
        let all = ProcessSet::full(n);
        for (i, qs) in quorums.iter().enumerate() {
            let p = ProcessId::from(i);
            if qs.is_empty() {
                return Err(TrustModelError::InvalidModel(format!("{p} has no quorums")));
            }
            for q in qs {
                if !q.0.is_subset(all) {
                    return Err(TrustModelError::InvalidModel(format!(
                        "quorum {} of {p} names a process outside 0..{n}",
                        q.0
                    )));
                }
                if !q.0.contains(p) {
                    return Err(TrustModelError::InvalidModel(format!(
                        "quorum {} of {p} does not include {p}",
                        q.0
                    )));
                }
            }
        }
        for f in &fault_model {
            if !f.is_subset(all) {
                return Err(TrustModelError::InvalidModel(format!(
                    "faulty set {f} names a process outside 0..{n}"
                )));
            }
        }
        let fault_model = if fault_model.is_empty() {
            vec![ProcessSet::EMPTY]
        } else {
            fault_model
        };
        Ok(TrustModel {
            n,
            quorums,
            fault_model,
        })
    }

    /// Every process has the single quorum `Π`.
    pub fn all_trust(n: usize, fault_model: Vec<ProcessSet>) -> Result<Self> {
        let all = Quorum(ProcessSet::full(n));
        TrustModel::new(n, vec![vec![all]; n], fault_model)
    }

    /// Uniform model: quorums are all `q`-subsets, at most `f` processes fail.
    pub fn uniform(n: usize, q: usize, f: usize) -> Result<Self> {
        if q == 0 || q > n || f >= q {
            return Err(TrustModelError::InvalidParameters(format!(
                "uniform model needs 0 < q <= n and f < q (n={n}, q={q}, f={f})"
            )));
        }
        if n > MAX_PROCESSES {
            return Err(TrustModelError::InvalidParameters(format!(
                "n={n} exceeds the {MAX_PROCESSES}-process limit"
            )));
        }
        const MAX_SETS: u128 = 1 << 16;
        if binomial(n - 1, q - 1) > MAX_SETS || binomial(n, f) > MAX_SETS {
            return Err(TrustModelError::SizeLimitExceeded {
                what: format!("explicit uniform model for n={n}, q={q}, f={f}"),
                partial: None,
            });
        }
        let all = ProcessSet::full(n);
        let quorums = (0..n)
            .map(|i| {
                let p = ProcessId::from(i);
                k_subsets(all.without(p), q - 1)
                    .into_iter()
                    .map(|s| Quorum(s.with(p)))
                    .collect()
            })
            .collect();
        TrustModel::new(n, quorums, k_subsets(all, f))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.n).map(ProcessId::from)
    }

    pub fn all(&self) -> ProcessSet {
        ProcessSet::full(self.n)
    }

    pub fn quorums(&self, p: ProcessId) -> &[Quorum] {
        &self.quorums[p.index()]
    }

    /// The maximal faulty sets as given.
    pub fn fault_model(&self) -> &[ProcessSet] {
        &self.fault_model
    }

    /// Whether `f` belongs to the inclusion-closed fault model.
    pub fn admits_faulty_set(&self, f: ProcessSet) -> bool {
        self.fault_model.iter().any(|m| f.is_subset(*m))
    }

    /// Every member of the downward closure, largest sets first, then
    /// lexicographically.
    pub fn faulty_sets(&self) -> Vec<ProcessSet> {
        let mut all: BTreeSet<ProcessSet> = BTreeSet::new();
        for m in &self.fault_model {
            all.extend(m.subsets());
        }
        let mut v: Vec<_> = all.into_iter().collect();
        v.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        v
    }

    /// Number of graphs in the family when quorum maps vary over the
    /// correct processes only.
    pub fn graph_family_size(&self) -> u128 {
        self.faulty_sets()
            .iter()
            .map(|f| {
                self.all()
                    .difference(*f)
                    .iter()
                    .map(|p| self.quorums(p).len() as u128)
                    .fold(1u128, |a, b| a.saturating_mul(b))
            })
            .fold(0u128, |a, b| a.saturating_add(b))
    }
}

/// True iff `p` has a quorum disjoint from `faulty`.
pub fn is_live(model: &TrustModel, p: ProcessId, faulty: ProcessSet) -> bool {
    model.quorums(p).iter().any(|q| q.0.is_disjoint(faulty))
}

/// One chosen quorum per process.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuorumMap(pub Vec<Quorum>);

impl QuorumMap {
    pub fn get(&self, p: ProcessId) -> Quorum {
        self.0[p.index()]
    }

    /// Picks each process's lexicographically smallest quorum.
    pub fn first_choices(model: &TrustModel) -> Self {
        QuorumMap(
            model
                .processes()
                .map(|p| *model.quorums(p).iter().min().expect("nonempty"))
                .collect(),
        )
    }

    pub fn validate(&self, model: &TrustModel) -> Result<()> {
        if self.0.len() != model.n() {
            return Err(TrustModelError::InvalidModel(format!(
                "quorum map covers {} processes, model has {}",
                self.0.len(),
                model.n()
            )));
        }
        for p in model.processes() {
            let q = self.get(p);
            if !model.quorums(p).contains(&q) {
                return Err(TrustModelError::InvalidQuorumMap {
                    process: p,
                    quorum: q.0,
                });
            }
        }
        Ok(())
    }
}

/// The graph of correct processes whose chosen quorums meet in a correct process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrustGraph {
    pub nodes: ProcessSet,
    pub faulty: ProcessSet,
    pub quorum_map: QuorumMap,
    adjacency: Vec<ProcessSet>,
}

impl TrustGraph {
    /// Neighbours of `p` (never includes `p`).
    pub fn neighbors(&self, p: ProcessId) -> ProcessSet {
        self.adjacency[p.index()]
    }

    pub fn has_edge(&self, p: ProcessId, q: ProcessId) -> bool {
        self.adjacency[p.index()].contains(q)
    }

    /// Edges as ordered pairs `(p, q)` with `p < q`.
    pub fn edges(&self) -> Vec<(ProcessId, ProcessId)> {
        let mut out = Vec::new();
        for p in self.nodes.iter() {
            for q in self.neighbors(p).iter().filter(|q| *q > p) {
                out.push((p, q));
            }
        }
        out
    }

    pub fn is_complete(&self) -> bool {
        self.nodes
            .iter()
            .all(|p| self.neighbors(p) == self.nodes.without(p))
    }

    pub fn is_independent(&self, set: ProcessSet) -> bool {
        set.is_subset(self.nodes) && set.iter().all(|p| self.neighbors(p).is_disjoint(set))
    }
}

pub fn build_trust_graph(
    model: &TrustModel,
    faulty: ProcessSet,
    quorum_map: &QuorumMap,
) -> Result<TrustGraph> {
    if !model.admits_faulty_set(faulty) {
        return Err(TrustModelError::InvalidFaultySet(faulty));
    }
    quorum_map.validate(model)?;
    let nodes = model.all().difference(faulty);
    let mut adjacency = vec![ProcessSet::EMPTY; model.n()];
    for p in nodes.iter() {
        for q in nodes.iter().filter(|q| *q > p) {
            let meet = quorum_map.get(p).0.intersection(quorum_map.get(q).0);
            if !meet.is_subset(faulty) {
                adjacency[p.index()].insert(q);
                adjacency[q.index()].insert(p);
            }
        }
    }
    Ok(TrustGraph {
        nodes,
        faulty,
        quorum_map: quorum_map.clone(),
        adjacency,
    })
}

/// Exact maximum independent set; among maximum sets the lexicographically
/// smallest is returned.
pub fn max_independent_set(g: &TrustGraph, limits: &Limits) -> Result<ProcessSet> {
    if g.nodes.len() > limits.max_mis_nodes {
        return Err(TrustModelError::SizeLimitExceeded {
            what: format!(
                "graph has {} nodes, exact search is capped at {}",
                g.nodes.len(),
                limits.max_mis_nodes
            ),
            partial: None,
        });
    }
    Ok(mis_masks(&g.adjacency, g.nodes))
}

pub fn independence_number(g: &TrustGraph, limits: &Limits) -> Result<usize> {
    max_independent_set(g, limits).map(|s| s.len())
}

/// Branch and bound over bitmasks. Branches on the lowest candidate,
/// including it first, and only replaces the incumbent on strict
/// improvement, so the first maximum found is the lexicographically
/// smallest one.
fn mis_masks(adjacency: &[ProcessSet], nodes: ProcessSet) -> ProcessSet {
    fn go(
        adjacency: &[ProcessSet],
        candidates: ProcessSet,
        current: ProcessSet,
        best: &mut ProcessSet,
    ) {
        let Some(v) = candidates.first() else {
            if current.len() > best.len() {
                *best = current;
            }
            return;
        };
        if current.len() + candidates.len() <= best.len() {
            return;
        }
        let nv = adjacency[v.index()].intersection(candidates);
        go(
            adjacency,
            candidates.without(v).difference(nv),
            current.with(v),
            best,
        );
        // An isolated candidate always belongs to some maximum set that is
        // lexicographically no larger, so skipping it cannot help.
        if !nv.is_empty() {
            go(adjacency, candidates.without(v), current, best);
        }
    }
    let mut best = ProcessSet::EMPTY;
    go(adjacency, nodes, ProcessSet::EMPTY, &mut best);
    best
}

/// A graph of the family together with a maximum independent set of it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InconsistencyWitness {
    pub faulty: ProcessSet,
    pub quorum_map: QuorumMap,
    pub independent_set: ProcessSet,
}

impl InconsistencyWitness {
    pub fn size(&self) -> usize {
        self.independent_set.len()
    }
}

/// Per-process quorum options for a fixed faulty set: only the correct part
/// of a quorum matters, and a quorum whose correct part contains another's
/// is dominated.
fn minimal_correct_parts(model: &TrustModel, p: ProcessId, faulty: ProcessSet) -> Vec<(ProcessSet, Quorum)> {
    let mut qs: Vec<Quorum> = model.quorums(p).to_vec();
    qs.sort();
    let mut parts: Vec<(ProcessSet, Quorum)> = Vec::new();
    for q in qs {
        let part = q.0.difference(faulty);
        if parts.iter().any(|(other, _)| other.is_subset(part)) {
            continue;
        }
        parts.retain(|(other, _)| !part.is_subset(*other));
        parts.push((part, q));
    }
    parts.sort();
    parts
}

/// Largest set of correct processes that can be given pairwise
/// correct-disjoint quorums under `faulty`, with the quorums chosen.
fn max_spread_for(
    model: &TrustModel,
    faulty: ProcessSet,
    steps: &mut u64,
    budget: u64,
) -> std::result::Result<(usize, Vec<(ProcessId, Quorum)>), usize> {
    let correct: Vec<ProcessId> = model.all().difference(faulty).iter().collect();
    let options: Vec<Vec<(ProcessSet, Quorum)>> = correct
        .iter()
        .map(|&p| minimal_correct_parts(model, p, faulty))
        .collect();

    struct Search<'a> {
        correct: &'a [ProcessId],
        options: &'a [Vec<(ProcessSet, Quorum)>],
        steps: &'a mut u64,
        budget: u64,
        best: Vec<(ProcessId, Quorum)>,
        current: Vec<(ProcessId, Quorum)>,
    }

    impl Search<'_> {
        fn go(&mut self, idx: usize, used: ProcessSet) -> bool {
            *self.steps += 1;
            if *self.steps > self.budget {
                return false;
            }
            if idx == self.correct.len() {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
                return true;
            }
            let remaining = self.correct[idx..]
                .iter()
                .filter(|p| !used.contains(**p))
                .count();
            if self.current.len() + remaining <= self.best.len() {
                return true;
            }
            let p = self.correct[idx];
            if !used.contains(p) {
                for &(part, q) in &self.options[idx] {
                    if part.is_disjoint(used) {
                        self.current.push((p, q));
                        let ok = self.go(idx + 1, used.union(part));
                        self.current.pop();
                        if !ok {
                            return false;
                        }
                    }
                }
            }
            self.go(idx + 1, used)
        }
    }

    let mut search = Search {
        correct: &correct,
        options: &options,
        steps,
        budget,
        best: Vec::new(),
        current: Vec::new(),
    };
    if search.go(0, ProcessSet::EMPTY) {
        Ok((search.best.len(), search.best))
    } else {
        Err(search.best.len())
    }
}

/// Exact inconsistency number and a witness, by a search over faulty sets and
/// sets of correct processes with pairwise correct-disjoint quorums. Only the
/// quorums of the chosen processes matter for independence, so this explores
/// far fewer states than enumerating whole quorum maps.
///
/// Faulty sets are tried largest first, then lexicographically; the witness
/// takes the first faulty set attaining the maximum, quorums of members of
/// the independent set as found by the search, and each other process's
/// smallest quorum. The reported independent set is the lexicographically
/// smallest maximum independent set of that graph.
pub fn max_independent_set_witness(
    model: &TrustModel,
    limits: &Limits,
) -> Result<InconsistencyWitness> {
    analyze_faulty_sets(model, limits, &model.faulty_sets())
}

/// Like [`max_independent_set_witness`], restricted to the given faulty sets.
pub fn analyze_faulty_sets(
    model: &TrustModel,
    limits: &Limits,
    faulty_sets: &[ProcessSet],
) -> Result<InconsistencyWitness> {
    let mut steps = 0u64;
    let mut best: Option<(ProcessSet, Vec<(ProcessId, Quorum)>)> = None;
    let mut best_len = 0usize;
    for &f in faulty_sets {
        if !model.admits_faulty_set(f) {
            return Err(TrustModelError::InvalidFaultySet(f));
        }
        match max_spread_for(model, f, &mut steps, limits.enumeration_budget) {
            Ok((len, chosen)) => {
                if best.is_none() || len > best_len {
                    best_len = len;
                    best = Some((f, chosen));
                }
            }
            Err(partial) => {
                return Err(TrustModelError::SizeLimitExceeded {
                    what: format!(
                        "inconsistency search exceeded {} steps",
                        limits.enumeration_budget
                    ),
                    partial: Some(best_len.max(partial)),
                })
            }
        }
    }
    let (faulty, chosen) = best.ok_or_else(|| {
        TrustModelError::InvalidParameters("no faulty sets to analyze".into())
    })?;
    let mut map = QuorumMap::first_choices(model);
    for (p, q) in chosen {
        map.0[p.index()] = q;
    }
    let graph = build_trust_graph(model, faulty, &map)?;
    let independent_set = max_independent_set(&graph, limits)?;
    debug_assert_eq!(independent_set.len(), best_len);
    Ok(InconsistencyWitness {
        faulty,
        quorum_map: map,
        independent_set,
    })
}

pub fn inconsistency_number(model: &TrustModel, limits: &Limits) -> Result<usize> {
    max_independent_set_witness(model, limits).map(|w| w.size())
}

/// Reference route: enumerates every faulty set in the closure and every
/// quorum map over the correct processes, builds each graph and solves its
/// MIS exactly. Pairwise intersection checks are tabulated once per faulty
/// set and reused across quorum maps. `faulty_sets` defaults to the whole
/// closure when `None`.
pub fn inconsistency_number_by_enumeration(
    model: &TrustModel,
    limits: &Limits,
    faulty_sets: Option<&[ProcessSet]>,
) -> Result<usize> {
    let owned;
    let faulty_sets = match faulty_sets {
        Some(f) => f,
        None => {
            owned = model.faulty_sets();
            &owned
        }
    };
    let mut graphs = 0u64;
    let mut best = 0usize;
    for &f in faulty_sets {
        if !model.admits_faulty_set(f) {
            return Err(TrustModelError::InvalidFaultySet(f));
        }
        let correct: Vec<ProcessId> = model.all().difference(f).iter().collect();
        if correct.len() > limits.max_mis_nodes {
            return Err(TrustModelError::SizeLimitExceeded {
                what: format!("{} correct processes exceed the MIS cap", correct.len()),
                partial: Some(best),
            });
        }
        let qs: Vec<&[Quorum]> = correct.iter().map(|&p| model.quorums(p)).collect();
        if qs.iter().any(|q| q.len() > 64) {
            return Err(TrustModelError::SizeLimitExceeded {
                what: "a process has more than 64 quorums".into(),
                partial: Some(best),
            });
        }
        // meets[a][i][b] = bitmask over quorum indices j of correct[b] such
        // that quorum i of correct[a] meets quorum j of correct[b] outside f.
        let meets: Vec<Vec<Vec<u64>>> = (0..correct.len())
            .map(|a| {
                qs[a]
                    .iter()
                    .map(|qa| {
                        (0..correct.len())
                            .map(|b| {
                                qs[b].iter().enumerate().fold(0u64, |m, (j, qb)| {
                                    if qa.0.intersection(qb.0).is_subset(f) {
                                        m
                                    } else {
                                        m | (1u64 << j)
                                    }
                                })
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut choice = vec![0usize; correct.len()];
        loop {
            graphs += 1;
            if graphs > limits.enumeration_budget {
                return Err(TrustModelError::SizeLimitExceeded {
                    what: format!(
                        "enumeration exceeded {} graphs",
                        limits.enumeration_budget
                    ),
                    partial: Some(best),
                });
            }
            let mut adjacency = vec![ProcessSet::EMPTY; model.n()];
            let mut nodes = ProcessSet::EMPTY;
            for a in 0..correct.len() {
                nodes.insert(correct[a]);
                for b in (a + 1)..correct.len() {
                    if meets[a][choice[a]][b] & (1u64 << choice[b]) != 0 {
                        adjacency[correct[a].index()].insert(correct[b]);
                        adjacency[correct[b].index()].insert(correct[a]);
                    }
                }
            }
            best = best.max(mis_masks(&adjacency, nodes).len());

            // odometer, last process fastest
            let mut i = correct.len();
            let exhausted = loop {
                if i == 0 {
                    break true;
                }
                i -= 1;
                choice[i] += 1;
                if choice[i] < qs[i].len() {
                    break false;
                }
                choice[i] = 0;
            };
            if exhausted {
                break;
            }
        }
    }
    Ok(best)
}

/// Closed form for uniform models: `⌊(n − f) / (q − f)⌋`.
pub fn uniform_inconsistency(n: usize, q: usize, f: usize) -> Result<usize> {
    if q == 0 || q > n {
        return Err(TrustModelError::InvalidParameters(format!(
            "quorum size must satisfy 0 < q <= n (n={n}, q={q})"
        )));
    }
    if f >= q {
        return Err(TrustModelError::InvalidParameters(format!(
            "need f < q (q={q}, f={f})"
        )));
    }
    Ok((n - f) / (q - f))
}

/// A run of consecutive fault thresholds sharing one inconsistency number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub f_min: usize,
    pub f_max: usize,
    pub inconsistency: usize,
}

/// Closed-form inconsistency numbers of the uniform model for every
/// `f < q`, with equal neighbouring values merged.
pub fn uniform_table(n: usize, q: usize) -> Result<Vec<TableRow>> {
    let mut rows: Vec<TableRow> = Vec::new();
    for f in 0..q {
        let v = uniform_inconsistency(n, q, f)?;
        match rows.last_mut() {
            Some(last) if last.inconsistency == v => last.f_max = f,
            _ => rows.push(TableRow {
                f_min: f,
                f_max: f,
                inconsistency: v,
            }),
        }
    }
    Ok(rows)
}

/// Two tab-separated lines: fault ranges, then inconsistency numbers.
pub fn format_table(rows: &[TableRow]) -> String {
    let ranges: Vec<String> = rows
        .iter()
        .map(|r| {
            if r.f_min == r.f_max {
                r.f_min.to_string()
            } else {
                format!("{}-{}", r.f_min, r.f_max)
            }
        })
        .collect();
    let values: Vec<String> = rows.iter().map(|r| r.inconsistency.to_string()).collect();
    format!("faulty\t{}\ninconsistency\t{}\n", ranges.join("\t"), values.join("\t"))
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// All `k`-element subsets of `from`, in lexicographic order.
fn k_subsets(from: ProcessSet, k: usize) -> Vec<ProcessSet> {
    fn go(items: &[ProcessId], k: usize, start: usize, cur: ProcessSet, out: &mut Vec<ProcessSet>) {
        if cur.len() == k {
            out.push(cur);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            go(items, k, i + 1, cur.with(items[i]), out);
        }
    }
    let items = from.to_vec();
    let mut out = Vec::new();
    go(&items, k, 0, ProcessSet::EMPTY, &mut out);
    out
}
