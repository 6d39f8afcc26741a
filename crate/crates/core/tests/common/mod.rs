//! Random models, scenarios and histories shared by the integration tests,
//! plus brute-force oracles that share no code with the library routines
//! they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ksat_core::engine::{Envelope, Message};
use ksat_core::ledger::{Accusation, History, HistoryCollection, Issuer, Transaction};
use ksat_core::sigscheme::{Scheme, TransactionRef};
use ksat_core::sim::{HonestAction, KeySpec, Scenario, SchedulerSpec, DEFAULT_GENESIS_AMOUNT};
use ksat_core::trust_model::{Quorum, TrustModel};
use ksat_core::{ProcessId, ProcessSet};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each member of `from` independently with probability `p`.
pub fn random_subset(rng: &mut ChaCha8Rng, from: ProcessSet, p: f64) -> ProcessSet {
    from.iter().filter(|_| rng.gen_bool(p)).fold(ProcessSet::EMPTY, ProcessSet::with)
}

pub fn nonempty_subset(rng: &mut ChaCha8Rng, from: ProcessSet, p: f64) -> ProcessSet {
    loop {
        let s = random_subset(rng, from, p);
        if !s.is_empty() || from.is_empty() {
            return s;
        }
    }
}

/// A random self-inclusive model on `min_n..=max_n` processes with one to
/// three quorums per process and up to two maximal faulty sets.
pub fn random_model(rng: &mut ChaCha8Rng, min_n: usize, max_n: usize) -> TrustModel {
    loop {
        let n = rng.gen_range(min_n..=max_n);
        let all = ProcessSet::full(n);
        let density = rng.gen_range(0.25..0.9);
        let quorums: Vec<Vec<Quorum>> = (0..n as u32)
            .map(|i| {
                let me = ProcessId(i);
                let mut qs: Vec<Quorum> = (0..rng.gen_range(1..=3))
                    .map(|_| Quorum(random_subset(rng, all.without(me), density).with(me)))
                    .collect();
                qs.sort();
                qs.dedup();
                qs
            })
            .collect();
        let faults: Vec<ProcessSet> = (0..rng.gen_range(0..=2))
            .map(|_| {
                let size = rng.gen_range(1..=(n / 2).max(1));
                let mut members: Vec<u32> = (0..n as u32).collect();
                members.shuffle(rng);
                members[..size].iter().map(|&i| ProcessId(i)).fold(ProcessSet::EMPTY, ProcessSet::with)
            })
            .collect();
        if let Ok(m) = TrustModel::new(n, quorums, faults) {
            return m;
        }
    }
}

/// Positive amounts summing to `total`, paid to up to three of `to`.
fn split(rng: &mut ChaCha8Rng, total: u64, to: ProcessSet) -> Vec<(ProcessId, u64)> {
    let mut recipients: Vec<ProcessId> = to.iter().collect();
    recipients.shuffle(rng);
    recipients.truncate(rng.gen_range(1..=3usize.min(recipients.len()).min(total as usize)));
    let mut left = total;
    let mut out = Vec::new();
    for (k, p) in recipients.iter().enumerate() {
        let remaining = (recipients.len() - k - 1) as u64;
        let amount = if remaining == 0 {
            left
        } else {
            rng.gen_range(1..=left - remaining)
        };
        left -= amount;
        out.push((*p, amount));
    }
    out
}

pub fn random_scheduler(rng: &mut ChaCha8Rng, all: ProcessSet) -> SchedulerSpec {
    match rng.gen_range(0..10) {
        0..=4 => SchedulerSpec::Random { seed: rng.gen() },
        5 | 6 => SchedulerSpec::Fifo,
        _ => SchedulerSpec::Adversarial {
            phases: (0..rng.gen_range(1..=3))
                .map(|_| nonempty_subset(rng, all, 0.5))
                .collect(),
        },
    }
}

/// Byzantine script drawn from the equivocating-send grammar:
///
/// ```text
/// script := spend* accusation?
/// spend  := REQ(tx, to) ECHO(tx, from, to)*
/// tx     := fresh spend of the issuer's genesis output (valid or overspent)
/// ```
///
/// Every signature belongs to a faulty process.
pub fn random_byzantine_script(
    rng: &mut ChaCha8Rng,
    model: &TrustModel,
    faulty: ProcessSet,
    keys: KeySpec,
    genesis: &Transaction,
) -> Vec<Envelope> {
    let all = model.all();
    let mut out = Vec::new();
    for f in faulty.iter() {
        let mut requests = Vec::new();
        for j in 0..rng.gen_range(1..=3u8) {
            // one in five spends is invalid: it pays more than it has
            let total = if rng.gen_bool(0.2) {
                DEFAULT_GENESIS_AMOUNT + 1
            } else {
                DEFAULT_GENESIS_AMOUNT
            };
            let tx = Transaction::new(f, split(rng, total, all), [genesis.id()]).with_message(vec![j]);
            let request = tx.sign(&keys.key(f));
            out.push(Envelope {
                sender: f,
                recipients: nonempty_subset(rng, all, 0.5),
                message: Message::Req {
                    request: request.clone(),
                },
            });
            let echoers = random_subset(rng, faulty, 0.7);
            for g in echoers.iter() {
                out.push(Envelope {
                    sender: g,
                    recipients: nonempty_subset(rng, all, 0.5),
                    message: Message::Echo {
                        request: request.clone(),
                        echo_signature: keys.key(g).sign(&tx.encode()),
                    },
                });
            }
            requests.push(request);
        }
        if requests.len() >= 2 && rng.gen_bool(0.3) {
            out.push(Envelope {
                sender: f,
                recipients: nonempty_subset(rng, all, 0.5),
                message: Message::Acc {
                    accusation: Accusation::new(
                        ProcessSet::singleton(f),
                        [requests[0].clone(), requests[1].clone()],
                    ),
                },
            });
        }
    }
    out.shuffle(rng);
    out
}

/// Honest transfers: some correct processes spend their genesis output, and
/// some then pass on what earlier honest transfers paid them.
pub fn random_honest_actions(
    rng: &mut ChaCha8Rng,
    model: &TrustModel,
    correct: ProcessSet,
    genesis: &Transaction,
) -> Vec<HonestAction> {
    let all = model.all();
    let mut out: Vec<HonestAction> = Vec::new();
    for p in random_subset(rng, correct, 0.6).iter() {
        let tx = Transaction::new(p, split(rng, DEFAULT_GENESIS_AMOUNT, all), [genesis.id()]);
        out.push(HonestAction { issuer: p, tx });
    }
    let mut spent: BTreeSet<(ProcessId, TransactionRef)> = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=2) {
        let Some(q) = correct.iter().collect::<Vec<_>>().choose(rng).copied() else {
            break;
        };
        let inputs: Vec<&Transaction> = out
            .iter()
            .map(|a| &a.tx)
            .filter(|t| t.pays(q) > 0 && !spent.contains(&(q, t.id())))
            .collect();
        if inputs.is_empty() {
            continue;
        }
        let total: u64 = inputs.iter().map(|t| t.pays(q)).sum();
        let refs: Vec<TransactionRef> = inputs.iter().map(|t| t.id()).collect();
        spent.extend(refs.iter().map(|r| (q, *r)));
        let tx = Transaction::new(q, split(rng, total, all), refs);
        out.push(HonestAction { issuer: q, tx });
    }
    out
}

/// A complete random scenario on `model`.
pub fn random_scenario(rng: &mut ChaCha8Rng, model: &TrustModel) -> Scenario {
    let mut s = Scenario::quiet(model.clone());
    let faulty_sets = model.faulty_sets();
    let nonempty: Vec<ProcessSet> = faulty_sets.iter().copied().filter(|f| !f.is_empty()).collect();
    s.faulty = if !nonempty.is_empty() && rng.gen_bool(0.85) {
        *nonempty.choose(rng).unwrap()
    } else {
        ProcessSet::EMPTY
    };
    s.keys = KeySpec {
        scheme: if rng.gen_bool(0.1) { Scheme::Ed25519 } else { Scheme::Mac },
        seed: rng.gen(),
    };
    s.byzantine = random_byzantine_script(rng, model, s.faulty, s.keys, &s.genesis);
    s.honest = random_honest_actions(rng, model, s.correct(), &s.genesis);
    s.scheduler = random_scheduler(rng, model.all());
    s
}

/// A random well-formed history built by letting random processes spend
/// random subsets of what they hold.
pub fn random_well_formed_history(rng: &mut ChaCha8Rng) -> History {
    let n = rng.gen_range(2..=6u32);
    let genesis = Transaction::genesis((0..n).map(|i| (ProcessId(i), rng.gen_range(1..=20))));
    let all = ProcessSet::full(n as usize);
    let mut h = History::new(genesis);
    let mut spent: BTreeSet<(ProcessId, TransactionRef)> = BTreeSet::new();
    for step in 0..rng.gen_range(0..=15u32) {
        let w = ProcessId(rng.gen_range(0..n));
        let unspent: Vec<&Transaction> = h
            .iter()
            .filter(|t| t.pays(w) > 0 && !spent.contains(&(w, t.id())))
            .collect();
        let inputs: Vec<&Transaction> = unspent.into_iter().filter(|_| rng.gen_bool(0.6)).collect();
        if inputs.is_empty() {
            continue;
        }
        let total: u64 = inputs.iter().map(|t| t.pays(w)).sum();
        let refs: Vec<TransactionRef> = inputs.iter().map(|t| t.id()).collect();
        spent.extend(refs.iter().map(|r| (w, *r)));
        let tx = Transaction::new(w, split(rng, total, all), refs).with_message(step.to_le_bytes().to_vec());
        h.insert(tx);
    }
    h
}

// ---------------------------------------------------------------------------
// oracles

/// Maximum independent set size by trying every subset, largest first.
pub fn mis_oracle(nodes: &[ProcessId], edge: impl Fn(ProcessId, ProcessId) -> bool) -> usize {
    let k = nodes.len();
    let mut best = 0;
    for mask in 0u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let chosen: Vec<ProcessId> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| nodes[i]).collect();
        let independent = chosen
            .iter()
            .enumerate()
            .all(|(i, &a)| chosen[i + 1..].iter().all(|&b| !edge(a, b)));
        if independent {
            best = size;
        }
    }
    best
}

/// Spending number by comparing every pair of spends across the union.
pub fn spending_oracle(g: &HistoryCollection) -> usize {
    let txs: Vec<&Transaction> = {
        let mut seen = BTreeMap::new();
        for h in g.0.values() {
            for t in h.iter() {
                seen.insert(t.id(), t);
            }
        }
        seen.into_values().collect()
    };
    let mut best = 0;
    for a in &txs {
        if a.issuer() == Issuer::Genesis {
            continue;
        }
        for input in a.inputs() {
            let count = txs
                .iter()
                .filter(|b| b.issuer() == a.issuer() && b.inputs().contains(input))
                .count();
            best = best.max(count);
        }
    }
    best
}

/// Whether two histories agree up to inclusion on every issuer's projection.
fn compatible_oracle(a: &History, b: &History) -> bool {
    let issuers: BTreeSet<Issuer> = a.iter().chain(b.iter()).map(|t| t.issuer()).collect();
    issuers.into_iter().all(|r| {
        let pa: BTreeSet<TransactionRef> = a.iter().filter(|t| t.issuer() == r).map(|t| t.id()).collect();
        let pb: BTreeSet<TransactionRef> = b.iter().filter(|t| t.issuer() == r).map(|t| t.id()).collect();
        pa.is_subset(&pb) || pb.is_subset(&pa)
    })
}

/// Fewest clusters whose union covers every history: lists every cluster,
/// then tries covers of growing size.
pub fn cover_oracle(g: &HistoryCollection) -> usize {
    let hs: Vec<&History> = g.0.values().collect();
    let m = hs.len();
    if m == 0 {
        return 0;
    }
    let clusters: Vec<u32> = (1u32..(1 << m))
        .filter(|&mask| {
            (0..m).all(|i| {
                (0..m).all(|j| {
                    i >= j || mask & (1 << i) == 0 || mask & (1 << j) == 0 || compatible_oracle(hs[i], hs[j])
                })
            })
        })
        .collect();
    let full = (1u32 << m) - 1;
    fn covers(clusters: &[u32], k: usize, acc: u32, full: u32) -> bool {
        if acc == full {
            return true;
        }
        if k == 0 {
            return false;
        }
        clusters
            .iter()
            .enumerate()
            .any(|(i, &c)| covers(&clusters[i + 1..], k - 1, acc | c, full))
    }
    (1..=m).find(|&k| covers(&clusters, k, 0, full)).unwrap()
}
