//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Runs from the randomized scenario batch (criterion 4) and the attack batch
//! (criterion 5) are shared with the criteria that inspect runs.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use ksat_core::engine::{EngineConfig, Envelope, Message, ProcessState};
use ksat_core::ledger::{
    balance, conflicts, is_well_formed, spending_number, verify_acc, History, HistoryCollection,
    Issuer, Transaction,
};
use ksat_core::sigscheme::{content_hash, Scheme, TransactionRef};
use ksat_core::sim::{
    kcb_broadcast, kcb_collect, run, synthesize_multispend_attack, AttackError, HonestAction,
    KeySpec, Outcome, RunOptions, RunReport, Scenario, SchedulerSpec,
};
use ksat_core::trust_model::{
    build_trust_graph, format_table, inconsistency_number, inconsistency_number_by_enumeration,
    independence_number, is_live, max_independent_set, max_independent_set_witness,
    uniform_inconsistency, uniform_table, Limits, Quorum, QuorumMap, TrustModel,
};
use ksat_core::{ProcessId, ProcessSet};
use rand::seq::SliceRandom;
use rand::Rng;

// Pinned sizes and time limits.
const TABLE_LIMIT: Duration = Duration::from_secs(1);
const CLOSED_FORM_LIMIT: Duration = Duration::from_secs(60);
const EXAMPLE_LIMIT: Duration = Duration::from_secs(1);
const MIN_SCENARIOS: usize = 1000;
const SCENARIOS_PER_MODEL: usize = 4;
const MAX_SCENARIO_N: usize = 6;
const MIN_ATTACK_MODELS: usize = 50;
const BALANCE_HISTORIES: usize = 10_000;
const COVER_ORACLE_MAX: usize = 5;
const MIS_GRAPHS: usize = 2000;
const MIS_MAX_N: usize = 12;
const CONFLICT_TRIALS: usize = 500;
const DETERMINISM_RUNS: usize = 3;
const MUTANT_SEEDS: u64 = 500;
const ENUMERATION_CROSS_CHECK: u128 = 1 << 20;

type Check = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load_model(name: &str) -> TrustModel {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn set(ids: &[u32]) -> ProcessSet {
    ids.iter().map(|&i| ProcessId(i)).fold(ProcessSet::EMPTY, ProcessSet::with)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// A finished run together with what produced it.
struct Sample {
    scenario: Scenario,
    lambda: usize,
    report: RunReport,
}

// ---------------------------------------------------------------------------
// 1

fn table_reproduction() -> Check {
    let start = Instant::now();
    let text = format_table(&uniform_table(100, 67).map_err(|e| e.to_string())?);
    let elapsed = start.elapsed();
    let expected = "faulty\t0-33\t34-50\t51-55\t56-58\t59-60\t61\t62\t63\t64\t65\t66\n\
                    inconsistency\t1\t2\t3\t4\t5\t6\t7\t9\t12\t17\t34\n";
    ensure(text == expected, || format!("got {text:?}"))?;
    ensure(elapsed < TABLE_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("exact row in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 2

/// Exhaustive λ: for every faulty set and every set of correct processes,
/// search for quorum choices that pairwise meet only inside the faulty set.
fn lambda_oracle(model: &TrustModel) -> usize {
    fn choose(model: &TrustModel, f: ProcessSet, members: &[ProcessId], picked: &mut Vec<ProcessSet>) -> bool {
        let Some((&p, rest)) = members.split_first() else {
            return true;
        };
        for q in model.quorums(p) {
            if picked.iter().all(|o| o.intersection(q.0).is_subset(f)) {
                picked.push(q.0);
                if choose(model, f, rest, picked) {
                    return true;
                }
                picked.pop();
            }
        }
        false
    }
    let mut best = 0;
    for f in model.faulty_sets() {
        let correct = model.all().difference(f);
        for i in correct.subsets() {
            if i.len() > best {
                let members: Vec<ProcessId> = i.iter().collect();
                if choose(model, f, &members, &mut Vec::new()) {
                    best = i.len();
                }
            }
        }
    }
    best
}

fn closed_form_desk_scale() -> Check {
    let start = Instant::now();
    let limits = Limits::default();
    let (mut models, mut enumerated) = (0, 0);
    for n in 1..=7 {
        for q in 1..=n {
            for f in 0..q {
                let model = TrustModel::uniform(n, q, f).map_err(|e| e.to_string())?;
                let closed = uniform_inconsistency(n, q, f).map_err(|e| e.to_string())?;
                let exhaustive = lambda_oracle(&model);
                let searched = inconsistency_number(&model, &limits).map_err(|e| e.to_string())?;
                ensure(exhaustive == closed && searched == closed, || {
                    format!("n={n} q={q} f={f}: closed form {closed}, exhaustive {exhaustive}, search {searched}")
                })?;
                if model.graph_family_size() <= ENUMERATION_CROSS_CHECK {
                    let by_graphs = inconsistency_number_by_enumeration(&model, &limits, None)
                        .map_err(|e| e.to_string())?;
                    ensure(by_graphs == closed, || format!("n={n} q={q} f={f}: graph enumeration {by_graphs}"))?;
                    enumerated += 1;
                }
                models += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < CLOSED_FORM_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{models} uniform models match the closed form ({enumerated} also by full graph enumeration) in {elapsed:.2?}"
    ))
}

// ---------------------------------------------------------------------------
// 3

fn example_fixtures() -> Check {
    let start = Instant::now();
    let model = load_model("example1.json");
    let limits = Limits::default();
    let q = |ids: &[u32]| Quorum(set(ids));
    let s1 = QuorumMap(vec![q(&[0, 1, 2]), q(&[0, 1]), q(&[0, 1, 2, 3]), q(&[1, 3])]);
    let s2 = QuorumMap(vec![q(&[0, 1, 2]), q(&[1, 3]), q(&[0, 1, 2, 3]), q(&[2, 3])]);
    let faulty = set(&[2]);
    let alpha = |s: &QuorumMap| -> Result<usize, String> {
        let g = build_trust_graph(&model, faulty, s).map_err(|e| e.to_string())?;
        independence_number(&g, &limits).map_err(|e| e.to_string())
    };
    let (a1, a2) = (alpha(&s1)?, alpha(&s2)?);
    ensure(a1 == 1 && a2 == 2, || format!("independence numbers {a1} and {a2}"))?;
    let w = max_independent_set_witness(&model, &limits).map_err(|e| e.to_string())?;
    ensure(w.size() == 2 && w.independent_set == set(&[0, 3]), || format!("witness {:?}", w))?;
    let lambda = inconsistency_number(&model, &limits).map_err(|e| e.to_string())?;
    ensure(lambda == 2 && lambda_oracle(&model) == 2, || format!("λ = {lambda}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < EXAMPLE_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("α(S1) = 1, α(S2) = 2, λ = 2 with witness {{p1,p4}} in {elapsed:.2?}"))
}

// ---------------------------------------------------------------------------
// 4

fn scenario_batch() -> Vec<Sample> {
    let mut rng = rng(0x5eed_0004);
    let limits = Limits::default();
    let mut out = Vec::new();
    while out.len() < MIN_SCENARIOS {
        let model = random_model(&mut rng, 2, MAX_SCENARIO_N);
        let Ok(lambda) = inconsistency_number(&model, &limits) else {
            continue;
        };
        for _ in 0..SCENARIOS_PER_MODEL {
            let scenario = random_scenario(&mut rng, &model);
            let report = run(&scenario, &RunOptions::default()).expect("generated scenarios are valid");
            out.push(Sample {
                scenario,
                lambda,
                report,
            });
        }
    }
    out
}

/// Spending number at every accept, recomputed from the union of accepted
/// transactions with the pairwise oracle.
fn oracle_timeline(r: &RunReport) -> Vec<(usize, usize)> {
    let genesis = r.transactions[&r.genesis].clone();
    let mut union = History::new(genesis);
    let mut out = Vec::new();
    for (i, ev) in r.trace.iter().enumerate() {
        if let ksat_core::sim::TraceEvent::Accept { tx, .. } = ev {
            if union.insert(r.transactions[tx].clone()) {
                let g = HistoryCollection([(ProcessId(0), union.clone())].into());
                out.push((i, spending_oracle(&g)));
            }
        }
    }
    out
}

fn upper_bound(batch: &[Sample]) -> Check {
    let mut violations = Vec::new();
    let mut max_gamma = 0;
    let mut byzantine_runs = 0;
    for (k, s) in batch.iter().enumerate() {
        let r = &s.report;
        if !s.scenario.byzantine.is_empty() {
            byzantine_runs += 1;
        }
        let replay = r.replay_spending();
        if let Some(i) = replay.iter().position(|&g| g > s.lambda) {
            violations.push(format!("scenario {k}: γ = {} > λ = {} after {i} events", replay[i], s.lambda));
        }
        for (i, gamma) in oracle_timeline(r) {
            if gamma > s.lambda {
                violations.push(format!("scenario {k}: oracle γ = {gamma} > λ = {} at event {i}", s.lambda));
            }
            max_gamma = max_gamma.max(gamma);
        }
    }
    ensure(batch.len() >= MIN_SCENARIOS, || format!("only {} scenarios", batch.len()))?;
    ensure(violations.is_empty(), || violations.join("; "))?;
    Ok(format!(
        "{} scenarios ({byzantine_runs} with Byzantine scripts), γ ≤ λ at every prefix, largest γ seen {max_gamma}",
        batch.len()
    ))
}

// ---------------------------------------------------------------------------
// 5

struct AttackBatch {
    samples: Vec<Sample>,
    generated: usize,
    below_two: usize,
    empty_witness_only: usize,
}

fn attack_batch() -> AttackBatch {
    let mut rng = rng(0x5eed_0005);
    let limits = Limits::default();
    let mut batch = AttackBatch {
        samples: Vec::new(),
        generated: 0,
        below_two: 0,
        empty_witness_only: 0,
    };
    while batch.samples.len() < MIN_ATTACK_MODELS {
        let model = random_model(&mut rng, 3, MAX_SCENARIO_N);
        batch.generated += 1;
        let Ok(lambda) = inconsistency_number(&model, &limits) else {
            continue;
        };
        if lambda < 2 {
            batch.below_two += 1;
            continue;
        }
        let keys = KeySpec {
            scheme: Scheme::Mac,
            seed: rng.gen(),
        };
        // λ reached only with no faulty process leaves nobody to equivocate
        let attack = match synthesize_multispend_attack(&model, keys, &limits) {
            Ok(a) if a.witness.size() == lambda => a,
            Ok(_) | Err(AttackError::NotVulnerable) => {
                batch.empty_witness_only += 1;
                continue;
            }
            Err(e) => panic!("attack synthesis failed: {e}"),
        };
        let report = run(&attack.scenario, &RunOptions::default()).expect("synthesized scenario is valid");
        batch.samples.push(Sample {
            scenario: attack.scenario,
            lambda,
            report,
        });
    }
    batch
}

fn lower_bound(batch: &AttackBatch) -> Check {
    let misses: Vec<String> = batch
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.report.spending_number != s.lambda)
        .map(|(k, s)| format!("model {k}: γ = {} but λ = {}", s.report.spending_number, s.lambda))
        .collect();
    ensure(misses.is_empty(), || misses.join("; "))?;
    let largest = batch.samples.iter().map(|s| s.lambda).max().unwrap_or(0);
    Ok(format!(
        "{} models with λ ≥ 2 reach γ = λ (largest λ {largest}); of {} generated, {} had λ < 2 and {} reach λ only with no faulty process",
        batch.samples.len(),
        batch.generated,
        batch.below_two,
        batch.empty_witness_only
    ))
}

// ---------------------------------------------------------------------------
// 6

fn eight_properties(runs: &[&Sample]) -> Check {
    let mut failures = Vec::new();
    let mut quiescent = 0;
    for (k, s) in runs.iter().enumerate() {
        let r = &s.report;
        if r.outcome != Outcome::Quiescent {
            continue;
        }
        quiescent += 1;
        for (name, verdict) in r.properties.iter() {
            if !verdict.is_ok() {
                failures.push(format!("run {k}: {name} {verdict}"));
            }
        }
        // accuracy checked here directly as well, in both directions
        for (p, accs) in &r.accusations {
            for a in accs {
                if !verify_acc(a, &r.public_keys) || !a.accused.is_subset(r.faulty) {
                    failures.push(format!("run {k}: {p} holds a bad accusation against {:?}", a.accused));
                }
            }
        }
    }
    ensure(quiescent == runs.len(), || format!("{} runs did not quiesce", runs.len() - quiescent))?;
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("all eight properties hold on {quiescent} quiescent runs"))
}

// ---------------------------------------------------------------------------
// 7

fn balance_fuzz() -> Check {
    let mut rng = rng(0x5eed_0007);
    let mut txs = 0;
    for k in 0..BALANCE_HISTORIES {
        let h = random_well_formed_history(&mut rng);
        let wf = is_well_formed(&h, false);
        ensure(wf.is_ok(), || format!("history {k} malformed: {:?}", wf.violations))?;
        txs += h.len();
        let processes: BTreeSet<ProcessId> = h.iter().flat_map(|t| t.outputs().keys().copied()).collect();
        for w in processes {
            let b = balance(&h, w).map_err(|e| e.to_string())?;
            // what w still holds: incoming transactions it has not spent
            let spent: BTreeSet<TransactionRef> = h
                .iter()
                .filter(|t| t.issuer() == Issuer::Process(w))
                .flat_map(|t| t.inputs().iter().copied())
                .collect();
            let unspent: i128 = h.iter().filter(|t| !spent.contains(&t.id())).map(|t| t.pays(w) as i128).sum();
            ensure(b >= 0 && b == unspent, || format!("history {k}: balance of {w} is {b}, unspent {unspent}"))?;
        }
    }
    Ok(format!("{BALANCE_HISTORIES} histories ({txs} transactions), every balance ≥ 0"))
}

// ---------------------------------------------------------------------------
// 8

fn equivocating_kcb(
    rng: &mut rand_chacha::ChaCha8Rng,
    model: &TrustModel,
    faulty: ProcessSet,
    source: ProcessId,
    values: u8,
) -> Scenario {
    let mut s = Scenario::quiet(model.clone());
    s.faulty = faulty;
    s.keys = KeySpec {
        scheme: Scheme::Mac,
        seed: rng.gen(),
    };
    for v in 0..values {
        let tx = kcb_broadcast(source, &s.genesis, &[b'v', v]);
        let request = tx.sign(&s.keys.key(source));
        s.byzantine.push(Envelope {
            sender: source,
            recipients: nonempty_subset(rng, model.all(), 0.5),
            message: Message::Req {
                request: request.clone(),
            },
        });
        for g in faulty.iter() {
            s.byzantine.push(Envelope {
                sender: g,
                recipients: nonempty_subset(rng, model.all(), 0.6),
                message: Message::Echo {
                    echo_signature: s.keys.key(g).sign(&tx.encode()),
                    request: request.clone(),
                },
            });
        }
    }
    s.scheduler = random_scheduler(rng, model.all());
    s
}

fn kcb_reduction() -> Check {
    let options = RunOptions::default();
    let limits = Limits::default();
    let model = load_model("example1.json");

    let attack = synthesize_multispend_attack(
        &model,
        KeySpec {
            scheme: Scheme::Mac,
            seed: 8,
        },
        &limits,
    )
    .map_err(|e| e.to_string())?;
    let r = run(&attack.scenario, &options).map_err(|e| e.to_string())?;
    let m = kcb_collect(&r, attack.source).values().len();
    ensure(m == 2, || format!("Byzantine source: |M| = {m}"))?;

    // correct sources, with and without the faulty process
    let mut correct_runs = 0;
    for faulty in [ProcessSet::EMPTY, set(&[2])] {
        for source in model.all().difference(faulty).iter() {
            let mut s = Scenario::quiet(model.clone());
            s.faulty = faulty;
            let tx = kcb_broadcast(source, &s.genesis, b"value");
            s.honest.push(HonestAction { issuer: source, tx });
            let r = run(&s, &options).map_err(|e| e.to_string())?;
            let out = kcb_collect(&r, source);
            ensure(out.values().into_iter().all(|v| v == b"value"), || format!("{source}: {:?}", out.values()))?;
            for p in model.all().difference(faulty).iter().filter(|&p| is_live(&model, p, faulty)) {
                ensure(out.delivered.get(&p).map(Vec::as_slice) == Some(b"value"), || {
                    format!("correct source {source}: live {p} did not deliver with F = {faulty:?}")
                })?;
            }
            correct_runs += 1;
        }
    }

    // λ = 1 models: however the source equivocates, at most one value
    let mut rng = rng(0x5eed_0008);
    let mut models = vec![
        load_model("all_trust4.json"),
        TrustModel::uniform(4, 3, 1).unwrap(),
        TrustModel::uniform(5, 4, 1).unwrap(),
    ];
    while models.len() < 20 {
        let m = random_model(&mut rng, 3, MAX_SCENARIO_N);
        if inconsistency_number(&m, &limits).ok() == Some(1) && m.faulty_sets().iter().any(|f| !f.is_empty()) {
            models.push(m);
        }
    }
    let mut lambda_one_runs = 0;
    for m in &models {
        ensure(inconsistency_number(m, &limits).ok() == Some(1), || "fixture is not λ = 1".into())?;
        let faulty_sets: Vec<ProcessSet> = m.faulty_sets().into_iter().filter(|f| !f.is_empty()).collect();
        for _ in 0..10 {
            let faulty = *faulty_sets.choose(&mut rng).unwrap();
            let source = *faulty.to_vec().choose(&mut rng).unwrap();
            let s = equivocating_kcb(&mut rng, m, faulty, source, 3);
            let r = run(&s, &options).map_err(|e| e.to_string())?;
            let values = kcb_collect(&r, source).values().len();
            ensure(values <= 1, || format!("λ = 1 model delivered {values} values"))?;
            lambda_one_runs += 1;
        }
    }
    Ok(format!(
        "Byzantine source |M| = 2; {correct_runs} correct-source runs deliver to every live process; {lambda_one_runs} equivocations on λ = 1 models give |M| ≤ 1"
    ))
}

// ---------------------------------------------------------------------------
// 9

fn cluster_analysis(batch: &[Sample]) -> Check {
    let mut failures = Vec::new();
    let mut oracle_checked = 0;
    let mut above = 0;
    for (k, s) in batch.iter().enumerate() {
        let r = &s.report;
        let Some(cover) = &r.cover else {
            failures.push(format!("scenario {k}: no cover"));
            continue;
        };
        if cover.number() < r.spending_number {
            failures.push(format!("scenario {k}: cover {} < γ {}", cover.number(), r.spending_number));
        }
        if cover.number() > r.spending_number {
            above += 1;
        }
        for cluster in &cover.clusters {
            let hs: Vec<History> = cluster.iter().map(|&p| r.history(p)).collect();
            let union = History::union(r.genesis, hs.iter());
            if !is_well_formed(&union, false).is_ok() {
                failures.push(format!("scenario {k}: cluster {cluster:?} union is malformed"));
            }
        }
        let g = r.collection();
        if g.len() <= COVER_ORACLE_MAX {
            oracle_checked += 1;
            let expected = cover_oracle(&g);
            if expected != cover.number() {
                failures.push(format!("scenario {k}: cover {} but oracle {expected}", cover.number()));
            }
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!(
        "{} runs: cover ≥ γ (strictly above on {above}), cluster unions well-formed, {oracle_checked} covers match the brute-force oracle",
        batch.len()
    ))
}

// ---------------------------------------------------------------------------
// 10

fn mis_equivalence() -> Result<usize, String> {
    let mut rng = rng(0x5eed_0010);
    let limits = Limits::default();
    for k in 0..MIS_GRAPHS {
        let model = random_model(&mut rng, 1, MIS_MAX_N);
        let faulty = *model.faulty_sets().choose(&mut rng).unwrap();
        let map = QuorumMap(
            model
                .processes()
                .map(|p| *model.quorums(p).choose(&mut rng).unwrap())
                .collect(),
        );
        let g = build_trust_graph(&model, faulty, &map).map_err(|e| e.to_string())?;
        let nodes: Vec<ProcessId> = model.all().difference(faulty).iter().collect();
        let expected = mis_oracle(&nodes, |a, b| {
            !map.0[a.index()].0.intersection(map.0[b.index()].0).is_subset(faulty)
        });
        let got = independence_number(&g, &limits).map_err(|e| e.to_string())?;
        let set = max_independent_set(&g, &limits).map_err(|e| e.to_string())?;
        ensure(got == expected && set.len() == got && g.is_independent(set), || {
            format!("graph {k}: α = {got}, set {set:?}, oracle {expected}")
        })?;
    }
    Ok(MIS_GRAPHS)
}

fn spending_equivalence(runs: &[&Sample]) -> Result<usize, String> {
    let mut checked = 0;
    for (k, s) in runs.iter().enumerate() {
        let r = &s.report;
        let g = r.collection();
        let lib = spending_number(&g).map_err(|e| e.to_string())?;
        let oracle = spending_oracle(&g);
        ensure(lib == oracle && r.spending_number == oracle, || {
            format!("run {k}: library {lib}, reported {}, oracle {oracle}", r.spending_number)
        })?;
        // the incremental timeline agrees with the oracle at every accept
        let replay = r.replay_spending();
        for (i, gamma) in oracle_timeline(r) {
            ensure(replay[i + 1] == gamma, || format!("run {k}: event {i} replay {} oracle {gamma}", replay[i + 1]))?;
            checked += 1;
        }
        checked += 1;
    }
    Ok(checked)
}

fn conflict_equivalence() -> Result<usize, String> {
    let mut rng = rng(0x5eed_0011);
    let model = TrustModel::all_trust(4, vec![]).unwrap();
    let me = ProcessId(0);
    let genesis = ksat_core::sim::uniform_genesis(4, 10);
    let pool: Vec<TransactionRef> = std::iter::once(genesis.id())
        .chain((0..3u8).map(|i| content_hash(&[i])))
        .collect();
    let mut pairs_seen = 0;
    for k in 0..CONFLICT_TRIALS {
        let keys = KeySpec {
            scheme: Scheme::Mac,
            seed: rng.gen(),
        };
        let mut state = ProcessState::new(
            me,
            4,
            model.quorums(me).to_vec(),
            keys.key(me),
            keys.directory(4),
            genesis.clone(),
        );
        let mut delivered: Vec<Transaction> = Vec::new();
        for j in 0..rng.gen_range(2..=8u8) {
            let issuer = ProcessId(rng.gen_range(1..4));
            let inputs: Vec<TransactionRef> = pool.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
            let tx = Transaction::new(issuer, [(me, rng.gen_range(1..=10))], inputs).with_message(vec![j]);
            let request = tx.sign(&keys.key(issuer));
            if rng.gen_bool(0.7) {
                state.handle_req(issuer, request);
            } else {
                let echoer = ProcessId(rng.gen_range(1..4));
                let echo_signature = keys.key(echoer).sign(&tx.encode());
                state.handle_echo(echoer, request, echo_signature);
            }
            delivered.push(tx);
        }
        state.detect_conflicts();
        let found: BTreeSet<(TransactionRef, TransactionRef)> = state
            .accusations()
            .iter()
            .map(|a| {
                let (x, y) = (a.proof()[0].tx.id(), a.proof()[1].tx.id());
                (x.min(y), x.max(y))
            })
            .collect();
        let mut expected = BTreeSet::new();
        for a in &delivered {
            for b in &delivered {
                let same_issuer = a.issuer() == b.issuer();
                let shared = a.inputs().iter().any(|i| b.inputs().contains(i));
                if a.id() < b.id() && same_issuer && shared {
                    expected.insert((a.id(), b.id()));
                }
            }
        }
        ensure(found == expected, || format!("trial {k}: engine {} pairs, oracle {}", found.len(), expected.len()))?;
        // the library predicate agrees as well
        for a in &delivered {
            for b in &delivered {
                let pair = (a.id().min(b.id()), a.id().max(b.id()));
                ensure(conflicts(a, b) == (a.id() != b.id() && expected.contains(&pair)), || {
                    format!("trial {k}: conflicts() disagrees")
                })?;
            }
        }
        pairs_seen += expected.len();
    }
    Ok(pairs_seen)
}

fn oracle_equivalences(runs: &[&Sample]) -> Check {
    let graphs = mis_equivalence()?;
    let spending = spending_equivalence(runs)?;
    let pairs = conflict_equivalence()?;
    Ok(format!(
        "{graphs} graphs match the all-subsets MIS, {spending} spending values match the double loop, {pairs} conflict pairs over {CONFLICT_TRIALS} trials match"
    ))
}

// ---------------------------------------------------------------------------
// 11

fn determinism(runs: &[&Sample]) -> Check {
    for (k, s) in runs.iter().enumerate() {
        for _ in 1..DETERMINISM_RUNS {
            let again = run(&s.scenario, &RunOptions::default()).map_err(|e| e.to_string())?;
            ensure(again.trace_hash == s.report.trace_hash, || format!("run {k} replayed differently"))?;
        }
    }
    Ok(format!("{} scenarios give the same trace hash over {DETERMINISM_RUNS} runs", runs.len()))
}

// ---------------------------------------------------------------------------
// 12

fn mutation_sensitivity() -> Check {
    let engine = EngineConfig::without_used_input_guard().ok_or("built without test mutants")?;
    let options = RunOptions {
        engine,
        ..RunOptions::default()
    };
    let model = load_model("all_trust4.json");
    let lambda = inconsistency_number(&model, &Limits::default()).map_err(|e| e.to_string())?;
    ensure(lambda == 1, || format!("λ = {lambda}"))?;
    let mut rng = rng(0x5eed_0012);
    let faulty = set(&[3]);
    for seed in 0..MUTANT_SEEDS {
        let mut s = Scenario::quiet(model.clone());
        s.faulty = faulty;
        s.keys = KeySpec {
            scheme: Scheme::Mac,
            seed,
        };
        s.byzantine = random_byzantine_script(&mut rng, &model, faulty, s.keys, &s.genesis);
        s.scheduler = SchedulerSpec::Random { seed };
        let r = run(&s, &options).map_err(|e| e.to_string())?;
        if let ksat_core::sim::Verdict::Violated { detail, .. } = &r.properties.k_spending {
            // the unmutated protocol stays within the bound on the same scenario
            let real = run(&s, &RunOptions::default()).map_err(|e| e.to_string())?;
            ensure(!real.properties.k_spending.is_violated(), || "real protocol violates too".into())?;
            return Ok(format!("mutant violates k-spending on a λ = 1 scenario (attempt {}): {detail}", seed + 1));
        }
    }
    Err(format!("no violation in {MUTANT_SEEDS} scenarios"))
}

// ---------------------------------------------------------------------------

fn report(index: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let elapsed = start.elapsed();
    match &result {
        Ok(detail) => println!("PASS {index:>2} {name}: {detail} [{elapsed:.2?}]"),
        Err(detail) => println!("FAIL {index:>2} {name}: {detail} [{elapsed:.2?}]"),
    }
    result.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= report(1, "table reproduction", table_reproduction);
    ok &= report(2, "uniform closed form at desk scale", closed_form_desk_scale);
    ok &= report(3, "example fixtures", example_fixtures);

    let scenarios = scenario_batch();
    let attacks = attack_batch();
    let all: Vec<&Sample> = scenarios.iter().chain(&attacks.samples).collect();

    ok &= report(4, "spending upper bound", || upper_bound(&scenarios));
    ok &= report(5, "lower bound tightness", || lower_bound(&attacks));
    ok &= report(6, "eight properties", || eight_properties(&all));
    ok &= report(7, "balance", balance_fuzz);
    ok &= report(8, "k-consistent broadcast", kcb_reduction);
    ok &= report(9, "cluster analysis", || cluster_analysis(&scenarios));
    ok &= report(10, "oracle equivalences", || oracle_equivalences(&all));
    ok &= report(11, "determinism", || determinism(&all));
    ok &= report(12, "mutation sensitivity", mutation_sensitivity);
    if !ok {
        std::process::exit(1);
    }
}
