//! `ksat`: analyze trust models and simulate k-spending asset transfer runs.
//!
//! Exit codes: 0 success, 1 other errors, 2 malformed input, 3 size limit
//! exceeded, 4 some property violated, 5 a run did not terminate.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand};
use ksat_core::engine::EngineConfig;
use ksat_core::sim::{
    kcb_broadcast, kcb_collect, run, synthesize_multispend_attack, AttackError, HonestAction,
    KeySpec, Outcome, RunOptions, RunReport, Scenario, ScenarioError, ScenarioFile,
    SchedulerSpec,
};
use ksat_core::trust_model::{
    format_table, is_live, max_independent_set_witness, uniform_inconsistency, uniform_table,
    InconsistencyWitness, Limits, TrustModel, TrustModelError, DEFAULT_ENUMERATION_BUDGET,
};
use ksat_core::{ProcessId, ProcessSet};
use serde::Serialize;

const EXIT_ERROR: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_SIZE_LIMIT: u8 = 3;
const EXIT_VIOLATED: u8 = 4;
const EXIT_NONTERMINATION: u8 = 5;

#[derive(Parser)]
#[command(name = "ksat", version, about = "k-spending asset transfer: trust analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inconsistency number, witness and liveness of a trust model.
    Analyze(AnalyzeArgs),
    /// Closed-form inconsistency numbers of a uniform model for each f.
    Table(TableArgs),
    /// Run one or more scenario files.
    Simulate(SimulateArgs),
    /// Synthesize and run the multi-spend attack on a model.
    Attack(AttackArgs),
    /// Run k-consistent broadcast on a model and report delivered values.
    Kcb(KcbArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trust model JSON file.
    #[arg(long, conflicts_with = "uniform", required_unless_present = "uniform")]
    model: Option<PathBuf>,
    /// Generate the uniform model with the given n, q and f.
    #[arg(long, num_args = 3, value_names = ["N", "Q", "F"])]
    uniform: Option<Vec<usize>>,
    /// Print the generated uniform model as JSON and stop.
    #[arg(long, requires = "uniform")]
    emit_model: bool,
    /// Search step budget for the exact computation.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    exact_cap: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 67)]
    q: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    json: bool,
    /// Run with the used-input guard disabled. Only builds with test
    /// mutants compiled into the core library accept this.
    #[arg(long, hide = true)]
    disable_usedinp_guard: bool,
}

impl RunFlags {
    fn options(&self) -> Result<RunOptions> {
        let engine = if self.disable_usedinp_guard {
            EngineConfig::without_used_input_guard()
                .context("this build does not include test mutants")?
        } else {
            EngineConfig::default()
        };
        Ok(RunOptions {
            engine,
            ..RunOptions::default()
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON files.
    #[arg(long, required = true, num_args = 1..)]
    scenario: Vec<PathBuf>,
    /// Seed for random schedulers, overriding the scenario's.
    #[arg(long, env = "KSAT_SEED")]
    seed: Option<u64>,
    /// Worker threads when several scenarios are given.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    flags: RunFlags,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0)]
    key_seed: u64,
    #[command(flatten)]
    flags: RunFlags,
}

#[derive(Args)]
struct KcbArgs {
    #[arg(long)]
    model: PathBuf,
    /// Use the synthesized attack's faulty source instead of a correct one.
    #[arg(long)]
    byzantine_source: bool,
    /// Source process (0-based) when the source is correct.
    #[arg(long, default_value_t = 0)]
    source: u32,
    #[arg(long, default_value = "m")]
    message: String,
    #[command(flatten)]
    flags: RunFlags,
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        Failure {
            code: classify(&error),
            error,
        }
    }
}

fn classify(e: &anyhow::Error) -> u8 {
    let model_code = |m: &TrustModelError| match m {
        TrustModelError::SizeLimitExceeded { .. } => EXIT_SIZE_LIMIT,
        _ => EXIT_SCHEMA,
    };
    for cause in e.chain() {
        if let Some(m) = cause.downcast_ref::<TrustModelError>() {
            return model_code(m);
        }
        if let Some(s) = cause.downcast_ref::<ScenarioError>() {
            return match s {
                ScenarioError::Io { .. } => EXIT_ERROR,
                ScenarioError::Model(m) => model_code(m),
                ScenarioError::Attack(AttackError::Model(m)) => model_code(m),
                _ => EXIT_SCHEMA,
            };
        }
        if let Some(a) = cause.downcast_ref::<AttackError>() {
            return match a {
                AttackError::Model(m) => model_code(m),
                AttackError::NotVulnerable => EXIT_ERROR,
            };
        }
        if cause.is::<serde_json::Error>() {
            return EXIT_SCHEMA;
        }
    }
    EXIT_ERROR
}

type CmdResult = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Table(a) => table(a),
        Command::Simulate(a) => simulate(a),
        Command::Attack(a) => attack(a),
        Command::Kcb(a) => kcb(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_model(path: &Path) -> Result<TrustModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing trust model {}", path.display()))
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze

#[derive(Serialize)]
struct LivenessRow {
    faulty: ProcessSet,
    live: ProcessSet,
    not_live: ProcessSet,
}

#[derive(Serialize)]
struct Analysis {
    n: usize,
    inconsistency_number: Option<usize>,
    /// Best value found before the size limit hit.
    lower_bound: Option<usize>,
    witness: Option<InconsistencyWitness>,
    closed_form: Option<usize>,
    liveness: Vec<LivenessRow>,
}

fn analyze(a: AnalyzeArgs) -> CmdResult {
    let (model, closed_form) = match &a.uniform {
        Some(v) => {
            let (n, q, f) = (v[0], v[1], v[2]);
            let model = TrustModel::uniform(n, q, f)?;
            (model, Some(uniform_inconsistency(n, q, f)?))
        }
        None => (load_model(a.model.as_deref().expect("clap requires a model"))?, None),
    };
    if a.emit_model {
        print_json(&model)?;
        return Ok(0);
    }
    let limits = Limits {
        enumeration_budget: a.exact_cap,
        ..Limits::default()
    };
    let liveness = model
        .fault_model()
        .iter()
        .map(|&f| {
            let correct = model.all().difference(f);
            let live: ProcessSet = correct.iter().filter(|&p| is_live(&model, p, f)).collect();
            LivenessRow {
                faulty: f,
                live,
                not_live: correct.difference(live),
            }
        })
        .collect();
    let (witness, lower_bound, code) = match max_independent_set_witness(&model, &limits) {
        Ok(w) => (Some(w), None, 0),
        Err(TrustModelError::SizeLimitExceeded { what, partial }) => {
            eprintln!("size limit exceeded: {what}");
            (None, partial, EXIT_SIZE_LIMIT)
        }
        Err(e) => return Err(e.into()),
    };
    let analysis = Analysis {
        n: model.n(),
        inconsistency_number: witness.as_ref().map(InconsistencyWitness::size),
        lower_bound,
        witness,
        closed_form,
        liveness,
    };
    if a.json {
        print_json(&analysis)?;
    } else {
        print_analysis(&analysis);
    }
    Ok(code)
}

fn print_analysis(a: &Analysis) {
    println!("processes: {}", a.n);
    match (&a.witness, a.lower_bound) {
        (Some(w), _) => {
            println!("inconsistency number: {}", w.size());
            println!("witness faulty set: {}", w.faulty);
            println!("witness independent set: {}", w.independent_set);
            println!("witness quorum map:");
            for (i, q) in w.quorum_map.0.iter().enumerate() {
                let p = ProcessId::from(i);
                if !w.faulty.contains(p) {
                    println!("  {p} -> {}", q.members());
                }
            }
        }
        (None, Some(b)) => println!("inconsistency number: at least {b} (search incomplete)"),
        (None, None) => println!("inconsistency number: unknown (search incomplete)"),
    }
    if let Some(c) = a.closed_form {
        println!("closed form: {c}");
    }
    println!("liveness per maximal faulty set:");
    for row in &a.liveness {
        println!("  faulty {}: live {}, not live {}", row.faulty, row.live, row.not_live);
    }
}

// ---------------------------------------------------------------------------
// table

fn table(a: TableArgs) -> CmdResult {
    let rows = uniform_table(a.n, a.q)?;
    if a.json {
        print_json(&rows)?;
    } else {
        print!("{}", format_table(&rows));
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// runs

fn run_code(report: &RunReport) -> u8 {
    if report.properties.any_violated() {
        EXIT_VIOLATED
    } else if report.outcome == Outcome::Nontermination {
        EXIT_NONTERMINATION
    } else {
        0
    }
}

fn print_report(name: &str, r: &RunReport) {
    println!("== {name}");
    match r.outcome {
        Outcome::Quiescent => println!("outcome: quiescent after {} deliveries", r.deliveries),
        Outcome::Nontermination => println!(
            "outcome: NONTERMINATION after {} deliveries, {} undelivered",
            r.deliveries, r.undelivered
        ),
    }
    println!("faulty: {}  live: {}", r.faulty, r.live);
    match r.inconsistency_number {
        Some(l) => println!("inconsistency number: {l}"),
        None => println!("inconsistency number: beyond analysis limits"),
    }
    println!("spending number: {}", r.spending_number);
    match r.cover_number() {
        Some(c) => println!("cover number: {c}"),
        None => println!("cover number: too many histories for exact search"),
    }
    println!("issued: {}  accusations held: {}", r.issued.len(), r.accusations.values().map(|a| a.len()).max().unwrap_or(0));
    println!("trace hash: {}", r.trace_hash);
    println!("properties:");
    for (name, v) in r.properties.iter() {
        println!("  {name:<20} {v}");
    }
    if let Some(k) = &r.kcb {
        let values: Vec<String> = k.values().iter().map(|v| String::from_utf8_lossy(v).into_owned()).collect();
        println!("k-CB source {}: delivered values {:?} (|M| = {})", k.source, values, values.len());
        for (p, v) in &k.delivered {
            println!("  {p} delivered {:?}", String::from_utf8_lossy(v));
        }
    }
}

fn emit(name: &str, report: &RunReport, json: bool) -> Result<()> {
    if json {
        print_json(report)
    } else {
        print_report(name, report);
        Ok(())
    }
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let mut scenarios = Vec::with_capacity(a.scenario.len());
    for path in &a.scenario {
        let mut s = ScenarioFile::load(path).with_context(|| format!("loading {}", path.display()))?;
        if let (Some(seed), SchedulerSpec::Random { .. }) = (a.seed, &s.scheduler) {
            s.scheduler = SchedulerSpec::Random { seed };
        }
        scenarios.push(s);
    }
    let options = a.flags.options()?;
    let reports = run_all(&scenarios, &options, a.jobs.max(1))?;
    let mut code = 0;
    if a.flags.json && reports.len() > 1 {
        print_json(&reports)?;
    }
    for (path, r) in a.scenario.iter().zip(&reports) {
        if !(a.flags.json && reports.len() > 1) {
            emit(&path.display().to_string(), r, a.flags.json)?;
        }
        code = code.max(run_code(r));
    }
    Ok(code)
}

fn run_all(scenarios: &[Scenario], options: &RunOptions, jobs: usize) -> Result<Vec<RunReport>> {
    let chunk = scenarios.len().div_ceil(jobs).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|s| run(s, options)).collect::<Vec<_>>()))
            .collect();
        let mut out = Vec::with_capacity(scenarios.len());
        for h in handles {
            for r in h.join().expect("worker panicked") {
                out.push(r?);
            }
        }
        Ok(out)
    })
}

fn attack(a: AttackArgs) -> CmdResult {
    let model = load_model(&a.model)?;
    let keys = KeySpec {
        seed: a.key_seed,
        ..KeySpec::default()
    };
    let attack = synthesize_multispend_attack(&model, keys, &Limits::default())?;
    let report = run(&attack.scenario, &a.flags.options()?)?;
    if !a.flags.json {
        println!(
            "source {} sends {} conflicting spends to targets {}",
            attack.source,
            attack.targets.len(),
            attack.targets.iter().copied().collect::<ProcessSet>()
        );
    }
    emit("attack", &report, a.flags.json)?;
    Ok(run_code(&report))
}

fn kcb(a: KcbArgs) -> CmdResult {
    let model = load_model(&a.model)?;
    let (scenario, source) = if a.byzantine_source {
        let attack = synthesize_multispend_attack(&model, KeySpec::default(), &Limits::default())?;
        (attack.scenario, attack.source)
    } else {
        let source = ProcessId(a.source);
        if source.index() >= model.n() {
            return Err(anyhow::anyhow!("source {source} is not a process of the model").into());
        }
        let mut s = Scenario::quiet(model);
        let tx = kcb_broadcast(source, &s.genesis, a.message.as_bytes());
        s.honest.push(HonestAction { issuer: source, tx });
        (s, source)
    };
    let mut report = run(&scenario, &a.flags.options()?)?;
    report.kcb = Some(kcb_collect(&report, source));
    emit("k-CB", &report, a.flags.json)?;
    Ok(run_code(&report))
}
