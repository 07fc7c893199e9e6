//! `clocert` command-line front end.
//!
//! Exit codes: 0 verified/feasible/safe, 1 falsified/inconclusive/unknown,
//! 2 usage or input error. A JSON run report goes to stdout and, with
//! `--out`, to a file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use clocert::automata::Triplet;
use clocert::cegis::{synthesize, CegisConfig, SynthError};
use clocert::certificate::{check_with, sample_check, CheckMode, Template};
use clocert::falsifier::FalsifierConfig;
use clocert::system::{relation_pairs, BarrierLp, PersistenceResult, SafetyResult};
use clocert::triplet::{subsume, triplet_verify, AttemptStatus, TripletConfig};
use clocert::{load_problem_file, Certificate, Problem};

#[derive(Parser)]
#[command(name = "clocert", version, about = "Closure and barrier certificates for discrete-time systems")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write the run report here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct FalsifierArgs {
    /// Minimum box width of the falsifier.
    #[arg(long)]
    delta: Option<f64>,
    /// Maximum boxes per claim.
    #[arg(long)]
    budget: Option<usize>,
}

impl FalsifierArgs {
    fn config(&self) -> FalsifierConfig {
        let mut c = FalsifierConfig::default();
        if let Some(d) = self.delta {
            c.delta = d;
        }
        if let Some(b) = self.budget {
            c.budget = b;
        }
        c
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strengthened,
    Implication,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a certificate against a problem.
    Check {
        problem: PathBuf,
        certificate: PathBuf,
        #[arg(long, value_enum, default_value = "strengthened")]
        mode: Mode,
        /// Screen with this many seeded tuples per condition instead of proving.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        falsifier: FalsifierArgs,
    },
    /// Synthesize a certificate from a template by CEGIS.
    Synth {
        problem: PathBuf,
        template: PathBuf,
        #[arg(long)]
        tau1: Option<f64>,
        #[arg(long)]
        tau2: Option<f64>,
        #[arg(long)]
        tau3: Option<f64>,
        #[arg(long)]
        xi_min: Option<f64>,
        /// Samples per pool.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Write the certificate here.
        #[arg(long)]
        cert_out: Option<PathBuf>,
        #[command(flatten)]
        falsifier: FalsifierArgs,
    },
    /// State-triplet verification of an LTL problem.
    Triplet {
        problem: PathBuf,
        #[arg(long)]
        allow_unroll: bool,
        /// Barrier template for every triplet.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[command(flatten)]
        falsifier: FalsifierArgs,
    },
    /// Exact analyses of finite problems.
    Finite {
        problem: PathBuf,
        #[command(subcommand)]
        what: FiniteCmd,
    },
}

#[derive(Subcommand)]
enum FiniteCmd {
    /// Transitive closure of the transition relation.
    Closure,
    /// Reachability of the unsafe states.
    Safety,
    /// Reachable cycles through the persistence states.
    Persistence,
    /// Existence of a polynomial barrier of the given degree.
    BarrierLp {
        degree: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    problem: String,
    problem_digest: String,
    verdict: String,
    exit_code: u8,
    seed: u64,
    version: &'static str,
    millis: u128,
    /// Digest of `details` minus timings, stable across runs with equal inputs and seed.
    details_digest: String,
    details: Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `v` without wall-clock fields, for digests.
fn untimed(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.iter()
                .filter(|(k, _)| k.as_str() != "millis")
                .map(|(k, x)| (k.clone(), untimed(x)))
                .collect(),
        ),
        Value::Array(a) => Value::Array(a.iter().map(untimed).collect()),
        other => other.clone(),
    }
}

struct Outcome {
    verdict: String,
    code: u8,
    details: Value,
}

fn outcome(verdict: &str, ok: bool, details: Value) -> Outcome {
    Outcome {
        verdict: verdict.to_string(),
        code: if ok { 0 } else { 1 },
        details,
    }
}

fn load(path: &Path) -> Result<Problem> {
    load_problem_file(path).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn triplet_json(a: &clocert::Nba, t: &Triplet) -> Value {
    let q = |k: usize| a.state_names[k].clone();
    json!({
        "states": [q(t.states.0), q(t.states.1), q(t.states.2)],
        "letters": t.pairs.iter().map(|(x, y)| [x.to_string(), y.to_string()]).collect::<Vec<_>>(),
    })
}

fn run_check(
    problem: &Path,
    cert_path: &Path,
    mode: Mode,
    samples: Option<usize>,
    fa: &FalsifierArgs,
    seed: u64,
) -> Result<Outcome> {
    let p = load(problem)?;
    let cert = Certificate::parse(&read(cert_path)?, &p)?;
    let mode = match mode {
        Mode::Strengthened => CheckMode::Strengthened,
        Mode::Implication => CheckMode::Implication,
    };
    if let Some(k) = samples {
        if p.finite_system().is_some() {
            bail!("sampling is for continuous problems; finite checks are exhaustive");
        }
        let r = sample_check(&cert, &p, mode, k, seed)?;
        let v = r.violations();
        let verdict = if v == 0 { "no-violation" } else { "violated" };
        return Ok(outcome(verdict, v == 0, serde_json::to_value(&r)?));
    }
    let r = check_with(&cert, &p, mode, &fa.config())?;
    let verdict = match &r.verdict {
        clocert::Verdict::Verified { .. } => "verified",
        clocert::Verdict::Falsified { .. } => "falsified",
        clocert::Verdict::Unknown { .. } => "unknown",
    };
    Ok(outcome(verdict, r.verdict.is_verified(), serde_json::to_value(&r)?))
}

#[allow(clippy::too_many_arguments)]
fn run_synth(
    problem: &Path,
    template: &Path,
    tau: [Option<f64>; 3],
    xi_min: Option<f64>,
    n: Option<usize>,
    max_iters: Option<usize>,
    cert_out: Option<&Path>,
    fa: &FalsifierArgs,
    seed: u64,
) -> Result<Outcome> {
    let p = load(problem)?;
    let t = Template::parse(&read(template)?, &p)?;
    let mut cfg = CegisConfig::for_problem(&p);
    for (k, v) in tau.iter().enumerate() {
        if let Some(v) = v {
            cfg.tau[k] = *v;
        }
    }
    if let Some(x) = xi_min {
        cfg.xi_min = x;
    }
    if let Some(n) = n {
        cfg.n = n;
        cfg.n_vf = 2 * n;
    }
    if let Some(m) = max_iters {
        cfg.max_iters = m;
    }
    cfg.seed = seed;
    cfg.falsifier = fa.config();
    match synthesize(&p, &t, &cfg) {
        Ok((cert, report)) => {
            let doc = cert.to_json(&p);
            if let Some(path) = cert_out {
                std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let details = json!({ "certificate": doc, "config": cfg, "report": report });
            Ok(outcome("synthesized", true, details))
        }
        Err(SynthError::Failure { reason, history }) => {
            let details = json!({ "reason": reason, "config": cfg, "history": history });
            Ok(outcome(&format!("failure:{reason:?}"), false, details))
        }
        Err(e) => Err(e.into()),
    }
}

fn run_triplet(
    problem: &Path,
    allow_unroll: bool,
    template: Option<&Path>,
    n: Option<usize>,
    max_iters: Option<usize>,
    fa: &FalsifierArgs,
    seed: u64,
) -> Result<Outcome> {
    let p = load(problem)?;
    if p.nba.is_none() {
        bail!("{}: problem has no automaton", problem.display());
    }
    let mut cfg = TripletConfig {
        allow_unroll,
        seed,
        falsifier: fa.config(),
        ..TripletConfig::default()
    };
    if let Some(t) = template {
        cfg.template = Some(read(t)?);
    }
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(m) = max_iters {
        cfg.max_iters = m;
    }
    let tv = triplet_verify(&p, &cfg)?;
    let a = &tv.nba;
    let cuts: Vec<Value> = tv
        .cuts
        .iter()
        .map(|(t, c, sub)| json!({ "triplet": triplet_json(a, t), "barrier": c.to_json(sub) }))
        .collect();
    let paths: Vec<Value> = tv
        .paths
        .iter()
        .map(|r| {
            json!({
                "path": r.path.iter().map(|&k| a.state_names[k].clone()).collect::<Vec<_>>(),
                "attempts": r.attempts.iter().map(|(k, s)| json!({
                    "triplet": triplet_json(a, &tv.triplets[*k]),
                    "status": match s { AttemptStatus::Cut => "cut".to_string(), AttemptStatus::Failed(m) => m.clone() },
                })).collect::<Vec<_>>(),
                "cut_at": r.cut_at,
            })
        })
        .collect();
    let uncut: Vec<Vec<String>> = tv
        .uncut
        .iter()
        .map(|path| path.iter().map(|&k| a.state_names[k].clone()).collect())
        .collect();
    let mut details = json!({
        "verified": tv.verified(),
        "unroll_used": tv.unroll_used,
        "cuts": cuts,
        "uncut": uncut,
        "paths": paths,
    });
    if tv.verified() && p.finite_system().is_some() {
        let s = subsume(&tv, &p, cfg.xi)?;
        let ok = s
            .certificate
            .check_finite(&s.problem, CheckMode::Strengthened)?
            .is_ok();
        details["subsumption"] = json!({
            "certificate": s.certificate.to_json(&s.problem),
            "exhaustively_valid": ok,
            "ql": s.qlqr.ql, "qr": s.qlqr.qr, "middles": s.qlqr.middles,
            "consistent": s.qlqr.consistent,
        });
    }
    let verdict = if tv.verified() { "verified" } else { "inconclusive" };
    Ok(outcome(verdict, tv.verified(), details))
}

fn run_finite(problem: &Path, what: &FiniteCmd) -> Result<Outcome> {
    let p = load(problem)?;
    let f = p
        .finite_system()
        .ok_or_else(|| anyhow!("{}: not a finite problem", problem.display()))?;
    let sets = p.finite.clone().unwrap_or_default();
    Ok(match what {
        FiniteCmd::Closure => {
            let pairs = relation_pairs(&f.transitive_closure());
            outcome("computed", true, json!({ "closure": pairs }))
        }
        FiniteCmd::Safety => match f.exact_safety(&sets.unsafe_states) {
            SafetyResult::Safe => outcome("safe", true, json!({})),
            SafetyResult::Unsafe(path) => outcome("unsafe", false, json!({ "path": path })),
        },
        FiniteCmd::Persistence => match f.exact_persistence(&sets.vf_states) {
            PersistenceResult::Persistent => outcome("persistent", true, json!({})),
            PersistenceResult::NotPersistent { stem, cycle } => {
                outcome("not-persistent", false, json!({ "stem": stem, "cycle": cycle }))
            }
        },
        FiniteCmd::BarrierLp { degree, eps } => {
            if f.dim() != 1 {
                bail!("barrier-lp needs a one-dimensional embedding");
            }
            match f.exists_polynomial_barrier(&sets.unsafe_states, *degree, *eps) {
                BarrierLp::Feasible(c) => {
                    outcome("feasible", true, json!({ "degree": degree, "coefficients": c }))
                }
                BarrierLp::Infeasible => outcome("infeasible", false, json!({ "degree": degree })),
            }
        }
    })
}

fn command_name(cmd: &Cmd) -> (&'static str, &Path) {
    match cmd {
        Cmd::Check { problem, .. } => ("check", problem),
        Cmd::Synth { problem, .. } => ("synth", problem),
        Cmd::Triplet { problem, .. } => ("triplet", problem),
        Cmd::Finite { problem, what } => (
            match what {
                FiniteCmd::Closure => "finite closure",
                FiniteCmd::Safety => "finite safety",
                FiniteCmd::Persistence => "finite persistence",
                FiniteCmd::BarrierLp { .. } => "finite barrier-lp",
            },
            problem,
        ),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::Check { problem, certificate, mode, samples, falsifier } => {
            run_check(problem, certificate, *mode, *samples, falsifier, seed)
        }
        Cmd::Synth { problem, template, tau1, tau2, tau3, xi_min, n, max_iters, cert_out, falsifier } => run_synth(
            problem,
            template,
            [*tau1, *tau2, *tau3],
            *xi_min,
            *n,
            *max_iters,
            cert_out.as_deref(),
            falsifier,
            seed,
        ),
        Cmd::Triplet { problem, allow_unroll, template, n, max_iters, falsifier } => {
            run_triplet(problem, *allow_unroll, template.as_deref(), *n, *max_iters, falsifier, seed)
        }
        Cmd::Finite { problem, what } => run_finite(problem, what),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CLOSURE_CERT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("clocert: {e}");
            return ExitCode::from(2);
        }
    }
    let t0 = Instant::now();
    let (command, problem) = command_name(&cli.cmd);
    let out = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("clocert: {e:#}");
            return ExitCode::from(2);
        }
    };
    let digest = std::fs::read(problem).map(|b| sha256_hex(&b)).unwrap_or_default();
    let details_digest = sha256_hex(untimed(&out.details).to_string().as_bytes());
    let report = RunReport {
        command: command.to_string(),
        problem: problem.display().to_string(),
        problem_digest: digest,
        verdict: out.verdict,
        exit_code: out.code,
        seed: cli.seed,
        version: env!("CARGO_PKG_VERSION"),
        millis: t0.elapsed().as_millis(),
        details_digest,
        details: out.details,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    print!("{text}");
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("clocert: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(out.code)
}
