//! Counterexample-guided synthesis of certificates from templates.
//!
//! Each iteration fits template coefficients to the strengthened conditions
//! at finitely many sample tuples by linear programming, screens the
//! candidate on random tuples, and then hands it to the checker. Witnesses
//! of failed conditions join the samples.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::index;
use serde::Serialize;
use thiserror::Error;

use crate::automata::Letter;
use crate::certificate::{
    check_with, sample_check, Arg, CertError, CertKind, Certificate, CheckMode, CheckReport, Coefficients, Condition,
    Status, Template,
};
use crate::falsifier::{BlockDomain, Domain, FalsifierConfig};
use crate::lp::{self, LinearProgram, LpOutcome, Rel};
use crate::problem::{Problem, SpecKind};
use crate::rng;

/// Sample pool a condition argument is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pool {
    S1,
    S2,
    Init,
    Unsafe,
    Vf,
    /// Points carrying the `k`-th letter of [`SampleSets::letters`].
    Letter(usize),
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SampleSets {
    pub pools: BTreeMap<Pool, Vec<Vec<f64>>>,
    /// Counterexample tuples per condition, always present as LP rows.
    pub witnesses: BTreeMap<Condition, Vec<Vec<Vec<f64>>>>,
    pub letters: Vec<Letter>,
}

const DEDUP_TOL: f64 = 1e-12;

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= DEDUP_TOL)
}

fn push_unique(v: &mut Vec<Vec<f64>>, p: &[f64]) -> bool {
    if v.iter().any(|q| same_point(q, p)) {
        return false;
    }
    v.push(p.to_vec());
    true
}

/// Letters the LTL conditions range over, in a fixed order.
fn problem_letters(p: &Problem) -> Vec<Letter> {
    match &p.finite {
        Some(f) if p.finite_system().is_some() => {
            let s: BTreeSet<Letter> = f.state_letters.iter().cloned().collect();
            s.into_iter().collect()
        }
        _ => p.labeling.iter().map(|(l, _)| l.clone()).collect(),
    }
}

fn pools_for(kind: CertKind) -> Vec<Pool> {
    match kind {
        CertKind::Barrier => vec![Pool::S1, Pool::Init, Pool::Unsafe],
        CertKind::SafetyCc => vec![Pool::S1, Pool::S2, Pool::Init, Pool::Unsafe],
        CertKind::PersistenceCc => vec![Pool::S1, Pool::S2, Pool::Init, Pool::Vf],
        CertKind::LtlCc => vec![Pool::S2, Pool::Init],
    }
}

impl SampleSets {
    /// Seeded samples: `n` points per pool, `n_vf` from the persistence
    /// region and `n` per letter region. Box corners come first.
    pub fn draw(p: &Problem, kind: CertKind, n: usize, n_vf: usize, seed: u64) -> SampleSets {
        let letters = problem_letters(p);
        let mut s = SampleSets { letters, ..Default::default() };
        if let Some(f) = p.finite_system() {
            // finite systems are sampled exhaustively
            let sets = p.finite.as_ref().expect("finite sets");
            let emb = |ids: &mut dyn Iterator<Item = usize>| ids.map(|k| f.embedding[k].clone()).collect::<Vec<_>>();
            let all: Vec<Vec<f64>> = f.embedding.clone();
            for pool in pools_for(kind) {
                let pts = match pool {
                    Pool::S1 | Pool::S2 => all.clone(),
                    Pool::Init => emb(&mut f.initial.iter().copied()),
                    Pool::Unsafe => emb(&mut sets.unsafe_states.iter().copied()),
                    Pool::Vf => emb(&mut sets.vf_states.iter().copied()),
                    Pool::Letter(_) => unreachable!(),
                };
                s.pools.insert(pool, pts);
            }
            if kind == CertKind::LtlCc {
                for (k, l) in s.letters.clone().iter().enumerate() {
                    let pts = emb(&mut (0..f.states).filter(|&q| &sets.state_letters[q] == l));
                    s.pools.insert(Pool::Letter(k), pts);
                }
            }
            return s;
        }
        let mut pools: Vec<(Pool, BlockDomain, usize)> = Vec::new();
        for pool in pools_for(kind) {
            let (block, count) = match pool {
                Pool::S1 | Pool::S2 => (p.whole_block(), n),
                Pool::Init => (p.block(p.init), n),
                Pool::Unsafe => (p.block(p.unsafe_region.expect("unsafe region")), n),
                Pool::Vf => (p.block(p.vf.expect("vf region")), n_vf),
                Pool::Letter(_) => unreachable!(),
            };
            pools.push((pool, block, count));
        }
        if kind == CertKind::LtlCc {
            for (k, (_, rid)) in p.labeling.iter().enumerate() {
                pools.push((Pool::Letter(k), p.block(*rid), n));
            }
        }
        for (tag, (pool, block, count)) in pools.into_iter().enumerate() {
            let mut pts = Vec::new();
            for c in block_corners(&block) {
                if pts.len() < count {
                    push_unique(&mut pts, &c);
                }
            }
            let dom = Domain::new(p.dim(), vec![block]);
            let mut r = rng::substream(seed, tag as u64);
            let mut tries = 0;
            while pts.len() < count && tries < 4 * count + 16 {
                tries += 1;
                match dom.sample(&mut r, 1000) {
                    Some(q) => {
                        push_unique(&mut pts, &q);
                    }
                    None => break,
                }
            }
            s.pools.insert(pool, pts);
        }
        s
    }

    pub fn len(&self, pool: Pool) -> usize {
        self.pools.get(&pool).map_or(0, Vec::len)
    }

    pub fn sizes(&self) -> BTreeMap<String, usize> {
        self.pools.iter().map(|(k, v)| (format!("{k:?}"), v.len())).collect()
    }

    /// Routes each point of a witness tuple to the pool its argument ranges
    /// over, and keeps the tuple as a row. Returns whether anything changed.
    pub fn insert_counterexample(&mut self, cond: &Condition, tuple: &[Vec<f64>]) -> bool {
        let pools = condition_pools(cond, &self.letters);
        let mut changed = false;
        for (pool, pt) in pools.iter().zip(tuple) {
            changed |= push_unique(self.pools.entry(*pool).or_default(), pt);
        }
        let rows = self.witnesses.entry(cond.clone()).or_default();
        let dup = rows.iter().any(|r| r.len() == tuple.len() && r.iter().zip(tuple).all(|(a, b)| same_point(a, b)));
        if !dup {
            rows.push(tuple.to_vec());
            changed = true;
        }
        changed
    }
}

/// Corner points of each piece that satisfy its filters (up to dimension 3).
fn block_corners(b: &BlockDomain) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for (bx, gs) in &b.pieces {
        let n = bx.0.len();
        if n > 3 {
            continue;
        }
        for mask in 0..1usize << n {
            let c: Vec<f64> =
                (0..n).map(|d| if mask >> d & 1 == 1 { bx.0[d].hi } else { bx.0[d].lo }).collect();
            if gs.iter().all(|g| g.eval(&c, &crate::expr::NoRegions) >= 0.0) {
                out.push(c);
            }
        }
    }
    out
}

/// Pools of a condition's argument blocks, in argument order.
pub fn condition_pools(cond: &Condition, letters: &[Letter]) -> Vec<Pool> {
    let letter_pool = |l: &Letter| Pool::Letter(letters.iter().position(|m| m == l).unwrap_or(usize::MAX));
    match cond {
        Condition::BarrierInit => vec![Pool::Init],
        Condition::BarrierUnsafe => vec![Pool::Unsafe],
        Condition::BarrierInvariant | Condition::Step => vec![Pool::S1],
        Condition::Propagate => vec![Pool::S1, Pool::S2],
        Condition::Separate => vec![Pool::Init, Pool::Unsafe],
        Condition::Decrease => vec![Pool::Init, Pool::Vf, Pool::Vf],
        Condition::ProductStep { letter, .. } => vec![letter_pool(letter)],
        Condition::ProductPropagate { letter, .. } => vec![letter_pool(letter), Pool::S2],
        Condition::ProductDecrease { .. } => vec![Pool::Init, Pool::S2, Pool::S2],
    }
}

/// One certificate evaluation inside a condition: weight, piece and
/// arguments (the second is absent for barriers).
#[derive(Debug, Clone)]
struct Term {
    w: f64,
    piece: (usize, usize),
    x: Arg,
    y: Option<Arg>,
}

/// `Σ terms + xi·ξ ≥ (margin ? μ : 0)`.
#[derive(Debug, Clone)]
struct Form {
    terms: Vec<Term>,
    xi: f64,
    margin: bool,
}

fn form_of(cond: &Condition, tau: [f64; 3]) -> Form {
    use Arg::{Block as B, Image as I};
    let t = |w: f64, piece: (usize, usize), x: Arg, y: Arg| Term { w, piece, x, y: Some(y) };
    let b = |w: f64, x: Arg| Term { w, piece: (0, 0), x, y: None };
    let decrease = |xy: (usize, usize), xz: (usize, usize), yz: (usize, usize)| Form {
        terms: vec![t(1.0 - tau[1], xy, B(0), B(1)), t(-1.0, xz, B(0), B(2)), t(-tau[2], yz, B(1), B(2))],
        xi: -1.0,
        margin: false,
    };
    match cond {
        Condition::BarrierInit => Form { terms: vec![b(-1.0, B(0))], xi: 0.0, margin: true },
        Condition::BarrierUnsafe => Form { terms: vec![b(1.0, B(0))], xi: -1.0, margin: false },
        Condition::BarrierInvariant => Form { terms: vec![b(1.0, B(0)), b(-1.0, I(0))], xi: 0.0, margin: false },
        Condition::Step => Form { terms: vec![t(1.0, (0, 0), B(0), I(0))], xi: 0.0, margin: true },
        Condition::Propagate => Form {
            terms: vec![t(1.0, (0, 0), B(0), B(1)), t(-tau[0], (0, 0), I(0), B(1))],
            xi: 0.0,
            margin: false,
        },
        Condition::Separate => Form { terms: vec![t(-1.0, (0, 0), B(0), B(1))], xi: -1.0, margin: false },
        Condition::Decrease => decrease((0, 0), (0, 0), (0, 0)),
        Condition::ProductStep { from, to, .. } => {
            Form { terms: vec![t(1.0, (*from, *to), B(0), I(0))], xi: 0.0, margin: true }
        }
        Condition::ProductPropagate { from, to, j, .. } => Form {
            terms: vec![t(1.0, (*from, *j), B(0), B(1)), t(-tau[0], (*to, *j), I(0), B(1))],
            xi: 0.0,
            margin: false,
        },
        Condition::ProductDecrease { s, l, l2 } => decrease((*s, *l), (*s, *l2), (*l, *l2)),
    }
}

/// Conditions a certificate kind must satisfy on the problem.
pub fn conditions(kind: CertKind, p: &Problem, letters: &[Letter]) -> Vec<Condition> {
    match kind {
        CertKind::Barrier => vec![Condition::BarrierInit, Condition::BarrierUnsafe, Condition::BarrierInvariant],
        CertKind::SafetyCc => vec![Condition::Step, Condition::Propagate, Condition::Separate],
        CertKind::PersistenceCc => vec![Condition::Step, Condition::Propagate, Condition::Decrease],
        CertKind::LtlCc => {
            let a = p.nba.as_ref().expect("ltl problem has an automaton");
            let mut out = Vec::new();
            for letter in letters {
                for tr in a.transitions.iter().filter(|t| &t.letter == letter) {
                    out.push(Condition::ProductStep { from: tr.from, letter: letter.clone(), to: tr.to });
                    for j in 0..a.num_states() {
                        out.push(Condition::ProductPropagate { from: tr.from, letter: letter.clone(), to: tr.to, j });
                    }
                }
            }
            for &s in &a.initial {
                for &l in &a.accepting {
                    for &l2 in &a.accepting {
                        out.push(Condition::ProductDecrease { s, l, l2 });
                    }
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CegisConfig {
    /// Points per pool (`S1`, `S2`, initial, unsafe, each letter region).
    pub n: usize,
    /// Points from the persistence region.
    pub n_vf: usize,
    pub tau: [f64; 3],
    pub xi_min: f64,
    /// Lower bound on `B` over unsafe samples for barrier templates.
    pub barrier_eps: f64,
    pub coef_bound: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub falsifier: FalsifierConfig,
    /// Random tuples per condition screened before the falsifier runs.
    pub prescreen: usize,
    /// Margin required of step-like rows, dropped if it makes the LP infeasible.
    pub row_margin: f64,
    /// Cap on sampled tuples per condition; witness tuples come on top.
    pub max_tuples: usize,
    /// Minimise `Σ|c|` among candidates with maximal `ξ`.
    pub secondary: bool,
}

impl CegisConfig {
    pub fn for_problem(p: &Problem) -> CegisConfig {
        let n = 50;
        CegisConfig {
            n,
            n_vf: 2 * n,
            tau: [p.params.tau1, p.params.tau2, p.params.tau3],
            xi_min: p.params.xi_min,
            barrier_eps: p.params.barrier_eps,
            coef_bound: 10.0,
            max_iters: 200,
            seed: 0,
            falsifier: FalsifierConfig::default(),
            prescreen: 10_000,
            row_margin: if p.finite_system().is_some() { 0.0 } else { 1e-4 },
            max_tuples: 20_000,
            secondary: true,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.tau.iter().any(|t| !(*t >= 0.0)) {
            return bad("tau values must be nonnegative");
        }
        if !(self.xi_min > 0.0) {
            return bad("xi_min must be positive");
        }
        if !(self.coef_bound > 0.0 && self.coef_bound.is_finite()) {
            return bad("coefficient bound must be positive and finite");
        }
        self.falsifier.validate().map_err(|e| SynthError::Config(e.to_string()))
    }
}

/// Variable layout of the candidate LP.
struct Layout {
    m: usize,
    q: usize,
    piecewise: bool,
}

impl Layout {
    fn new(t: &Template, p: &Problem) -> Layout {
        let q = p.nba.as_ref().map_or(1, |a| a.num_states());
        let piecewise = t.kind == CertKind::LtlCc && t.piecewise;
        Layout { m: t.len(), q, piecewise }
    }

    fn pieces(&self) -> usize {
        if self.piecewise {
            self.q * self.q
        } else {
            1
        }
    }

    fn offset(&self, (i, j): (usize, usize)) -> usize {
        if self.piecewise {
            (i * self.q + j) * self.m
        } else {
            0
        }
    }

    fn xi(&self) -> usize {
        self.pieces() * self.m
    }

    fn vars(&self) -> usize {
        self.xi() + 1
    }

    fn coefficients(&self, x: &[f64]) -> Coefficients {
        if !self.piecewise {
            return Coefficients::Flat(x[..self.m].to_vec());
        }
        let mut map = BTreeMap::new();
        for i in 0..self.q {
            for j in 0..self.q {
                let o = self.offset((i, j));
                map.insert((i, j), x[o..o + self.m].to_vec());
            }
        }
        Coefficients::Piecewise(map)
    }
}

/// Successor points of `x`: the image under the dynamics, or the embedded
/// successors of a finite state.
fn successors(p: &Problem, x: &[f64]) -> Vec<Vec<f64>> {
    match (p.continuous(), p.finite_system()) {
        (Some(c), _) => vec![c.step(x, &p.regions)],
        (None, Some(f)) => match p.state_at(x) {
            Some(s) => f.succ[s].iter().map(|&t| f.embedding[t].clone()).collect(),
            None => Vec::new(),
        },
        _ => Vec::new(),
    }
}

fn cartesian(sizes: &[usize]) -> usize {
    sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).unwrap_or(usize::MAX)
}

/// Tuples of pool indices for one condition: the full product when it is
/// small, else a seeded subset.
fn tuple_indices(sizes: &[usize], cap: usize, seed: u64, tag: u64) -> Vec<Vec<usize>> {
    let total = cartesian(sizes);
    let decode = |mut k: usize| {
        let mut t = vec![0; sizes.len()];
        for d in (0..sizes.len()).rev() {
            t[d] = k % sizes[d];
            k /= sizes[d];
        }
        t
    };
    if total <= cap {
        return (0..total).map(decode).collect();
    }
    let mut r = rng::substream(seed, tag);
    if total <= usize::MAX / 2 && total <= 1 << 40 {
        let mut pick = index::sample(&mut r, total, cap).into_vec();
        pick.sort_unstable();
        return pick.into_iter().map(decode).collect();
    }
    use rand::Rng as _;
    (0..cap).map(|_| sizes.iter().map(|&s| r.gen_range(0..s)).collect()).collect()
}

/// The candidate LP over template coefficients and `ξ`, one row per
/// condition and sample tuple. Implications appear only in their
/// strengthened linear form.
pub fn build_candidate_lp(
    template: &Template,
    samples: &SampleSets,
    cfg: &CegisConfig,
    p: &Problem,
) -> Result<LinearProgram, CertError> {
    build_lp(template, samples, cfg, p, cfg.row_margin)
}

fn build_lp(
    template: &Template,
    samples: &SampleSets,
    cfg: &CegisConfig,
    p: &Problem,
    margin: f64,
) -> Result<LinearProgram, CertError> {
    if template.kind.spec() != p.spec {
        return Err(CertError::WrongKind { kind: template.kind.name(), spec: p.spec });
    }
    let lay = Layout::new(template, p);
    let mut names = Vec::with_capacity(lay.vars());
    for piece in 0..lay.pieces() {
        for k in 0..lay.m {
            names.push(if lay.piecewise { format!("c{}_{}_{k}", piece / lay.q, piece % lay.q) } else { format!("c{k}") });
        }
    }
    names.push("xi".into());
    let mut bounds = vec![(-cfg.coef_bound, cfg.coef_bound); lay.xi()];
    let xi_lo = if template.kind == CertKind::Barrier { cfg.barrier_eps } else { cfg.xi_min };
    bounds.push((xi_lo, cfg.coef_bound.max(xi_lo)));
    let mut lp = LinearProgram::new(names, bounds);
    let mut obj = vec![0.0; lay.vars()];
    obj[lay.xi()] = 1.0;
    lp.maximize(obj);

    let empty = Vec::new();
    for (ci, cond) in conditions(template.kind, p, &samples.letters).iter().enumerate() {
        let form = form_of(cond, cfg.tau);
        let pools = condition_pools(cond, &samples.letters);
        let pts: Vec<&Vec<Vec<f64>>> = pools.iter().map(|pl| samples.pools.get(pl).unwrap_or(&empty)).collect();
        let sizes: Vec<usize> = pts.iter().map(|v| v.len()).collect();
        let mut tuples: Vec<Vec<Vec<f64>>> = tuple_indices(&sizes, cfg.max_tuples, cfg.seed, 1000 + ci as u64)
            .into_iter()
            .map(|ix| ix.iter().enumerate().map(|(d, &k)| pts[d][k].clone()).collect())
            .collect();
        if let Some(w) = samples.witnesses.get(cond) {
            tuples.extend(w.iter().cloned());
        }
        for tuple in &tuples {
            let images: Vec<Vec<f64>> =
                if form.terms.iter().any(|t| t.x == Arg::Image(0) || t.y == Some(Arg::Image(0))) { successors(p, &tuple[0]) } else { vec![Vec::new()] };
            for img in &images {
                let mut row = vec![0.0; lay.vars()];
                for term in &form.terms {
                    let arg = |a: Arg| match a {
                        Arg::Block(b) => tuple[b].as_slice(),
                        Arg::Image(_) => img.as_slice(),
                    };
                    let mut xy = arg(term.x).to_vec();
                    if let Some(y) = term.y {
                        xy.extend_from_slice(arg(y));
                    }
                    let o = lay.offset(term.piece);
                    for (k, phi) in template.basis.iter().enumerate() {
                        row[o + k] += term.w * phi.eval(&xy, &p.regions);
                    }
                }
                row[lay.xi()] = form.xi;
                if row.iter().any(|v| !v.is_finite()) {
                    continue;
                }
                lp.add(row, Rel::Ge, if form.margin { margin } else { 0.0 });
            }
        }
    }
    Ok(lp)
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub condition: String,
    pub tuple: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lp_rows: usize,
    pub lp_vars: usize,
    pub xi: Option<f64>,
    pub coefficients: Vec<f64>,
    /// Which stage rejected the candidate: `lp`, `prescreen`, `falsifier`, or `accepted`.
    pub stage: String,
    pub counterexamples: Vec<Counterexample>,
    pub millis: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthReport {
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub sample_sizes: BTreeMap<String, usize>,
    pub margins: Vec<(String, f64)>,
    pub check: CheckReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FailureReason {
    /// No template instance satisfies the rows of the current samples.
    InfeasibleLP,
    MaxIterations,
    /// The checker could not decide, or made no progress.
    FalsifierBudget,
}

#[derive(Debug, Clone, Error)]
pub enum SynthError {
    #[error("synthesis failed: {reason:?} after {} iterations", history.len())]
    Failure { reason: FailureReason, history: Vec<IterationRecord> },
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error("linear program: {0}")]
    Lp(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl SynthError {
    pub fn reason(&self) -> Option<FailureReason> {
        match self {
            SynthError::Failure { reason, .. } => Some(*reason),
            _ => None,
        }
    }
}

/// Solves by row generation; on infeasibility the full LP is re-solved
/// directly to confirm.
fn solve_candidate(lp: &LinearProgram, nvars: usize) -> Result<LpOutcome, SynthError> {
    let rows = lp.constraints.len();
    let out = lp::solve_rowgen(lp, (4 * nvars + 50).min(rows), nvars.max(20)).map_err(|e| SynthError::Lp(e.to_string()))?;
    if out.is_feasible() {
        return Ok(out);
    }
    lp::solve(lp).map_err(|e| SynthError::Lp(e.to_string()))
}

/// Among candidates within a hair of the best `ξ`, one of least `Σ|c|`.
fn secondary_pass(lp: &LinearProgram, lay: &Layout, best: &[f64]) -> Option<Vec<f64>> {
    let nc = lay.xi();
    let nv = lay.vars();
    let mut names = lp.names.clone();
    names.extend((0..nc).map(|k| format!("u{k}")));
    let mut bounds = lp.bounds.clone();
    bounds.extend((0..nc).map(|k| (0.0, lp.bounds[k].1.abs().max(lp.bounds[k].0.abs()))));
    let mut l2 = LinearProgram::new(names, bounds);
    for c in &lp.constraints {
        let mut row = c.coeffs.clone();
        row.resize(nv + nc, 0.0);
        l2.add(row, c.rel, c.rhs);
    }
    for k in 0..nc {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; nv + nc];
            row[nv + k] = 1.0;
            row[k] = -sign;
            l2.add(row, Rel::Ge, 0.0);
        }
    }
    let xi = best[lay.xi()];
    let mut row = vec![0.0; nv + nc];
    row[lay.xi()] = 1.0;
    let floor = (xi - 1e-6 * xi.abs() - 1e-9).max(lp.bounds[lay.xi()].0);
    l2.add(row, Rel::Ge, floor);
    let mut obj = vec![0.0; nv + nc];
    for o in obj.iter_mut().skip(nv) {
        *o = 1.0;
    }
    l2.minimize(obj);
    match lp::solve_rowgen(&l2, (4 * (nv + nc) + 50).min(l2.constraints.len()), nv + nc) {
        Ok(LpOutcome::Feasible { x, .. }) if lp.worst_violation(&x[..nv]).is_none() => Some(x[..nv].to_vec()),
        _ => None,
    }
}

/// Argument-block states of a finite witness, dropping successor entries.
fn block_points(cond: &Condition, witness: &[Vec<f64>]) -> Vec<Vec<f64>> {
    match cond {
        Condition::Step | Condition::ProductStep { .. } | Condition::BarrierInvariant if witness.len() == 2 => {
            vec![witness[0].clone()]
        }
        Condition::Propagate | Condition::ProductPropagate { .. } if witness.len() == 3 => {
            vec![witness[0].clone(), witness[2].clone()]
        }
        _ => witness.to_vec(),
    }
}

pub fn synthesize(p: &Problem, template: &Template, cfg: &CegisConfig) -> Result<(Certificate, SynthReport), SynthError> {
    cfg.validate()?;
    if template.kind.spec() != p.spec {
        return Err(CertError::WrongKind { kind: template.kind.name(), spec: p.spec }.into());
    }
    if p.spec == SpecKind::Ltl && p.nba.is_none() {
        return Err(CertError::Format("ltl problem without automaton".into()).into());
    }
    let finite = p.finite_system().is_some();
    let lay = Layout::new(template, p);
    let mut samples = SampleSets::draw(p, template.kind, cfg.n, cfg.n_vf, cfg.seed);
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut seen: Vec<Vec<f64>> = Vec::new();
    let mut margin = cfg.row_margin;
    let cert_xi = if template.kind == CertKind::Barrier { 0.0 } else { cfg.xi_min };
    let fail = |reason, history| Err(SynthError::Failure { reason, history });

    for iteration in 1..=cfg.max_iters {
        let t0 = Instant::now();
        let lp = build_lp(template, &samples, cfg, p, margin)?;
        let mut rec = IterationRecord {
            iteration,
            lp_rows: lp.constraints.len(),
            lp_vars: lp.num_vars(),
            xi: None,
            coefficients: Vec::new(),
            stage: "lp".into(),
            counterexamples: Vec::new(),
            millis: 0,
        };
        let mut out = solve_candidate(&lp, lay.vars())?;
        if !out.is_feasible() && margin > 0.0 {
            // the step margin is a convenience; retry without it
            margin = 0.0;
            let plain = build_lp(template, &samples, cfg, p, 0.0)?;
            out = solve_candidate(&plain, lay.vars())?;
        }
        let LpOutcome::Feasible { x, .. } = out else {
            rec.millis = t0.elapsed().as_millis();
            history.push(rec);
            return fail(FailureReason::InfeasibleLP, history);
        };
        let x = if cfg.secondary { secondary_pass(&lp, &lay, &x).unwrap_or(x) } else { x };
        rec.xi = Some(x[lay.xi()]);
        rec.coefficients = x[..lay.xi()].to_vec();
        if seen.iter().any(|s| s.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-12)) {
            rec.stage = "repeat".into();
            rec.millis = t0.elapsed().as_millis();
            history.push(rec);
            return fail(FailureReason::FalsifierBudget, history);
        }
        seen.push(x.clone());
        let cert = template.instantiate(lay.coefficients(&x), cert_xi, cfg.tau);

        if !finite && cfg.prescreen > 0 {
            let screen = sample_check(&cert, p, CheckMode::Strengthened, cfg.prescreen, rng_tag(cfg.seed, iteration))?;
            let mut added = false;
            for s in screen.per_condition.iter().filter(|s| s.violations > 0) {
                if let Some(w) = &s.witness {
                    added |= samples.insert_counterexample(&s.condition, w);
                    rec.counterexamples.push(Counterexample { condition: s.label.clone(), tuple: w.clone() });
                }
            }
            if added {
                rec.stage = "prescreen".into();
                rec.millis = t0.elapsed().as_millis();
                log::debug!("cegis iteration {iteration}: {} prescreen counterexamples", rec.counterexamples.len());
                history.push(rec);
                continue;
            }
        }

        let report = check_with(&cert, p, CheckMode::Strengthened, &cfg.falsifier)?;
        if report.verdict.is_verified() {
            rec.stage = "accepted".into();
            rec.millis = t0.elapsed().as_millis();
            history.push(rec);
            let margins = report
                .conditions
                .iter()
                .map(|r| (r.label.clone(), r.margin.unwrap_or(f64::NAN)))
                .collect();
            let sample_sizes = samples.sizes();
            return Ok((cert, SynthReport { iterations: iteration, history, sample_sizes, margins, check: report }));
        }
        let mut added = false;
        let mut unknown = false;
        for r in &report.conditions {
            let tuple = match r.status {
                Status::Falsified => r.witness.as_ref().map(|w| if finite { block_points(&r.condition, w) } else { w.clone() }),
                Status::Unknown => {
                    unknown = true;
                    r.smallest.as_ref().map(|bx| {
                        let mid: Vec<f64> = bx.iter().map(|iv| 0.5 * (iv[0] + iv[1])).collect();
                        mid.chunks(p.dim().max(1)).map(<[f64]>::to_vec).collect()
                    })
                }
                Status::Verified => None,
            };
            if let Some(t) = tuple {
                added |= samples.insert_counterexample(&r.condition, &t);
                rec.counterexamples.push(Counterexample { condition: r.label.clone(), tuple: t });
            }
        }
        rec.stage = "falsifier".into();
        rec.millis = t0.elapsed().as_millis();
        log::debug!("cegis iteration {iteration}: {} falsifier counterexamples", rec.counterexamples.len());
        history.push(rec);
        if !added {
            let reason = if unknown { FailureReason::FalsifierBudget } else { FailureReason::InfeasibleLP };
            return fail(reason, history);
        }
    }
    fail(FailureReason::MaxIterations, history)
}

fn rng_tag(seed: u64, iteration: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(iteration as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::load_problem;

    fn fig1() -> Problem {
        load_problem(
            r#"{"system": "finite", "spec": "safety", "states": 6, "initial": [1, 3, 5],
                "transitions": [[0,0],[1,0],[2,0],[3,0],[4,0],[5,0]], "unsafe_states": [2, 4]}"#,
            None,
        )
        .unwrap()
    }

    fn kuramoto() -> Problem {
        crate::certificate::tests::kuramoto()
    }

    #[test]
    fn empty_samples_give_a_bounds_only_lp() {
        let p = fig1();
        let t = Template::parse(r#"{"kind": "safety-cc", "basis": ["1", "x1", "y1"]}"#, &p).unwrap();
        let cfg = CegisConfig::for_problem(&p);
        let lp = build_candidate_lp(&t, &SampleSets::default(), &cfg, &p).unwrap();
        assert!(lp.constraints.is_empty());
        assert!(lp::solve(&lp).unwrap().is_feasible());
    }

    #[test]
    fn figure_one_linear_cc() {
        let p = fig1();
        let t = Template::parse(r#"{"kind": "safety-cc", "basis": ["1", "x1", "y1"]}"#, &p).unwrap();
        let cfg = CegisConfig::for_problem(&p);
        let (c, rep) = synthesize(&p, &t, &cfg).unwrap();
        assert!(c.check_finite(&p, CheckMode::Strengthened).unwrap().is_ok());
        assert!(rep.check.exhaustive);
    }

    #[test]
    fn kuramoto_linear_barrier_is_infeasible() {
        let p = kuramoto();
        let t = Template::parse(r#"{"kind": "barrier", "basis": ["1", "x1"]}"#, &p).unwrap();
        let mut cfg = CegisConfig::for_problem(&p);
        cfg.n = 200;
        let err = synthesize(&p, &t, &cfg).unwrap_err();
        assert_eq!(err.reason(), Some(FailureReason::InfeasibleLP));
    }

    #[test]
    fn counterexample_routing() {
        let p = kuramoto();
        let mut s = SampleSets::draw(&p, CertKind::SafetyCc, 3, 6, 1);
        let (i0, u0) = (s.len(Pool::Init), s.len(Pool::Unsafe));
        let w = vec![vec![1.5], vec![2.6]];
        assert!(s.insert_counterexample(&Condition::Separate, &w));
        assert_eq!((s.len(Pool::Init), s.len(Pool::Unsafe)), (i0 + 1, u0 + 1));
        assert!(!s.insert_counterexample(&Condition::Separate, &w));
        assert_eq!((s.len(Pool::Init), s.len(Pool::Unsafe)), (i0 + 1, u0 + 1));
        let before = (s.len(Pool::Init), s.len(Pool::Vf));
        s.insert_counterexample(&Condition::Decrease, &[vec![1.6], vec![0.1], vec![0.2]]);
        assert_eq!((s.len(Pool::Init), s.len(Pool::Vf)), (before.0 + 1, before.1 + 2));
    }

    #[test]
    fn kuramoto_linear_cc_synthesis() {
        let p = kuramoto();
        let t = Template::parse(r#"{"kind": "safety-cc", "basis": ["1", "x1", "y1"]}"#, &p).unwrap();
        let mut cfg = CegisConfig::for_problem(&p);
        cfg.seed = 42;
        let (c, rep) = synthesize(&p, &t, &cfg).unwrap();
        assert!(rep.iterations <= 200);
        assert!(crate::certificate::check(&c, &p, CheckMode::Strengthened).unwrap().verdict.is_verified());
    }
}
