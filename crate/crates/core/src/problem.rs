//! Verification problems and their JSON file format.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::automata::{parse_hoa, Letter, Nba, Transition};
use crate::expr::{parse_with, Expr, Interval, IntervalBox, RegionId, VarContext};
use crate::falsifier::{self, BlockDomain, Claim, Decision, Domain, FalsifierConfig, Sense};
use crate::region::{Clause, Region, RegionTable};
use crate::system::{ContinuousSystem, FiniteSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Safety,
    Persistence,
    #[serde(alias = "ltl-nba")]
    Ltl,
}

#[derive(Debug, Clone)]
pub enum System {
    Continuous(ContinuousSystem),
    Finite(FiniteSystem),
}

/// Strengthening parameters and margins.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub xi_min: f64,
    /// Margin for the strict barrier inequality on unsafe states.
    pub barrier_eps: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            tau1: 1.0,
            tau2: 0.0,
            tau3: 0.0,
            xi_min: 1e-3,
            barrier_eps: 1e-3,
        }
    }
}

/// State-indexed sets of a finite problem.
#[derive(Debug, Clone, Default)]
pub struct FiniteSets {
    pub unsafe_states: Vec<usize>,
    pub vf_states: Vec<usize>,
    /// Letter of each state (LTL problems only).
    pub state_letters: Vec<Letter>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub spec: SpecKind,
    pub system: System,
    pub regions: RegionTable,
    pub init: RegionId,
    pub unsafe_region: Option<RegionId>,
    pub vf: Option<RegionId>,
    /// Ordered `(letter, region)` pairs; the first match labels a point.
    pub labeling: Vec<(Letter, RegionId)>,
    pub nba: Option<Nba>,
    pub params: Params,
    pub constants: HashMap<String, f64>,
    pub finite: Option<FiniteSets>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("format error: {0}")]
    FormatError(String),
    #[error("labeling is not a partition at {point:?}: {detail}")]
    PartitionViolation { point: Vec<f64>, detail: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    Io(String),
}

fn fmt_err(msg: impl Into<String>) -> ProblemError {
    ProblemError::FormatError(msg.into())
}

impl Problem {
    pub fn dim(&self) -> usize {
        match &self.system {
            System::Continuous(c) => c.dim,
            System::Finite(f) => f.dim(),
        }
    }

    /// The state box; for finite systems the hull of the embedded states.
    pub fn state_box(&self) -> IntervalBox {
        match &self.system {
            System::Continuous(c) => c.state_box.clone(),
            System::Finite(f) => {
                let n = f.dim();
                IntervalBox(
                    (0..n)
                        .map(|d| {
                            let it = f.embedding.iter().map(|p| p[d]);
                            let lo = it.clone().fold(f64::INFINITY, f64::min);
                            let hi = it.fold(f64::NEG_INFINITY, f64::max);
                            Interval::new(lo, hi)
                        })
                        .collect(),
                )
            }
        }
    }

    /// Region covering the whole state space.
    pub fn state_region(&self) -> Region {
        match &self.system {
            System::Continuous(c) => Region::from_box(c.state_box.clone()),
            System::Finite(f) => Region::from_points(&f.embedding),
        }
    }

    /// Parser context with `blocks` argument blocks, regions and constants.
    pub fn context(&self, blocks: usize) -> VarContext {
        VarContext::blocks(self.dim(), blocks)
            .with_regions(self.regions.names())
            .with_constants(&self.constants)
    }

    pub fn region(&self, id: RegionId) -> &Region {
        self.regions.get(id)
    }

    pub fn letter_region(&self, l: &Letter) -> Option<RegionId> {
        self.labeling.iter().find(|(m, _)| m == l).map(|(_, r)| *r)
    }

    /// First label containing `p`.
    pub fn letter_of(&self, p: &[f64]) -> Option<&Letter> {
        self.labeling
            .iter()
            .find(|(_, r)| self.regions.get(*r).contains(p))
            .map(|(l, _)| l)
    }

    pub fn continuous(&self) -> Option<&ContinuousSystem> {
        match &self.system {
            System::Continuous(c) => Some(c),
            System::Finite(_) => None,
        }
    }

    pub fn finite_system(&self) -> Option<&FiniteSystem> {
        match &self.system {
            System::Finite(f) => Some(f),
            System::Continuous(_) => None,
        }
    }

    /// Block domain of a region, clipped to the state box.
    pub fn block(&self, id: RegionId) -> BlockDomain {
        BlockDomain::from_region(self.regions.get(id), &self.state_box())
    }

    pub fn whole_block(&self) -> BlockDomain {
        BlockDomain::from_region(&self.state_region(), &self.state_box())
    }

    /// Finite state whose embedding equals `p`.
    pub fn state_at(&self, p: &[f64]) -> Option<usize> {
        self.finite_system()?
            .embedding
            .iter()
            .position(|e| e.as_slice() == p)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Value(f64),
    Text(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawClause {
    #[serde(rename = "box")]
    bbox: Option<Vec<[Num; 2]>>,
    point: Option<Vec<Num>>,
    #[serde(default)]
    constraints: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    name: Option<String>,
    letter: Vec<String>,
    #[serde(default)]
    region: Vec<RawClause>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    from: StateRef,
    to: StateRef,
    letters: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNba {
    aps: Vec<String>,
    states: Vec<String>,
    initial: Vec<StateRef>,
    accepting: Vec<StateRef>,
    edges: Vec<RawEdge>,
    alphabet: Option<Vec<Vec<String>>>,
}

/// Automaton state by index or by name.
#[derive(Deserialize)]
#[serde(untagged)]
enum StateRef {
    Index(usize),
    Name(String),
}

impl StateRef {
    fn resolve(&self, names: &[String]) -> Result<usize, ProblemError> {
        match self {
            StateRef::Index(k) => Ok(*k),
            StateRef::Name(n) => names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| fmt_err(format!("unknown automaton state {n}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NbaRef {
    Inline(RawNba),
    Path(String),
}

#[derive(Deserialize, Default, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum SystemKind {
    #[default]
    Continuous,
    Finite,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: Option<String>,
    #[serde(default)]
    system: SystemKind,
    spec: SpecKind,
    dimension: Option<usize>,
    #[serde(default)]
    constants: BTreeMap<String, Num>,
    state_box: Option<Vec<[Num; 2]>>,
    dynamics: Option<Vec<String>>,
    init: Option<Vec<RawClause>>,
    #[serde(rename = "unsafe")]
    unsafe_region: Option<Vec<RawClause>>,
    vf: Option<Vec<RawClause>>,
    #[serde(default)]
    regions: BTreeMap<String, Vec<RawClause>>,
    labeling: Option<Vec<RawLabel>>,
    nba: Option<NbaRef>,
    #[serde(default)]
    parameters: Params,
    states: Option<usize>,
    initial: Option<Vec<usize>>,
    transitions: Option<Vec<(usize, usize)>>,
    unsafe_states: Option<Vec<usize>>,
    vf_states: Option<Vec<usize>>,
    embedding: Option<Vec<Vec<f64>>>,
    state_labels: Option<Vec<Vec<String>>>,
}

/// Parses a problem document; a relative HOA path is resolved against `base`.
pub fn load_problem(text: &str, base: Option<&Path>) -> Result<Problem, ProblemError> {
    let raw: RawProblem = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
    build(raw, base)
}

pub fn load_problem_file(path: &Path) -> Result<Problem, ProblemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
    load_problem(&text, path.parent())
}

fn constants_of(raw: &BTreeMap<String, Num>) -> Result<HashMap<String, f64>, ProblemError> {
    // constants may refer to earlier ones (in key order) and to pi
    let mut out = HashMap::new();
    let mut pending: Vec<(&String, &Num)> = raw.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for (k, v) in pending {
            match v {
                Num::Value(x) => {
                    out.insert(k.clone(), *x);
                }
                Num::Text(t) => {
                    let ctx = VarContext::default().with_constants(&out);
                    match parse_with(t, &ctx) {
                        Ok(e) => match e.as_const() {
                            Some(x) => {
                                out.insert(k.clone(), x);
                            }
                            None => return Err(fmt_err(format!("constant {k} is not constant"))),
                        },
                        Err(_) => rest.push((k, v)),
                    }
                }
            }
        }
        if rest.len() == before {
            return Err(fmt_err(format!("cannot resolve constant {}", rest[0].0)));
        }
        pending = rest;
    }
    Ok(out)
}

fn number(n: &Num, consts: &HashMap<String, f64>) -> Result<f64, ProblemError> {
    match n {
        Num::Value(v) => Ok(*v),
        Num::Text(t) => {
            let ctx = VarContext::default().with_constants(consts);
            let e = parse_with(t, &ctx).map_err(|e| fmt_err(format!("{t:?}: {e}")))?;
            e.as_const()
                .ok_or_else(|| fmt_err(format!("{t:?} is not a constant")))
        }
    }
}

fn interval_box(
    raw: &[[Num; 2]],
    consts: &HashMap<String, f64>,
) -> Result<IntervalBox, ProblemError> {
    raw.iter()
        .map(|[a, b]| {
            let (lo, hi) = (number(a, consts)?, number(b, consts)?);
            Interval::try_new(lo, hi).ok_or_else(|| fmt_err(format!("bad interval [{lo}, {hi}]")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(IntervalBox)
}

fn region(
    raw: &[RawClause],
    n: usize,
    state_box: &IntervalBox,
    consts: &HashMap<String, f64>,
) -> Result<Region, ProblemError> {
    let ctx = VarContext::blocks(n, 1).with_constants(consts);
    let mut clauses = Vec::new();
    for c in raw {
        let bbox = match (&c.bbox, &c.point) {
            (Some(_), Some(_)) => return Err(fmt_err("clause has both box and point")),
            (Some(b), None) => interval_box(b, consts)?,
            (None, Some(p)) => IntervalBox(
                p.iter()
                    .map(|v| number(v, consts).map(Interval::point))
                    .collect::<Result<_, _>>()?,
            ),
            (None, None) => state_box.clone(),
        };
        if bbox.dim() != n {
            return Err(ProblemError::DimensionMismatch(format!(
                "clause box has {} dims, expected {n}",
                bbox.dim()
            )));
        }
        let constraints = c
            .constraints
            .iter()
            .map(|t| parse_with(t, &ctx).map_err(|e| fmt_err(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<Expr>, _>>()?;
        clauses.push(Clause { bbox, constraints });
    }
    Ok(Region::new(clauses))
}

fn nba_of(r: NbaRef, base: Option<&Path>) -> Result<Nba, ProblemError> {
    match r {
        NbaRef::Path(p) => {
            let path = match base {
                Some(b) if Path::new(&p).is_relative() => b.join(&p),
                _ => Path::new(&p).to_path_buf(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
            parse_hoa(&text).map_err(|e| fmt_err(format!("{}: {e}", path.display())))
        }
        NbaRef::Inline(raw) => {
            let alphabet = match raw.alphabet {
                Some(a) => a.iter().map(|l| Letter::new(l)).collect(),
                None => Nba::full_alphabet(&raw.aps),
            };
            let names = &raw.states;
            let mut transitions = Vec::new();
            for e in &raw.edges {
                let (from, to) = (e.from.resolve(names)?, e.to.resolve(names)?);
                for l in &e.letters {
                    transitions.push(Transition {
                        from,
                        letter: Letter::new(l),
                        to,
                    });
                }
            }
            let initial = raw.initial.iter().map(|s| s.resolve(names)).collect::<Result<Vec<_>, _>>()?;
            let accepting = raw.accepting.iter().map(|s| s.resolve(names)).collect::<Result<Vec<_>, _>>()?;
            Nba::with_names(raw.aps, alphabet, raw.states, initial, accepting, transitions)
            .map_err(|e| fmt_err(e.to_string()))
        }
    }
}

fn label_name(l: &Letter) -> String {
    if l.0.is_empty() {
        "L_".to_string()
    } else {
        format!("L_{}", l.0.join("_"))
    }
}

fn build(raw: RawProblem, base: Option<&Path>) -> Result<Problem, ProblemError> {
    let constants = constants_of(&raw.constants)?;
    let name = raw.name.clone().unwrap_or_else(|| "problem".into());
    let nba = raw.nba.map(|r| nba_of(r, base)).transpose()?;
    let needs_labels = raw.spec == SpecKind::Ltl;
    let mut regions = RegionTable::new();
    let params = raw.parameters;
    if params.tau1 < 0.0 || params.tau2 < 0.0 || params.tau3 < 0.0 || !(params.xi_min > 0.0) {
        return Err(fmt_err("parameters need tau >= 0 and xi_min > 0"));
    }

    let problem = match raw.system {
        SystemKind::Finite => {
            for (k, v) in [
                ("dynamics", raw.dynamics.is_some()),
                ("state_box", raw.state_box.is_some()),
            ] {
                if v {
                    return Err(fmt_err(format!("finite problems take no {k}")));
                }
            }
            let states = raw
                .states
                .ok_or_else(|| fmt_err("finite problem needs states"))?;
            let initial = raw
                .initial
                .ok_or_else(|| fmt_err("finite problem needs initial"))?;
            let edges = raw
                .transitions
                .ok_or_else(|| fmt_err("finite problem needs transitions"))?;
            let sys = FiniteSystem::new(states, initial, &edges, raw.embedding)
                .map_err(|e| fmt_err(e.to_string()))?;
            let n = sys.dim();
            if let Some(d) = raw.dimension {
                if d != n {
                    return Err(ProblemError::DimensionMismatch(format!(
                        "dimension {d}, embedding {n}"
                    )));
                }
            }
            if sys.embedding.iter().any(|p| p.len() != n) {
                return Err(ProblemError::DimensionMismatch("ragged embedding".into()));
            }
            for a in 0..states {
                for b in a + 1..states {
                    if sys.embedding[a] == sys.embedding[b] {
                        return Err(fmt_err(format!("states {a} and {b} share an embedding")));
                    }
                }
            }
            let points = |ids: &[usize]| -> Result<Region, ProblemError> {
                let mut pts = Vec::new();
                for &s in ids {
                    pts.push(
                        sys.embedding
                            .get(s)
                            .cloned()
                            .ok_or_else(|| fmt_err(format!("bad state {s}")))?,
                    );
                }
                Ok(Region::from_points(&pts))
            };
            let init = regions.insert("init", points(&sys.initial)?);
            let unsafe_states = raw.unsafe_states.unwrap_or_default();
            let vf_states = raw.vf_states.unwrap_or_default();
            let unsafe_region = Some(regions.insert("unsafe", points(&unsafe_states)?));
            let vf = Some(regions.insert("vf", points(&vf_states)?));
            let mut labeling = Vec::new();
            let mut state_letters = Vec::new();
            if let Some(sl) = raw.state_labels {
                if sl.len() != states {
                    return Err(fmt_err(format!(
                        "state_labels has {} entries for {states} states",
                        sl.len()
                    )));
                }
                state_letters = sl.iter().map(|l| Letter::new(l)).collect();
                let mut by_letter: BTreeMap<Letter, Vec<usize>> = BTreeMap::new();
                for (s, l) in state_letters.iter().enumerate() {
                    by_letter.entry(l.clone()).or_default().push(s);
                }
                for (l, ss) in by_letter {
                    let id = regions.insert(&label_name(&l), points(&ss)?);
                    labeling.push((l, id));
                }
            }
            // one point region per state, for tabular bases
            for k in 0..states {
                regions.insert(&format!("state{k}"), points(&[k])?);
            }
            Problem {
                name,
                spec: raw.spec,
                system: System::Finite(sys),
                regions,
                init,
                unsafe_region,
                vf,
                labeling,
                nba,
                params,
                constants,
                finite: Some(FiniteSets {
                    unsafe_states,
                    vf_states,
                    state_letters,
                }),
            }
        }
        SystemKind::Continuous => {
            let n = raw
                .dimension
                .ok_or_else(|| fmt_err("continuous problem needs dimension"))?;
            if n == 0 {
                return Err(fmt_err("dimension must be positive"));
            }
            let state_box = interval_box(
                raw.state_box
                    .as_deref()
                    .ok_or_else(|| fmt_err("continuous problem needs state_box"))?,
                &constants,
            )?;
            if state_box.dim() != n {
                return Err(ProblemError::DimensionMismatch(format!(
                    "state_box has {} dims",
                    state_box.dim()
                )));
            }
            let mut ctx_regions: Vec<String> = vec!["init".into(), "unsafe".into(), "vf".into()];
            ctx_regions.extend(raw.regions.keys().cloned());
            let mut label_names = Vec::new();
            for l in raw.labeling.iter().flatten() {
                let nm = l
                    .name
                    .clone()
                    .unwrap_or_else(|| label_name(&Letter::new(&l.letter)));
                label_names.push(nm.clone());
                ctx_regions.push(nm);
            }
            let ctx = VarContext::blocks(n, 1)
                .with_regions(&ctx_regions)
                .with_constants(&constants);
            let dyn_text = raw
                .dynamics
                .ok_or_else(|| fmt_err("continuous problem needs dynamics"))?;
            if dyn_text.len() != n {
                return Err(ProblemError::DimensionMismatch(format!(
                    "{} dynamics for dimension {n}",
                    dyn_text.len()
                )));
            }
            let dynamics = dyn_text
                .iter()
                .map(|t| parse_with(t, &ctx).map_err(|e| fmt_err(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let reg = |c: &Option<Vec<RawClause>>| -> Result<Region, ProblemError> {
                c.as_deref().map_or(Ok(Region::default()), |c| {
                    region(c, n, &state_box, &constants)
                })
            };
            let init = regions.insert("init", reg(&raw.init)?);
            let unsafe_region = Some(regions.insert("unsafe", reg(&raw.unsafe_region)?));
            let vf = Some(regions.insert("vf", reg(&raw.vf)?));
            for (k, c) in &raw.regions {
                regions.insert(k, region(c, n, &state_box, &constants)?);
            }
            let mut labeling = Vec::new();
            for (l, nm) in raw.labeling.iter().flatten().zip(&label_names) {
                let letter = Letter::new(&l.letter);
                if labeling
                    .iter()
                    .any(|(m, _): &(Letter, RegionId)| *m == letter)
                {
                    return Err(fmt_err(format!("letter {letter} labeled twice")));
                }
                let id = regions.insert(nm, region(&l.region, n, &state_box, &constants)?);
                labeling.push((letter, id));
            }
            debug_assert_eq!(regions.names(), ctx_regions.as_slice());
            Problem {
                name,
                spec: raw.spec,
                system: System::Continuous(ContinuousSystem {
                    dim: n,
                    state_box,
                    dynamics,
                }),
                regions,
                init,
                unsafe_region,
                vf,
                labeling,
                nba,
                params,
                constants,
                finite: None,
            }
        }
    };

    if problem.region(problem.init).is_empty() {
        return Err(fmt_err("init region is empty"));
    }
    if needs_labels != !problem.labeling.is_empty() {
        return Err(fmt_err(if needs_labels {
            "ltl problems need a labeling"
        } else {
            "labeling is only allowed for ltl problems"
        }));
    }
    if needs_labels {
        let a = problem
            .nba
            .as_ref()
            .ok_or_else(|| fmt_err("ltl problems need an nba"))?;
        if a.initial.is_empty() {
            return Err(fmt_err("nba has no initial state"));
        }
        for (l, _) in &problem.labeling {
            if a.letter_index(l).is_none() {
                return Err(fmt_err(format!("letter {l} is not in the nba alphabet")));
            }
        }
    }
    if problem.spec == SpecKind::Safety
        && problem
            .unsafe_region
            .map_or(true, |u| problem.region(u).is_empty())
    {
        log::warn!("safety problem {} has an empty unsafe region", problem.name);
    }
    if let System::Continuous(_) = problem.system {
        validate_partition(
            &problem,
            &FalsifierConfig {
                budget: 200_000,
                ..Default::default()
            },
        )?;
    }
    Ok(problem)
}

/// Two clauses touch without overlapping when some dimension of their
/// intersection is a shared face of a non-degenerate clause box.
fn touching(a: &IntervalBox, b: &IntervalBox, i: &IntervalBox) -> bool {
    (0..i.dim()).any(|d| {
        let iv = i.0[d];
        if iv.width() > 0.0 {
            return false;
        }
        let on_face = |c: &Interval| c.width() > 0.0 && (iv.lo == c.lo || iv.lo == c.hi);
        on_face(&a.0[d]) || on_face(&b.0[d])
    })
}

/// Labels must be disjoint (shared clause faces excepted; the first label
/// wins there) and must cover the state box. Checked with the falsifier;
/// unresolved leaves are logged and accepted.
pub fn validate_partition(p: &Problem, cfg: &FalsifierConfig) -> Result<(), ProblemError> {
    if p.labeling.is_empty() {
        return Ok(());
    }
    let n = p.dim();
    let sb = p.state_box();
    for (ia, (la, ra)) in p.labeling.iter().enumerate() {
        for (lb, rb) in &p.labeling[ia + 1..] {
            for ca in &p.region(*ra).clauses {
                for cb in &p.region(*rb).clauses {
                    let Some(i) = ca.bbox.intersect(&cb.bbox).and_then(|i| i.intersect(&sb)) else {
                        continue;
                    };
                    if touching(&ca.bbox, &cb.bbox, &i) {
                        continue;
                    }
                    let conjuncts: Vec<(Expr, Sense, f64)> = ca
                        .constraints
                        .iter()
                        .chain(&cb.constraints)
                        .map(|g| (g.clone(), Sense::Ge, 0.0))
                        .collect();
                    let detail = format!("labels {la} and {lb} overlap");
                    if conjuncts.is_empty() {
                        return Err(ProblemError::PartitionViolation {
                            point: i.midpoint(),
                            detail,
                        });
                    }
                    let claim = Claim::UnsatConj {
                        conjuncts,
                        domain: Domain::new(n, vec![BlockDomain::from_box(i)]),
                    };
                    match falsifier::decide(&claim, &p.regions, cfg) {
                        Ok(Decision::Counterexample { point, .. }) => {
                            return Err(ProblemError::PartitionViolation { point, detail })
                        }
                        Ok(Decision::Unknown { .. }) => {
                            log::warn!("{detail}: disjointness unresolved")
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    let cover = p
        .labeling
        .iter()
        .map(|(_, r)| Expr::Indicator(*r, (0..n).map(Expr::Var).collect()))
        .fold(Expr::constant(-1.0), Expr::add);
    let claim = Claim::ForAllNonneg {
        expr: cover,
        domain: Domain::new(n, vec![BlockDomain::from_box(sb)]),
    };
    match falsifier::decide(&claim, &p.regions, cfg) {
        Ok(Decision::Counterexample { point, .. }) => Err(ProblemError::PartitionViolation {
            point,
            detail: "point has no label".into(),
        }),
        Ok(Decision::Unknown { .. }) => {
            log::warn!("label coverage unresolved");
            Ok(())
        }
        Ok(Decision::Verified { .. }) => Ok(()),
        Err(e) => Err(fmt_err(e.to_string())),
    }
}
