//! Branch-and-prune over boxes: proves a universally quantified claim with
//! interval enclosures or returns a concrete counterexample.
//!
//! Boxes are explored best-first by their enclosure lower bound, so the most
//! violating region is refined first. Every box gets a midpoint check before
//! it is split. Boxes narrower than `delta` that can be neither pruned nor
//! refuted are reported as unresolved.
//!
//! Tolerance: a box is pruned for `ForAllNonneg` once its lower bound is at
//! least `-eps`, and a point only counts as a counterexample when its value
//! is below `-eps`. Both sides use the same slack, so refining never turns a
//! proof into a refutation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::expr::{Expr, Interval, IntervalBox, RegionEnv, RegionId};
use crate::region::{next_down, Region};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FalsifierConfig {
    /// Minimum box width.
    pub delta: f64,
    /// Maximum number of boxes evaluated.
    pub budget: usize,
    /// Strictness slack.
    pub eps: f64,
}

impl Default for FalsifierConfig {
    fn default() -> Self {
        FalsifierConfig {
            delta: 1e-3,
            budget: 1_000_000,
            eps: 1e-6,
        }
    }
}

impl FalsifierConfig {
    pub fn validate(&self) -> Result<(), FalsifierError> {
        if !(self.delta > 0.0) || self.budget == 0 || !(self.eps >= 0.0) {
            return Err(FalsifierError::BudgetConfigInvalid(format!(
                "delta={} budget={} eps={}",
                self.delta, self.budget, self.eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FalsifierError {
    #[error("invalid falsifier configuration: {0}")]
    BudgetConfigInvalid(String),
    #[error("claim uses {need} variables but the domain has {got}")]
    DimensionMismatch { need: usize, got: usize },
}

/// One argument block of a domain: a union of boxes, each with constraint
/// filters `g ≥ 0` over the block's own variables `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDomain {
    pub pieces: Vec<(IntervalBox, Vec<Expr>)>,
}

impl BlockDomain {
    pub fn from_box(b: IntervalBox) -> Self {
        BlockDomain {
            pieces: vec![(b, Vec::new())],
        }
    }

    /// The region intersected with `state_box`, one piece per clause.
    pub fn from_region(r: &Region, state_box: &IntervalBox) -> Self {
        let pieces = r
            .clauses
            .iter()
            .filter_map(|c| {
                c.bbox
                    .intersect(state_box)
                    .map(|b| (b, c.constraints.clone()))
            })
            .collect();
        BlockDomain { pieces }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.pieces.iter().any(|(b, gs)| {
            b.contains_point(p) && gs.iter().all(|g| g.eval(p, &crate::expr::NoRegions) >= 0.0)
        })
    }
}

/// Cartesian product of blocks, each `n` variables wide.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub block_dim: usize,
    pub blocks: Vec<BlockDomain>,
}

impl Domain {
    pub fn new(block_dim: usize, blocks: Vec<BlockDomain>) -> Self {
        Domain { block_dim, blocks }
    }

    pub fn dim(&self) -> usize {
        self.block_dim * self.blocks.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let n = self.block_dim;
        self.blocks
            .iter()
            .enumerate()
            .all(|(k, b)| b.contains(&p[k * n..(k + 1) * n]))
    }

    /// Initial boxes with their filters lifted to the full variable vector.
    fn starts(&self) -> Vec<(IntervalBox, Vec<Expr>)> {
        let n = self.block_dim;
        let mut out: Vec<(IntervalBox, Vec<Expr>)> = vec![(IntervalBox(Vec::new()), Vec::new())];
        for (k, block) in self.blocks.iter().enumerate() {
            let mut next = Vec::new();
            for (b, fs) in &out {
                for (pb, gs) in &block.pieces {
                    let mut bb = b.clone();
                    bb.0.extend(pb.0.iter().copied());
                    let mut f = fs.clone();
                    f.extend(gs.iter().map(|g| g.substitute(&|i| Expr::Var(k * n + i))));
                    next.push((bb, f));
                }
            }
            out = next;
        }
        out
    }

    /// Seeded uniform samples: a piece per block chosen uniformly, a point
    /// uniformly inside it, rejected unless it meets the filters.
    pub fn sample(&self, rng: &mut crate::rng::Rng, max_tries: usize) -> Option<Vec<f64>> {
        use rand::Rng as _;
        let n = self.block_dim;
        let mut p = Vec::with_capacity(self.dim());
        for block in &self.blocks {
            if block.pieces.is_empty() {
                return None;
            }
            let mut found = None;
            for _ in 0..max_tries {
                let (b, gs) = &block.pieces[rng.gen_range(0..block.pieces.len())];
                let q: Vec<f64> =
                    b.0.iter()
                        .map(|iv| (iv.lo + (iv.hi - iv.lo) * rng.gen::<f64>()).clamp(iv.lo, iv.hi))
                        .collect();
                if gs
                    .iter()
                    .all(|g| g.eval(&q, &crate::expr::NoRegions) >= 0.0)
                {
                    found = Some(q);
                    break;
                }
            }
            p.extend(found?);
        }
        debug_assert_eq!(p.len(), n * self.blocks.len());
        Some(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Claim {
    /// `expr ≥ 0` everywhere on the domain.
    ForAllNonneg { expr: Expr, domain: Domain },
    /// No point of the domain satisfies every `expr (≥|≤) rhs`.
    UnsatConj {
        conjuncts: Vec<(Expr, Sense, f64)>,
        domain: Domain,
    },
}

impl Claim {
    pub fn domain(&self) -> &Domain {
        match self {
            Claim::ForAllNonneg { domain, .. } | Claim::UnsatConj { domain, .. } => domain,
        }
    }

    fn exprs(&self) -> Vec<&Expr> {
        match self {
            Claim::ForAllNonneg { expr, .. } => vec![expr],
            Claim::UnsatConj { conjuncts, .. } => conjuncts.iter().map(|c| &c.0).collect(),
        }
    }

    /// Point values of the claim expressions.
    pub fn values(&self, p: &[f64], env: &dyn RegionEnv) -> Vec<f64> {
        self.exprs().iter().map(|e| e.eval(p, env)).collect()
    }

    /// Whether `p` refutes the claim, using the `eps` slack for `ForAllNonneg`.
    pub fn violated_at(&self, p: &[f64], env: &dyn RegionEnv, eps: f64) -> bool {
        match self {
            Claim::ForAllNonneg { expr, .. } => expr.eval(p, env) < -eps,
            Claim::UnsatConj { conjuncts, .. } => conjuncts.iter().all(|(e, s, rhs)| {
                let v = e.eval(p, env);
                match s {
                    Sense::Ge => v >= *rhs,
                    Sense::Le => v <= *rhs,
                }
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Verified {
        /// Smallest lower bound over all pruned leaves (`ForAllNonneg` only).
        min_lower: f64,
        boxes: usize,
    },
    Counterexample {
        point: Vec<f64>,
        values: Vec<f64>,
    },
    Unknown {
        unresolved: usize,
        smallest: Option<IntervalBox>,
        boxes: usize,
        budget_exhausted: bool,
        /// Midpoints of unresolved leaves, most suspicious first.
        candidates: Vec<Vec<f64>>,
    },
}

impl Decision {
    pub fn is_verified(&self) -> bool {
        matches!(self, Decision::Verified { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Pruned,
    Outside,
    Unresolved,
    Refuted,
}

/// One processed leaf, for tracing and coverage checks.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub bx: IntervalBox,
    pub kind: LeafKind,
    pub lower: f64,
}

impl Leaf {
    /// Single trace line: kind, lower bound, then the box.
    pub fn trace_line(&self) -> String {
        let mut s = format!("{:?} lower={:e}", self.kind, self.lower);
        for iv in &self.bx.0 {
            let _ = write!(s, " [{:e},{:e}]", iv.lo, iv.hi);
        }
        s
    }
}

struct Item {
    key: f64,
    seq: u64,
    bx: IntervalBox,
    filters: usize,
}

impl PartialEq for Item {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    // BinaryHeap is a max-heap: smaller key, then earlier seq, pops first
    fn cmp(&self, o: &Self) -> Ordering {
        o.key.total_cmp(&self.key).then(o.seq.cmp(&self.seq))
    }
}

enum Eval {
    Outside,
    Pruned(f64),
    Open(f64),
}

struct Search<'a> {
    claim: &'a Claim,
    env: &'a dyn RegionEnv,
    cfg: FalsifierConfig,
    filter_sets: Vec<Vec<Expr>>,
    indicators: Vec<(RegionId, Vec<usize>)>,
    scale: Vec<f64>,
    /// Consequences `e ≤ b` of an unsat conjunction, checked per box.
    combos: Vec<(Expr, f64)>,
}

/// Differences of each `≤` conjunct with each `≥` conjunct and with the
/// sum of all of them. They refute boxes where conjuncts share terms that
/// plain enclosures cannot correlate.
fn conjunct_combos(claim: &Claim) -> Vec<(Expr, f64)> {
    let Claim::UnsatConj { conjuncts, .. } = claim else {
        return Vec::new();
    };
    let ge: Vec<&(Expr, Sense, f64)> = conjuncts.iter().filter(|c| c.1 == Sense::Ge).collect();
    let mut out = Vec::new();
    for (h, _, b) in conjuncts.iter().filter(|c| c.1 == Sense::Le) {
        for (g, _, a) in &ge {
            out.push((Expr::sub(h.clone(), g.clone()), b - a));
        }
        if ge.len() > 1 {
            let sum = ge
                .iter()
                .skip(1)
                .fold(ge[0].0.clone(), |acc, c| Expr::add(acc, c.0.clone()));
            out.push((
                Expr::sub(h.clone(), sum),
                b - ge.iter().map(|c| c.2).sum::<f64>(),
            ));
        }
    }
    out
}

impl Search<'_> {
    fn eval(&self, bx: &IntervalBox, filters: usize) -> Eval {
        for g in &self.filter_sets[filters] {
            if g.enclose(&bx.0, self.env).hi < 0.0 {
                return Eval::Outside;
            }
        }
        match self.claim {
            Claim::ForAllNonneg { expr, .. } => {
                let r = expr.enclose(&bx.0, self.env);
                if r.lo >= -self.cfg.eps {
                    Eval::Pruned(r.lo)
                } else {
                    Eval::Open(r.lo)
                }
            }
            Claim::UnsatConj { conjuncts, .. } => {
                let mut score = 0.0;
                for (e, s, rhs) in conjuncts {
                    let r = e.enclose(&bx.0, self.env);
                    let (excluded, gap) = match s {
                        Sense::Ge => (r.hi < *rhs, rhs - r.lo),
                        Sense::Le => (r.lo > *rhs, r.hi - rhs),
                    };
                    if excluded {
                        return Eval::Pruned(f64::INFINITY);
                    }
                    // conjunct not yet certainly satisfied: rank by the gap
                    score += gap.max(0.0) / (1.0 + r.width());
                }
                if self
                    .combos
                    .iter()
                    .any(|(e, b)| e.enclose(&bx.0, self.env).lo > *b)
                {
                    return Eval::Pruned(f64::INFINITY);
                }
                Eval::Open(score)
            }
        }
    }

    fn point_ok(&self, p: &[f64], filters: usize) -> bool {
        self.filter_sets[filters]
            .iter()
            .all(|g| g.eval(p, self.env) >= 0.0)
    }
}

/// Children of `bx`: split at an indicator boundary when some indicator of
/// the claim straddles, else bisect the widest dimension (widths divided by
/// `scale`). Degenerate dimensions are never split.
pub fn split_policy(
    bx: &IntervalBox,
    indicators: &[(RegionId, Vec<usize>)],
    env: &dyn RegionEnv,
    scale: Option<&[f64]>,
) -> Vec<IntervalBox> {
    for (region, vars) in indicators {
        let arg: Vec<Interval> = vars.iter().map(|&v| bx.0[v]).collect();
        if env.classify(*region, &arg) != crate::expr::Containment::Straddles {
            continue;
        }
        for (pos, &v) in vars.iter().enumerate() {
            let iv = bx.0[v];
            if let Some(&c) = env
                .cut_points(*region, &arg, pos)
                .iter()
                .find(|&&c| c > iv.lo && c <= iv.hi)
            {
                let mut left = bx.clone();
                let mut right = bx.clone();
                left.0[v] = Interval {
                    lo: iv.lo,
                    hi: next_down(c),
                };
                right.0[v] = Interval { lo: c, hi: iv.hi };
                return vec![left, right];
            }
        }
    }
    let d = bx.widest_dim(scale);
    if bx.0[d].width() <= 0.0 {
        return vec![bx.clone()];
    }
    let (a, b) = bx.bisect(d);
    vec![a, b]
}

/// Indicators whose arguments are plain variables, as `(region, var indices)`.
fn plain_indicators(exprs: &[&Expr]) -> Vec<(RegionId, Vec<usize>)> {
    fn walk(e: &Expr, out: &mut Vec<(RegionId, Vec<usize>)>) {
        match e {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Max(a, b)
            | Expr::Min(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) => walk(a, out),
            Expr::Indicator(r, args) => {
                let vars: Option<Vec<usize>> = args
                    .iter()
                    .map(|a| if let Expr::Var(i) = a { Some(*i) } else { None })
                    .collect();
                if let Some(v) = vars {
                    if !out.contains(&(*r, v.clone())) {
                        out.push((*r, v));
                    }
                }
                args.iter().for_each(|a| walk(a, out));
            }
        }
    }
    let mut out = Vec::new();
    exprs.iter().for_each(|e| walk(e, &mut out));
    out
}

pub fn decide(
    claim: &Claim,
    env: &dyn RegionEnv,
    cfg: &FalsifierConfig,
) -> Result<Decision, FalsifierError> {
    decide_traced(claim, env, cfg, &mut |_| {})
}

/// [`decide`] reporting every leaf to `trace`.
pub fn decide_traced(
    claim: &Claim,
    env: &dyn RegionEnv,
    cfg: &FalsifierConfig,
    trace: &mut dyn FnMut(&Leaf),
) -> Result<Decision, FalsifierError> {
    cfg.validate()?;
    let domain = claim.domain();
    let need = claim.exprs().iter().map(|e| e.arity()).max().unwrap_or(0);
    if need > domain.dim() {
        return Err(FalsifierError::DimensionMismatch {
            need,
            got: domain.dim(),
        });
    }
    let starts = domain.starts();
    let dim = domain.dim();
    let mut scale = vec![0.0f64; dim];
    for (b, _) in &starts {
        for (s, iv) in scale.iter_mut().zip(&b.0) {
            *s = s.max(iv.width());
        }
    }
    let mut search = Search {
        claim,
        env,
        cfg: *cfg,
        filter_sets: Vec::new(),
        indicators: plain_indicators(&claim.exprs()),
        scale,
        combos: conjunct_combos(claim),
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut boxes = 0usize;
    let mut min_lower = f64::INFINITY;
    for (b, fs) in starts {
        search.filter_sets.push(fs);
        let fi = search.filter_sets.len() - 1;
        boxes += 1;
        match search.eval(&b, fi) {
            Eval::Outside => trace(&Leaf {
                bx: b,
                kind: LeafKind::Outside,
                lower: f64::NAN,
            }),
            Eval::Pruned(lo) => {
                min_lower = min_lower.min(lo);
                trace(&Leaf {
                    bx: b,
                    kind: LeafKind::Pruned,
                    lower: lo,
                });
            }
            Eval::Open(key) => {
                heap.push(Item {
                    key,
                    seq,
                    bx: b,
                    filters: fi,
                });
                seq += 1;
            }
        }
    }
    let mut unresolved: Vec<(f64, IntervalBox)> = Vec::new();
    let mut exhausted = false;
    while let Some(item) = heap.pop() {
        let mid = item.bx.midpoint();
        if search.point_ok(&mid, item.filters) && claim.violated_at(&mid, env, cfg.eps) {
            let values = claim.values(&mid, env);
            trace(&Leaf {
                bx: item.bx,
                kind: LeafKind::Refuted,
                lower: item.key,
            });
            return Ok(Decision::Counterexample { point: mid, values });
        }
        if item.bx.max_width() < cfg.delta {
            trace(&Leaf {
                bx: item.bx.clone(),
                kind: LeafKind::Unresolved,
                lower: item.key,
            });
            unresolved.push((item.key, item.bx));
            continue;
        }
        if boxes >= cfg.budget {
            exhausted = true;
            unresolved.push((item.key, item.bx));
            unresolved.extend(heap.drain().map(|i| (i.key, i.bx)));
            break;
        }
        let children = split_policy(&item.bx, &search.indicators, env, Some(&search.scale));
        if children.len() == 1 {
            trace(&Leaf {
                bx: item.bx.clone(),
                kind: LeafKind::Unresolved,
                lower: item.key,
            });
            unresolved.push((item.key, item.bx));
            continue;
        }
        for c in children {
            boxes += 1;
            match search.eval(&c, item.filters) {
                Eval::Outside => trace(&Leaf {
                    bx: c,
                    kind: LeafKind::Outside,
                    lower: f64::NAN,
                }),
                Eval::Pruned(lo) => {
                    min_lower = min_lower.min(lo);
                    trace(&Leaf {
                        bx: c,
                        kind: LeafKind::Pruned,
                        lower: lo,
                    });
                }
                Eval::Open(key) => {
                    heap.push(Item {
                        key,
                        seq,
                        bx: c,
                        filters: item.filters,
                    });
                    seq += 1;
                }
            }
        }
    }
    if unresolved.is_empty() {
        return Ok(Decision::Verified { min_lower, boxes });
    }
    unresolved.sort_by(|a, b| a.0.total_cmp(&b.0));
    let smallest = unresolved
        .iter()
        .min_by(|a, b| a.1.max_width().total_cmp(&b.1.max_width()))
        .map(|u| u.1.clone());
    let candidates = unresolved.iter().take(64).map(|u| u.1.midpoint()).collect();
    Ok(Decision::Unknown {
        unresolved: unresolved.len(),
        smallest,
        boxes,
        budget_exhausted: exhausted,
        candidates,
    })
}

/// Certified bracket `[lower, upper]` on `inf expr` over the domain, refined
/// best-first until the gap is below `tol` or `budget` boxes are used.
/// `upper` is infinite when no domain point was evaluated.
pub fn bound_min(
    expr: &Expr,
    domain: &Domain,
    env: &dyn RegionEnv,
    budget: usize,
    tol: f64,
) -> (f64, f64) {
    let starts = domain.starts();
    let dim = domain.dim();
    let mut scale = vec![0.0f64; dim];
    for (b, _) in &starts {
        for (s, iv) in scale.iter_mut().zip(&b.0) {
            *s = s.max(iv.width());
        }
    }
    let mut filter_sets = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut upper = f64::INFINITY;
    let indicators = plain_indicators(&[expr]);
    let outside = |bx: &IntervalBox, fs: &[Expr]| fs.iter().any(|g| g.enclose(&bx.0, env).hi < 0.0);
    for (b, fs) in starts {
        if outside(&b, &fs) {
            continue;
        }
        let key = expr.enclose(&b.0, env).lo;
        filter_sets.push(fs);
        heap.push(Item {
            key,
            seq,
            bx: b,
            filters: filter_sets.len() - 1,
        });
        seq += 1;
    }
    let mut used = 0usize;
    let mut settled = f64::INFINITY;
    while let Some(item) = heap.pop() {
        let fs = &filter_sets[item.filters];
        let mid = item.bx.midpoint();
        if fs.iter().all(|g| g.eval(&mid, env) >= 0.0) {
            upper = upper.min(expr.eval(&mid, env));
        }
        if upper - item.key <= tol || used >= budget {
            return (item.key.min(settled), upper);
        }
        let children = split_policy(&item.bx, &indicators, env, Some(&scale));
        if children.len() == 1 {
            settled = settled.min(item.key);
            continue;
        }
        for c in children {
            used += 1;
            if outside(&c, fs) {
                continue;
            }
            let key = expr.enclose(&c.0, env).lo;
            if key > upper {
                continue;
            }
            heap.push(Item {
                key,
                seq,
                bx: c,
                filters: item.filters,
            });
            seq += 1;
        }
    }
    (settled.min(upper), upper)
}
