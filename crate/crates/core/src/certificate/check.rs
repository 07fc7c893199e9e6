//! Certificate checking: exhaustive on finite problems, branch-and-prune on
//! continuous ones, plus a sampling-grade screen.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::claims::{condition_claims, Condition};
use super::{CertError, CertKind, Certificate, CheckMode};
use crate::expr::IntervalBox;
use crate::falsifier::{self, Claim, Decision, FalsifierConfig};
use crate::problem::Problem;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Falsified,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub label: String,
    pub status: Status,
    /// Certified lower bound of the checked quantity when verified.
    pub margin: Option<f64>,
    /// Witness tuple, one point per argument block.
    pub witness: Option<Vec<Vec<f64>>>,
    /// Finite state indices of the witness, when the problem is finite.
    pub states: Vec<usize>,
    /// Automaton states of the witness (LTL only).
    pub automaton: Vec<usize>,
    pub value: Option<f64>,
    pub boxes: usize,
    pub unresolved: usize,
    pub smallest: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Verified {
        margins: Vec<(String, f64)>,
    },
    Falsified {
        condition: String,
        witness: Vec<Vec<f64>>,
        automaton: Vec<usize>,
        value: f64,
    },
    Unknown {
        condition: String,
        unresolved: usize,
        budget_exhausted: bool,
        smallest: Option<Vec<[f64; 2]>>,
    },
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub kind: CertKind,
    pub mode: CheckMode,
    pub verdict: Verdict,
    pub conditions: Vec<ConditionResult>,
    /// Upper bound of the certificate over the state box (persistence and LTL).
    pub bound: Option<f64>,
    /// Largest `ξ` the separation condition certifies.
    pub best_xi: Option<f64>,
    /// Number of conditions evaluating each automaton piece.
    pub activations: BTreeMap<String, usize>,
    pub exhaustive: bool,
}

/// Box budget for tightening margins of verified conditions.
const MARGIN_BUDGET: usize = 20_000;

fn boxed(b: &IntervalBox) -> Vec<[f64; 2]> {
    b.0.iter().map(|iv| [iv.lo, iv.hi]).collect()
}

fn split_blocks(p: &[f64], n: usize) -> Vec<Vec<f64>> {
    p.chunks(n.max(1)).map(<[f64]>::to_vec).collect()
}

fn piece_key(p: &Problem, (i, j): (usize, usize)) -> String {
    match &p.nba {
        Some(a) => format!("{},{}", a.state_names[i], a.state_names[j]),
        None => format!("{i},{j}"),
    }
}

pub fn check(cert: &Certificate, p: &Problem, mode: CheckMode) -> Result<CheckReport, CertError> {
    check_with(cert, p, mode, &FalsifierConfig::default())
}

pub fn check_with(
    cert: &Certificate,
    p: &Problem,
    mode: CheckMode,
    cfg: &FalsifierConfig,
) -> Result<CheckReport, CertError> {
    if p.finite_system().is_some() {
        return check_finite_report(cert, p, mode);
    }
    let claims = condition_claims(cert, p, mode, cfg.eps)?;
    let bound = certificate_bound(cert, p)?;
    let n = p.dim();
    let results: Vec<Result<ConditionResult, CertError>> = claims
        .par_iter()
        .map(|(cond, claim)| {
            let label = cond.label(p.nba.as_ref());
            let d = falsifier::decide(claim, &p.regions, cfg)
                .map_err(|e| CertError::Falsifier(e.to_string()))?;
            let mut r = ConditionResult {
                condition: cond.clone(),
                label,
                status: Status::Verified,
                margin: None,
                witness: None,
                states: Vec::new(),
                automaton: Vec::new(),
                value: None,
                boxes: 0,
                unresolved: 0,
                smallest: None,
            };
            match d {
                Decision::Verified { min_lower, boxes } => {
                    r.boxes = boxes;
                    if let Claim::ForAllNonneg { expr, domain } = claim {
                        let (lo, _) =
                            falsifier::bound_min(expr, domain, &p.regions, MARGIN_BUDGET, 1e-7);
                        r.margin = Some(lo.max(min_lower));
                    }
                }
                Decision::Counterexample { point, values } => {
                    r.status = Status::Falsified;
                    r.value = values.first().copied();
                    r.witness = Some(split_blocks(&point, n));
                    r.automaton = automaton_of(cond);
                }
                Decision::Unknown {
                    unresolved,
                    smallest,
                    boxes,
                    ..
                } => {
                    r.status = Status::Unknown;
                    r.unresolved = unresolved;
                    r.boxes = boxes;
                    r.smallest = smallest.as_ref().map(boxed);
                }
            }
            Ok(r)
        })
        .collect();
    let conditions = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let budget_exhausted = |r: &ConditionResult| r.boxes >= cfg.budget;
    let verdict = summarize(&conditions, budget_exhausted);
    let best_xi = conditions
        .iter()
        .find(|r| r.condition == Condition::Separate)
        .and_then(|r| r.margin)
        .map(|m| m + cert.xi);
    let mut activations = BTreeMap::new();
    if cert.kind == CertKind::LtlCc {
        for (c, _) in &claims {
            for pc in c.pieces() {
                *activations.entry(piece_key(p, pc)).or_insert(0) += 1;
            }
        }
    }
    Ok(CheckReport {
        kind: cert.kind,
        mode,
        verdict,
        conditions,
        bound,
        best_xi,
        activations,
        exhaustive: false,
    })
}

fn automaton_of(c: &Condition) -> Vec<usize> {
    match c {
        Condition::ProductStep { from, to, .. } => vec![*from, *to],
        Condition::ProductPropagate { from, to, j, .. } => vec![*from, *to, *j],
        Condition::ProductDecrease { s, l, l2 } => vec![*s, *l, *l2],
        _ => Vec::new(),
    }
}

fn summarize(
    conditions: &[ConditionResult],
    exhausted: impl Fn(&ConditionResult) -> bool,
) -> Verdict {
    if let Some(r) = conditions.iter().find(|r| r.status == Status::Falsified) {
        return Verdict::Falsified {
            condition: r.label.clone(),
            witness: r.witness.clone().unwrap_or_default(),
            automaton: r.automaton.clone(),
            value: r.value.unwrap_or(f64::NAN),
        };
    }
    if let Some(r) = conditions.iter().find(|r| r.status == Status::Unknown) {
        return Verdict::Unknown {
            condition: r.label.clone(),
            unresolved: r.unresolved,
            budget_exhausted: exhausted(r),
            smallest: r.smallest.clone(),
        };
    }
    Verdict::Verified {
        margins: conditions
            .iter()
            .map(|r| (r.label.clone(), r.margin.unwrap_or(f64::NAN)))
            .collect(),
    }
}

/// Upper endpoint of the certificate over the state box, for the kinds
/// whose definition asks for boundedness.
fn certificate_bound(cert: &Certificate, p: &Problem) -> Result<Option<f64>, CertError> {
    if !matches!(cert.kind, CertKind::PersistenceCc | CertKind::LtlCc) {
        return Ok(None);
    }
    let sb = p.state_box();
    let xy: Vec<_> = sb.0.iter().chain(&sb.0).copied().collect();
    let q = if cert.kind == CertKind::LtlCc {
        p.nba.as_ref().map_or(1, |a| a.num_states())
    } else {
        1
    };
    let mut hi = f64::NEG_INFINITY;
    for row in cert.pieces(q)? {
        for t in row {
            hi = hi.max(t.enclose(&xy, &p.regions).hi);
        }
    }
    if !hi.is_finite() {
        return Err(CertError::UnboundedTemplate);
    }
    Ok(Some(hi))
}

fn check_finite_report(
    cert: &Certificate,
    p: &Problem,
    mode: CheckMode,
) -> Result<CheckReport, CertError> {
    let emb = &p.finite_system().expect("finite").embedding;
    let base = |condition: Condition, status: Status| ConditionResult {
        label: condition.label(p.nba.as_ref()),
        condition,
        status,
        margin: None,
        witness: None,
        states: Vec::new(),
        automaton: Vec::new(),
        value: None,
        boxes: 0,
        unresolved: 0,
        smallest: None,
    };
    let conditions = match cert.check_finite(p, mode)? {
        Ok(margins) => margins
            .into_iter()
            .map(|(c, m)| {
                let mut r = base(c, Status::Verified);
                r.margin = Some(m);
                r
            })
            .collect(),
        Err(v) => {
            let mut r = base(v.condition.clone(), Status::Falsified);
            r.witness = Some(v.states.iter().map(|&s| emb[s].clone()).collect());
            r.states = v.states;
            r.automaton = v.automaton;
            r.value = Some(v.value);
            vec![r]
        }
    };
    let verdict = summarize(&conditions, |_| false);
    let best_xi = conditions
        .iter()
        .find(|r| r.condition == Condition::Separate)
        .and_then(|r| r.margin)
        .map(|m| m + cert.xi);
    Ok(CheckReport {
        kind: cert.kind,
        mode,
        verdict,
        conditions,
        bound: None,
        best_xi,
        activations: BTreeMap::new(),
        exhaustive: true,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleStats {
    pub condition: Condition,
    pub label: String,
    pub tuples: usize,
    pub violations: usize,
    /// Smallest value of the checked quantity (nonnegativity claims).
    pub worst: Option<f64>,
    /// Worst violating tuple (first one for implications), one point per block.
    pub witness: Option<Vec<Vec<f64>>>,
    pub automaton: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub mode: CheckMode,
    pub per_condition: Vec<SampleStats>,
    pub activations: BTreeMap<String, usize>,
}

impl SampleReport {
    pub fn violations(&self) -> usize {
        self.per_condition.iter().map(|s| s.violations).sum()
    }
}

/// Evaluates every condition at `tuples` seeded random tuples from its domain.
/// A tuple violates when the checked quantity is below `-1e-9`.
pub fn sample_check(
    cert: &Certificate,
    p: &Problem,
    mode: CheckMode,
    tuples: usize,
    seed: u64,
) -> Result<SampleReport, CertError> {
    const TOL: f64 = 1e-9;
    let claims = condition_claims(cert, p, mode, TOL)?;
    let n = p.dim();
    let per_condition: Vec<SampleStats> = claims
        .par_iter()
        .enumerate()
        .map(|(k, (cond, claim))| {
            let mut r = rng::substream(seed, k as u64);
            let mut s = SampleStats {
                condition: cond.clone(),
                label: cond.label(p.nba.as_ref()),
                tuples: 0,
                violations: 0,
                worst: None,
                witness: None,
                automaton: automaton_of(cond),
            };
            for _ in 0..tuples {
                let Some(pt) = claim.domain().sample(&mut r, 10_000) else {
                    break;
                };
                s.tuples += 1;
                let mut new_worst = false;
                if let Claim::ForAllNonneg { expr, .. } = claim {
                    let v = expr.eval(&pt, &p.regions);
                    new_worst = s.worst.is_none_or(|w| v < w);
                    s.worst = Some(s.worst.map_or(v, |w: f64| w.min(v)));
                }
                if claim.violated_at(&pt, &p.regions, TOL) {
                    s.violations += 1;
                    if s.witness.is_none() || new_worst {
                        s.witness = Some(split_blocks(&pt, n));
                    }
                }
            }
            s
        })
        .collect();
    let mut activations = BTreeMap::new();
    if cert.kind == CertKind::LtlCc {
        for ((c, _), s) in claims.iter().zip(&per_condition) {
            for pc in c.pieces() {
                *activations.entry(piece_key(p, pc)).or_insert(0) += s.tuples;
            }
        }
    }
    Ok(SampleReport {
        mode,
        per_condition,
        activations,
    })
}
