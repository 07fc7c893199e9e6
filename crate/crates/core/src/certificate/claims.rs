//! Certificate conditions as falsifier claims over continuous problems.

use std::fmt;

use serde::Serialize;

use super::{CertError, CertKind, Certificate, CheckMode};
use crate::automata::{Letter, Nba};
use crate::expr::Expr;
use crate::falsifier::{BlockDomain, Claim, Domain, Sense};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case", tag = "condition")]
pub enum Condition {
    /// `B ≤ 0` on initial states.
    BarrierInit,
    /// `B > 0` on unsafe states.
    BarrierUnsafe,
    /// The nonpositive sublevel set is closed under the dynamics.
    BarrierInvariant,
    /// `T(x, f(x)) ≥ 0`.
    Step,
    /// Nonnegativity propagates backwards along transitions.
    Propagate,
    /// `T(x0, xu) ≤ −ξ`.
    Separate,
    /// `T(x0, ·)` drops by `ξ` between consecutive target visits.
    Decrease,
    ProductStep {
        from: usize,
        letter: Letter,
        to: usize,
    },
    ProductPropagate {
        from: usize,
        letter: Letter,
        to: usize,
        j: usize,
    },
    ProductDecrease {
        s: usize,
        l: usize,
        l2: usize,
    },
}

impl Condition {
    /// Certificate pieces the condition evaluates.
    pub fn pieces(&self) -> Vec<(usize, usize)> {
        match self {
            Condition::ProductStep { from, to, .. } => vec![(*from, *to)],
            Condition::ProductPropagate { from, to, j, .. } => vec![(*from, *j), (*to, *j)],
            Condition::ProductDecrease { s, l, l2 } => vec![(*s, *l), (*s, *l2), (*l, *l2)],
            _ => vec![(0, 0)],
        }
    }

    pub fn label(&self, a: Option<&Nba>) -> String {
        let q = |k: &usize| a.map_or(format!("q{k}"), |a| a.state_names[*k].clone());
        match self {
            Condition::ProductStep { from, letter, to } => {
                format!("product-step {} -{letter}-> {}", q(from), q(to))
            }
            Condition::ProductPropagate {
                from,
                letter,
                to,
                j,
            } => {
                format!(
                    "product-propagate {} -{letter}-> {} | {}",
                    q(from),
                    q(to),
                    q(j)
                )
            }
            Condition::ProductDecrease { s, l, l2 } => {
                format!("product-decrease {} {} {}", q(s), q(l), q(l2))
            }
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::BarrierInit => f.write_str("barrier-init"),
            Condition::BarrierUnsafe => f.write_str("barrier-unsafe"),
            Condition::BarrierInvariant => f.write_str("barrier-invariant"),
            Condition::Step => f.write_str("step"),
            Condition::Propagate => f.write_str("propagate"),
            Condition::Separate => f.write_str("separate"),
            Condition::Decrease => f.write_str("decrease"),
            _ => f.write_str(&self.label(None)),
        }
    }
}

/// Argument of a certificate inside a claim: a variable block of the claim,
/// or the image of a block under the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arg {
    Block(usize),
    Image(usize),
}

/// `t` with its argument block `b` replaced by `args[b]`.
pub fn image_of(t: &Expr, n: usize, args: &[Arg], dynamics: &[Expr]) -> Expr {
    t.substitute(&|v| {
        let (b, i) = (v / n, v % n);
        match args[b] {
            Arg::Block(k) => Expr::Var(k * n + i),
            Arg::Image(k) => dynamics[i].substitute(&|u| Expr::Var(k * n + u)),
        }
    })
}

fn ge(e: Expr) -> (Expr, Sense, f64) {
    (e, Sense::Ge, 0.0)
}

/// Conditions of a certificate as claims. `eps` is the falsifier slack:
/// strict inequalities are shifted by `3·eps`, which leaves a `2·eps` gap
/// over the slack, and negated implications use `≤ −eps`.
pub fn condition_claims(
    cert: &Certificate,
    p: &Problem,
    mode: CheckMode,
    eps: f64,
) -> Result<Vec<(Condition, Claim)>, CertError> {
    if cert.kind.spec() != p.spec {
        return Err(CertError::WrongKind {
            kind: cert.kind.name(),
            spec: p.spec,
        });
    }
    let sys = p
        .continuous()
        .ok_or_else(|| CertError::Format("finite problems are checked exhaustively".into()))?;
    let n = p.dim();
    let f = &sys.dynamics;
    let x_all = p.whole_block();
    let dom = |blocks: Vec<BlockDomain>| Domain::new(n, blocks);
    let init = p.block(p.init);
    let mut out = Vec::new();
    let at = |t: &Expr, args: &[Arg]| image_of(t, n, args, f);
    use Arg::{Block as B, Image as I};

    match cert.kind {
        CertKind::Barrier => {
            let b = cert.expr()?;
            let unsafe_block = p.block(p.unsafe_region.expect("unsafe region"));
            out.push((
                Condition::BarrierInit,
                Claim::ForAllNonneg {
                    expr: Expr::neg(b.clone()),
                    domain: dom(vec![init]),
                },
            ));
            out.push((
                Condition::BarrierUnsafe,
                Claim::ForAllNonneg {
                    expr: Expr::sub(b.clone(), Expr::constant(3.0 * eps)),
                    domain: dom(vec![unsafe_block]),
                },
            ));
            let bf = at(&b, &[I(0)]);
            let claim = match mode {
                CheckMode::Strengthened => Claim::ForAllNonneg {
                    expr: Expr::sub(b, bf),
                    domain: dom(vec![x_all]),
                },
                CheckMode::Implication => Claim::UnsatConj {
                    conjuncts: vec![(b, Sense::Le, 0.0), (bf, Sense::Ge, eps)],
                    domain: dom(vec![x_all]),
                },
            };
            out.push((Condition::BarrierInvariant, claim));
        }
        CertKind::SafetyCc | CertKind::PersistenceCc => {
            let t = cert.expr()?;
            out.push((
                Condition::Step,
                Claim::ForAllNonneg {
                    expr: at(&t, &[B(0), I(0)]),
                    domain: dom(vec![x_all.clone()]),
                },
            ));
            out.push((
                Condition::Propagate,
                propagate(
                    &t,
                    &t,
                    cert.tau1,
                    mode,
                    eps,
                    &at,
                    dom(vec![x_all.clone(), x_all]),
                ),
            ));
            if cert.kind == CertKind::SafetyCc {
                let unsafe_block = p.block(p.unsafe_region.expect("unsafe region"));
                let expr = Expr::sub(Expr::constant(-cert.xi), t);
                out.push((
                    Condition::Separate,
                    Claim::ForAllNonneg {
                        expr,
                        domain: dom(vec![init, unsafe_block]),
                    },
                ));
            } else {
                let vf = p.block(p.vf.expect("vf region"));
                out.push((
                    Condition::Decrease,
                    decrease(
                        cert,
                        [&t, &t, &t],
                        mode,
                        eps,
                        n,
                        dom(vec![init, vf.clone(), vf]),
                    ),
                ));
            }
        }
        CertKind::LtlCc => {
            let a = p
                .nba
                .as_ref()
                .ok_or_else(|| CertError::Format("ltl certificate needs an automaton".into()))?;
            let q = a.num_states();
            let pieces = cert.pieces(q)?;
            for (letter, rid) in &p.labeling {
                let xs = p.block(*rid);
                if xs.pieces.is_empty() {
                    continue;
                }
                for tr in a.transitions.iter().filter(|t| &t.letter == letter) {
                    let (i, i2) = (tr.from, tr.to);
                    out.push((
                        Condition::ProductStep {
                            from: i,
                            letter: letter.clone(),
                            to: i2,
                        },
                        Claim::ForAllNonneg {
                            expr: at(&pieces[i][i2], &[B(0), I(0)]),
                            domain: dom(vec![xs.clone()]),
                        },
                    ));
                    for (j, row) in pieces[i].iter().enumerate() {
                        let c = propagate(
                            row,
                            &pieces[i2][j],
                            cert.tau1,
                            mode,
                            eps,
                            &at,
                            dom(vec![xs.clone(), x_all.clone()]),
                        );
                        out.push((
                            Condition::ProductPropagate {
                                from: i,
                                letter: letter.clone(),
                                to: i2,
                                j,
                            },
                            c,
                        ));
                    }
                }
            }
            for &s in &a.initial {
                for &l in &a.accepting {
                    for &l2 in &a.accepting {
                        let c = decrease(
                            cert,
                            [&pieces[s][l], &pieces[s][l2], &pieces[l][l2]],
                            mode,
                            eps,
                            n,
                            dom(vec![init.clone(), x_all.clone(), x_all.clone()]),
                        );
                        out.push((Condition::ProductDecrease { s, l, l2 }, c));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `T_here(x, y) ≥ τ1·T_next(f(x), y)`, or the implication form.
fn propagate(
    here: &Expr,
    next: &Expr,
    tau1: f64,
    mode: CheckMode,
    eps: f64,
    at: &dyn Fn(&Expr, &[Arg]) -> Expr,
    domain: Domain,
) -> Claim {
    let t_next = at(next, &[Arg::Image(0), Arg::Block(1)]);
    match mode {
        CheckMode::Strengthened => Claim::ForAllNonneg {
            expr: Expr::sub(here.clone(), Expr::mul(Expr::constant(tau1), t_next)),
            domain,
        },
        CheckMode::Implication => Claim::UnsatConj {
            conjuncts: vec![ge(t_next), (here.clone(), Sense::Le, -eps)],
            domain,
        },
    }
}

/// Decrease over `(x0, y, z)`: `t[0] = T(x0, y)`, `t[1] = T(x0, z)` and
/// `t[2] = T(y, z)` (each still over blocks 0 and 1).
fn decrease(
    cert: &Certificate,
    t: [&Expr; 3],
    mode: CheckMode,
    eps: f64,
    n: usize,
    domain: Domain,
) -> Claim {
    let t_xy = t[0].clone();
    let t_xz = t[1].remap_blocks(n, &[0, 2]);
    let t_yz = t[2].remap_blocks(n, &[1, 2]);
    let gap = Expr::sub(Expr::sub(t_xy.clone(), Expr::constant(cert.xi)), t_xz);
    match mode {
        CheckMode::Strengthened => {
            let rhs = Expr::add(
                Expr::mul(Expr::constant(cert.tau2), t_xy),
                Expr::mul(Expr::constant(cert.tau3), t_yz),
            );
            Claim::ForAllNonneg {
                expr: Expr::sub(gap, rhs),
                domain,
            }
        }
        CheckMode::Implication => Claim::UnsatConj {
            conjuncts: vec![ge(t_xy), ge(t_yz), (gap, Sense::Le, -eps)],
            domain,
        },
    }
}
