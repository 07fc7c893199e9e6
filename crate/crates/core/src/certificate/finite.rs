//! Exhaustive condition checks on finite systems.
//!
//! Comparisons use an absolute tolerance: a value counts as nonnegative
//! when it is at least `-FINITE_TOL`, and strict positivity needs more than
//! `FINITE_TOL`.

use serde::Serialize;

use super::{CertError, CertKind, Certificate, CheckMode, Condition, PairFunction};
use crate::automata::{Letter, Nba};
use crate::problem::Problem;
use crate::system::FiniteSystem;

pub const FINITE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteViolation {
    pub condition: Condition,
    /// System states of the witness tuple, in argument order.
    pub states: Vec<usize>,
    /// Automaton states involved (LTL only).
    pub automaton: Vec<usize>,
    pub value: f64,
}

/// The sets a finite check ranges over.
#[derive(Debug, Clone, Copy)]
pub struct FiniteInstance<'a> {
    pub sys: &'a FiniteSystem,
    pub unsafe_states: &'a [usize],
    pub vf_states: &'a [usize],
    /// Letter of each state; LTL only.
    pub letters: &'a [Letter],
    pub nba: Option<&'a Nba>,
}

impl<'a> FiniteInstance<'a> {
    pub fn of(p: &'a Problem) -> Option<Self> {
        let sys = p.finite_system()?;
        let sets = p.finite.as_ref()?;
        Some(FiniteInstance {
            sys,
            unsafe_states: &sets.unsafe_states,
            vf_states: &sets.vf_states,
            letters: &sets.state_letters,
            nba: p.nba.as_ref(),
        })
    }
}

fn nonneg(v: f64) -> bool {
    v >= -FINITE_TOL
}

/// Running minimum of one condition's checked quantity.
struct Margin {
    condition: Condition,
    min: f64,
}

impl Margin {
    fn new(condition: Condition) -> Self {
        Margin {
            condition,
            min: f64::INFINITY,
        }
    }

    /// Records `value`; fails when it is below `-FINITE_TOL`.
    fn see(
        &mut self,
        value: f64,
        states: &[usize],
        automaton: &[usize],
    ) -> Result<(), FiniteViolation> {
        self.min = self.min.min(value);
        if nonneg(value) {
            Ok(())
        } else {
            Err(FiniteViolation {
                condition: self.condition.clone(),
                states: states.to_vec(),
                automaton: automaton.to_vec(),
                value,
            })
        }
    }

    fn done(self) -> (Condition, f64) {
        (self.condition, self.min)
    }
}

pub fn finite_barrier(
    b: &dyn Fn(usize) -> f64,
    inst: &FiniteInstance,
    mode: CheckMode,
) -> Result<Vec<(Condition, f64)>, FiniteViolation> {
    let sys = inst.sys;
    let mut m = Margin::new(Condition::BarrierInit);
    for &s in &sys.initial {
        m.see(-b(s), &[s], &[])?;
    }
    let mut out = vec![m.done()];
    let mut m = Margin::new(Condition::BarrierUnsafe);
    for &s in inst.unsafe_states {
        // strict: shift so that a value of FINITE_TOL or less fails
        m.see(b(s) - 2.0 * FINITE_TOL, &[s], &[])?;
    }
    out.push(m.done());
    let mut m = Margin::new(Condition::BarrierInvariant);
    for (s, t) in sys.edges() {
        let v = match mode {
            CheckMode::Strengthened => b(s) - b(t),
            CheckMode::Implication if b(s) <= FINITE_TOL => -b(t),
            CheckMode::Implication => continue,
        };
        m.see(v, &[s, t], &[])?;
    }
    out.push(m.done());
    Ok(out)
}

fn step_and_propagate(
    t: &dyn Fn(usize, usize) -> f64,
    sys: &FiniteSystem,
    tau1: f64,
    mode: CheckMode,
    out: &mut Vec<(Condition, f64)>,
) -> Result<(), FiniteViolation> {
    let mut m = Margin::new(Condition::Step);
    for (s, s2) in sys.edges() {
        m.see(t(s, s2), &[s, s2], &[])?;
    }
    out.push(m.done());
    let mut m = Margin::new(Condition::Propagate);
    for (s, s2) in sys.edges() {
        for y in 0..sys.states {
            let v = match mode {
                CheckMode::Strengthened => t(s, y) - tau1 * t(s2, y),
                CheckMode::Implication if nonneg(t(s2, y)) => t(s, y),
                CheckMode::Implication => continue,
            };
            m.see(v, &[s, s2, y], &[])?;
        }
    }
    out.push(m.done());
    Ok(())
}

pub fn finite_safety_cc(
    t: &dyn Fn(usize, usize) -> f64,
    inst: &FiniteInstance,
    xi: f64,
    tau1: f64,
    mode: CheckMode,
) -> Result<Vec<(Condition, f64)>, FiniteViolation> {
    let mut out = Vec::new();
    step_and_propagate(t, inst.sys, tau1, mode, &mut out)?;
    let mut m = Margin::new(Condition::Separate);
    for &x0 in &inst.sys.initial {
        for &u in inst.unsafe_states {
            m.see(-xi - t(x0, u), &[x0, u], &[])?;
        }
    }
    out.push(m.done());
    Ok(out)
}

/// One decrease instance: `T(x0,y)`, `T(x0,z)`, `T(y,z)`.
fn decrease_value(
    xy: f64,
    xz: f64,
    yz: f64,
    xi: f64,
    tau: [f64; 3],
    mode: CheckMode,
) -> Option<f64> {
    match mode {
        CheckMode::Strengthened => Some(xy - xi - xz - tau[1] * xy - tau[2] * yz),
        CheckMode::Implication if nonneg(xy) && nonneg(yz) => Some(xy - xi - xz),
        CheckMode::Implication => None,
    }
}

pub fn finite_persistence_cc(
    t: &dyn Fn(usize, usize) -> f64,
    inst: &FiniteInstance,
    xi: f64,
    tau: [f64; 3],
    mode: CheckMode,
) -> Result<Vec<(Condition, f64)>, FiniteViolation> {
    let mut out = Vec::new();
    step_and_propagate(t, inst.sys, tau[0], mode, &mut out)?;
    let mut m = Margin::new(Condition::Decrease);
    for &x0 in &inst.sys.initial {
        for &y in inst.vf_states {
            for &z in inst.vf_states {
                if let Some(v) = decrease_value(t(x0, y), t(x0, z), t(y, z), xi, tau, mode) {
                    m.see(v, &[x0, y, z], &[])?;
                }
            }
        }
    }
    out.push(m.done());
    Ok(out)
}

/// LTL conditions with `t(x, i, y, j)` over system and automaton states.
pub fn finite_ltl_cc(
    t: &dyn Fn(usize, usize, usize, usize) -> f64,
    inst: &FiniteInstance,
    xi: f64,
    tau: [f64; 3],
    mode: CheckMode,
) -> Result<Vec<(Condition, f64)>, FiniteViolation> {
    let sys = inst.sys;
    let a = inst.nba.expect("ltl check needs an automaton");
    let q = a.num_states();
    let mut out = Vec::new();
    let mut step = Margin::new(Condition::Step);
    let mut prop = Margin::new(Condition::Propagate);
    for (s, s2) in sys.edges() {
        let letter = &inst.letters[s];
        for i in 0..q {
            for i2 in a.step(i, letter) {
                step.condition = Condition::ProductStep {
                    from: i,
                    letter: letter.clone(),
                    to: i2,
                };
                step.see(t(s, i, s2, i2), &[s, s2], &[i, i2])?;
                for y in 0..sys.states {
                    for j in 0..q {
                        let v = match mode {
                            CheckMode::Strengthened => t(s, i, y, j) - tau[0] * t(s2, i2, y, j),
                            CheckMode::Implication if nonneg(t(s2, i2, y, j)) => t(s, i, y, j),
                            CheckMode::Implication => continue,
                        };
                        prop.condition = Condition::ProductPropagate {
                            from: i,
                            letter: letter.clone(),
                            to: i2,
                            j,
                        };
                        prop.see(v, &[s, s2, y], &[i, i2, j])?;
                    }
                }
            }
        }
    }
    // margins are aggregated over all product transitions
    out.push((Condition::Step, step.min));
    out.push((Condition::Propagate, prop.min));
    let mut m = Margin::new(Condition::Decrease);
    for &x0 in &sys.initial {
        for &s in &a.initial {
            for &l in &a.accepting {
                for &l2 in &a.accepting {
                    m.condition = Condition::ProductDecrease { s, l, l2 };
                    for y in 0..sys.states {
                        for y2 in 0..sys.states {
                            let (xy, xz, yz) = (t(x0, s, y, l), t(x0, s, y2, l2), t(y, l, y2, l2));
                            if let Some(v) = decrease_value(xy, xz, yz, xi, tau, mode) {
                                m.see(v, &[x0, y, y2], &[s, l, l2])?;
                            }
                        }
                    }
                }
            }
        }
    }
    out.push((Condition::Decrease, m.min));
    Ok(out)
}

/// Exhaustive check of any certificate function on a finite problem.
pub fn finite_check(
    f: &dyn PairFunction,
    kind: CertKind,
    p: &Problem,
    xi: f64,
    tau: [f64; 3],
    mode: CheckMode,
) -> Result<Result<Vec<(Condition, f64)>, FiniteViolation>, CertError> {
    let inst =
        FiniteInstance::of(p).ok_or_else(|| CertError::Format("not a finite problem".into()))?;
    if kind.spec() != p.spec {
        return Err(CertError::WrongKind {
            kind: kind.name(),
            spec: p.spec,
        });
    }
    let emb = &inst.sys.embedding;
    let empty: &[f64] = &[];
    Ok(match kind {
        CertKind::Barrier => finite_barrier(&|s| f.value(&emb[s], 0, empty, 0), &inst, mode),
        CertKind::SafetyCc => finite_safety_cc(
            &|a, b| f.value(&emb[a], 0, &emb[b], 0),
            &inst,
            xi,
            tau[0],
            mode,
        ),
        CertKind::PersistenceCc => finite_persistence_cc(
            &|a, b| f.value(&emb[a], 0, &emb[b], 0),
            &inst,
            xi,
            tau,
            mode,
        ),
        CertKind::LtlCc => {
            let q = inst
                .nba
                .ok_or_else(|| CertError::Format("ltl problem without automaton".into()))?
                .num_states();
            let m = inst.sys.states;
            // tabulate once: the propagation loop revisits every entry many times
            let mut table = vec![0.0; m * q * m * q];
            for a in 0..m {
                for i in 0..q {
                    for b in 0..m {
                        for j in 0..q {
                            table[((a * q + i) * m + b) * q + j] = f.value(&emb[a], i, &emb[b], j);
                        }
                    }
                }
            }
            finite_ltl_cc(
                &|a, i, b, j| table[((a * q + i) * m + b) * q + j],
                &inst,
                xi,
                tau,
                mode,
            )
        }
    })
}

impl Certificate {
    /// Exhaustive check on a finite problem.
    pub fn check_finite(
        &self,
        p: &Problem,
        mode: CheckMode,
    ) -> Result<Result<Vec<(Condition, f64)>, FiniteViolation>, CertError> {
        if self.kind == CertKind::LtlCc {
            let q = p.nba.as_ref().map_or(0, Nba::num_states);
            self.pieces(q)?;
        }
        finite_check(
            &self.bind(&p.regions),
            self.kind,
            p,
            self.xi,
            self.tau(),
            mode,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::load_problem;

    fn fig1() -> Problem {
        load_problem(
            r#"{"system": "finite", "spec": "safety", "states": 6, "initial": [1,3,5],
                "transitions": [[0,0],[1,0],[2,0],[3,0],[4,0],[5,0]], "unsafe_states": [2,4]}"#,
            None,
        )
        .unwrap()
    }

    #[test]
    fn figure_one_linear_cc() {
        let p = fig1();
        let c = Certificate::parse(r#"{"kind": "safety-cc", "expr": "-y1", "xi": 1}"#, &p).unwrap();
        let margins = c
            .check_finite(&p, CheckMode::Strengthened)
            .unwrap()
            .unwrap();
        let sep = margins
            .iter()
            .find(|m| m.0 == Condition::Separate)
            .unwrap()
            .1;
        assert_eq!(sep, 1.0);
        assert!(c.check_finite(&p, CheckMode::Implication).unwrap().is_ok());
    }

    #[test]
    fn figure_one_bad_cc() {
        let p = fig1();
        let c = Certificate::parse(r#"{"kind": "safety-cc", "expr": "y1", "xi": 1}"#, &p).unwrap();
        let v = c
            .check_finite(&p, CheckMode::Strengthened)
            .unwrap()
            .unwrap_err();
        assert_eq!(v.condition, Condition::Separate);
    }

    #[test]
    fn constant_barrier_fails_on_init() {
        let p = fig1();
        let c = Certificate::parse(r#"{"kind": "barrier", "expr": "1"}"#, &p).unwrap();
        let v = c
            .check_finite(&p, CheckMode::Implication)
            .unwrap()
            .unwrap_err();
        assert_eq!(v.condition, Condition::BarrierInit);
        assert_eq!(v.states, vec![1]);
    }

    #[test]
    fn persistence_examples() {
        let doc = |vf: &str| {
            format!(
                r#"{{"system": "finite", "spec": "persistence", "states": 2, "initial": [0],
                    "transitions": [[0,1],[1,1]], "vf_states": {vf}}}"#
            )
        };
        let p = load_problem(&doc("[0]"), None).unwrap();
        let c = Certificate::parse(
            r#"{"kind": "persistence-cc", "expr": "y1 - 0.5", "xi": 0.5, "tau2": 1}"#,
            &p,
        )
        .unwrap();
        assert!(c.check_finite(&p, CheckMode::Implication).unwrap().is_ok());
        assert!(c.check_finite(&p, CheckMode::Strengthened).unwrap().is_ok());
        let p = load_problem(&doc("[1]"), None).unwrap();
        let c = Certificate::parse(r#"{"kind": "persistence-cc", "expr": "1", "xi": 0.5}"#, &p)
            .unwrap();
        let v = c
            .check_finite(&p, CheckMode::Strengthened)
            .unwrap()
            .unwrap_err();
        assert_eq!(v.condition, Condition::Decrease);
    }
}
