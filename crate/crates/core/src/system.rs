//! System models and exact finite-state oracles.

use std::collections::VecDeque;

use thiserror::Error;

use crate::expr::{Expr, IntervalBox, RegionEnv};
use crate::lp::{self, LinearProgram, LpOutcome, Rel};

#[derive(Debug, Clone)]
pub struct ContinuousSystem {
    pub dim: usize,
    pub state_box: IntervalBox,
    /// `f_k` over `x1..xn`.
    pub dynamics: Vec<Expr>,
}

impl ContinuousSystem {
    pub fn step(&self, x: &[f64], env: &dyn RegionEnv) -> Vec<f64> {
        self.dynamics.iter().map(|f| f.eval(x, env)).collect()
    }
}

/// A finite transition system over states `0..states`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSystem {
    pub states: usize,
    pub initial: Vec<usize>,
    /// Sorted successor lists.
    pub succ: Vec<Vec<usize>>,
    /// Numeric position of each state, used when evaluating certificates.
    pub embedding: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("state {0} has no successor")]
    Deadlock(usize),
    #[error("no initial state")]
    NoInitial,
    #[error("state index {0} out of range")]
    BadState(usize),
    #[error("embedding has {got} entries, expected {expected}")]
    Embedding { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SafetyResult {
    Safe,
    /// Path from an initial state to an unsafe one.
    Unsafe(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PersistenceResult {
    Persistent,
    NotPersistent { stem: Vec<usize>, cycle: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierLp {
    /// Monomial coefficients `c_0..c_d` of `B(x) = Σ c_k x^k`.
    Feasible(Vec<f64>),
    Infeasible,
}

/// Boolean relation over states, row-major.
pub type Relation = Vec<Vec<bool>>;

pub fn relation_pairs(r: &Relation) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, row) in r.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if *v {
                out.push((a, b));
            }
        }
    }
    out
}

impl FiniteSystem {
    /// Builds a system from an edge list; embedding defaults to `k ↦ [k]`.
    pub fn new(
        states: usize,
        initial: Vec<usize>,
        edges: &[(usize, usize)],
        embedding: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, SystemError> {
        let mut succ = vec![Vec::new(); states];
        for &(a, b) in edges {
            if a >= states {
                return Err(SystemError::BadState(a));
            }
            if b >= states {
                return Err(SystemError::BadState(b));
            }
            succ[a].push(b);
        }
        for s in succ.iter_mut() {
            s.sort_unstable();
            s.dedup();
        }
        if let Some(s) = succ.iter().position(Vec::is_empty) {
            return Err(SystemError::Deadlock(s));
        }
        let mut initial = initial;
        initial.sort_unstable();
        initial.dedup();
        if initial.is_empty() {
            return Err(SystemError::NoInitial);
        }
        if let Some(&s) = initial.iter().find(|&&s| s >= states) {
            return Err(SystemError::BadState(s));
        }
        let embedding = embedding.unwrap_or_else(|| (0..states).map(|k| vec![k as f64]).collect());
        if embedding.len() != states {
            return Err(SystemError::Embedding {
                expected: states,
                got: embedding.len(),
            });
        }
        Ok(FiniteSystem {
            states,
            initial,
            succ,
            embedding,
        })
    }

    pub fn dim(&self) -> usize {
        self.embedding.first().map_or(1, Vec::len)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.iter().map(move |&b| (a, b)))
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.states];
        for (a, b) in self.edges() {
            pred[b].push(a);
        }
        pred
    }

    /// `(a, b)` iff `b` is reachable from `a` in one or more steps (Warshall).
    pub fn transitive_closure(&self) -> Relation {
        let m = self.states;
        let mut r = vec![vec![false; m]; m];
        for (a, b) in self.edges() {
            r[a][b] = true;
        }
        for k in 0..m {
            for i in 0..m {
                if r[i][k] {
                    let (rk, ri) = if i < k {
                        let (lo, hi) = r.split_at_mut(k);
                        (&hi[0], &mut lo[i])
                    } else if i > k {
                        let (lo, hi) = r.split_at_mut(i);
                        (&lo[k], &mut hi[0])
                    } else {
                        continue;
                    };
                    for j in 0..m {
                        ri[j] |= rk[j];
                    }
                }
            }
        }
        r
    }

    /// States reachable from `from` in zero or more steps.
    pub fn forward_closure(&self, from: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.states];
        let mut q: VecDeque<usize> = VecDeque::new();
        for &s in from {
            if !seen[s] {
                seen[s] = true;
                q.push_back(s);
            }
        }
        while let Some(a) = q.pop_front() {
            for &b in &self.succ[a] {
                if !seen[b] {
                    seen[b] = true;
                    q.push_back(b);
                }
            }
        }
        seen
    }

    /// States that reach `to` in zero or more steps.
    pub fn backward_closure(&self, to: &[usize]) -> Vec<bool> {
        let pred = self.predecessors();
        let mut seen = vec![false; self.states];
        let mut q: VecDeque<usize> = VecDeque::new();
        for &s in to {
            if !seen[s] {
                seen[s] = true;
                q.push_back(s);
            }
        }
        while let Some(b) = q.pop_front() {
            for &a in &pred[b] {
                if !seen[a] {
                    seen[a] = true;
                    q.push_back(a);
                }
            }
        }
        seen
    }

    /// Shortest path from any initial state to a state in `targets`.
    fn shortest_path(
        &self,
        sources: &[usize],
        target: &dyn Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        let mut parent: Vec<Option<usize>> = vec![None; self.states];
        let mut seen = vec![false; self.states];
        let mut q = VecDeque::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                q.push_back(s);
            }
        }
        while let Some(a) = q.pop_front() {
            if target(a) {
                let mut path = vec![a];
                let mut cur = a;
                while let Some(p) = parent[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for &b in &self.succ[a] {
                if !seen[b] {
                    seen[b] = true;
                    parent[b] = Some(a);
                    q.push_back(b);
                }
            }
        }
        None
    }

    pub fn exact_safety(&self, unsafe_states: &[usize]) -> SafetyResult {
        let mut bad = vec![false; self.states];
        unsafe_states.iter().for_each(|&s| bad[s] = true);
        match self.shortest_path(&self.initial, &|s| bad[s]) {
            Some(p) => SafetyResult::Unsafe(p),
            None => SafetyResult::Safe,
        }
    }

    /// Not persistent iff a reachable cycle passes through a `vf` state.
    pub fn exact_persistence(&self, vf: &[usize]) -> PersistenceResult {
        let reach = self.forward_closure(&self.initial);
        let mut vf_sorted = vf.to_vec();
        vf_sorted.sort_unstable();
        vf_sorted.dedup();
        for &v in &vf_sorted {
            if !reach[v] {
                continue;
            }
            // shortest cycle back to v
            let Some(back) = self.shortest_path(&self.succ[v], &|s| s == v) else {
                continue;
            };
            let mut cycle = vec![v];
            cycle.extend(back.iter().take(back.len() - 1));
            let stem_path = self
                .shortest_path(&self.initial, &|s| s == v)
                .expect("reachable");
            let stem = stem_path[..stem_path.len() - 1].to_vec();
            return PersistenceResult::NotPersistent { stem, cycle };
        }
        PersistenceResult::Persistent
    }

    /// Decides whether a degree-`d` polynomial barrier over the 1-D embedding
    /// exists, encoding conditions (3)–(5) exactly on the finite state set.
    ///
    /// States reachable from the initial set must satisfy `B ≤ 0` and states
    /// that reach the unsafe set must satisfy `B > 0`. The remaining edges are
    /// handled by branching on which endpoint fixes the implication.
    pub fn exists_polynomial_barrier(
        &self,
        unsafe_states: &[usize],
        degree: usize,
        eps: f64,
    ) -> BarrierLp {
        let xs: Vec<f64> = self.embedding.iter().map(|e| e[0]).collect();
        let scale = xs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let neg = self.forward_closure(&self.initial);
        let pos = self.backward_closure(unsafe_states);
        let mut stack = vec![(neg, pos)];
        let mut visited = 0usize;
        while let Some((neg, pos)) = stack.pop() {
            visited += 1;
            if visited > 100_000 || (0..self.states).any(|s| neg[s] && pos[s]) {
                continue;
            }
            let Some(c) = separating_polynomial(&xs, scale, &neg, &pos, degree) else {
                continue;
            };
            let b = |s: usize| eval_poly(&c, xs[s]);
            let bad = self.edges().find(|&(z, w)| b(z) <= 0.0 && b(w) > 0.0);
            match bad {
                None => {
                    let margin = (0..self.states)
                        .filter(|&s| pos[s])
                        .map(b)
                        .fold(f64::INFINITY, f64::min);
                    let k = if margin.is_finite() && margin < eps {
                        eps / margin
                    } else {
                        1.0
                    };
                    return BarrierLp::Feasible(c.iter().map(|v| v * k).collect());
                }
                Some((z, w)) => {
                    // either w and its descendants stay nonpositive ...
                    let mut n2 = neg.clone();
                    for (s, f) in self.forward_closure(&[w]).into_iter().enumerate() {
                        n2[s] |= f;
                    }
                    // ... or z and its ancestors are positive
                    let mut p2 = pos.clone();
                    for (s, f) in self.backward_closure(&[z]).into_iter().enumerate() {
                        p2[s] |= f;
                    }
                    stack.push((neg, p2));
                    stack.push((n2, pos));
                }
            }
        }
        BarrierLp::Infeasible
    }
}

pub fn eval_poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Scale-free LP: maximize `t` with `B ≤ -t` on `neg`, `B ≥ t` on `pos`,
/// coefficients of the scaled basis `(x/scale)^k` in `[-1, 1]`.
fn separating_polynomial(
    xs: &[f64],
    scale: f64,
    neg: &[bool],
    pos: &[bool],
    degree: usize,
) -> Option<Vec<f64>> {
    let nc = degree + 1;
    let mut names: Vec<String> = (0..nc).map(|k| format!("c{k}")).collect();
    names.push("t".into());
    let mut bounds = vec![(-1.0, 1.0); nc];
    bounds.push((-1.0, 1.0));
    let mut prog = LinearProgram::new(names, bounds);
    let row = |x: f64, t: f64| -> Vec<f64> {
        let u = x / scale;
        let mut r: Vec<f64> = (0..nc).map(|k| u.powi(k as i32)).collect();
        r.push(t);
        r
    };
    for (s, &x) in xs.iter().enumerate() {
        if neg[s] {
            // a margin on this side too keeps rounding from flipping signs
            prog.add(row(x, 1.0), Rel::Le, 0.0);
        }
        if pos[s] {
            prog.add(row(x, -1.0), Rel::Ge, 0.0);
        }
    }
    let mut obj = vec![0.0; nc];
    obj.push(1.0);
    prog.maximize(obj);
    match lp::solve(&prog) {
        Ok(LpOutcome::Feasible { x, objective }) if objective > 1e-9 => {
            Some((0..nc).map(|k| x[k] / scale.powi(k as i32)).collect())
        }
        _ => None,
    }
}
