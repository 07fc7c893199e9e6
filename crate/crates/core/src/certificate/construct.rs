//! Closure certificates assembled from barriers.
//!
//! `cc_from_barrier` turns one barrier into a safety certificate.
//! `cc_from_triplet_barriers` combines barriers that cut state triplets of
//! an automaton into an LTL certificate. The second uses an abstraction in
//! which each cut contributes one fact, "its barrier is nonpositive here".
//! Facts persist along trajectories. A fact is gained when the current letter
//! belongs to the cut's first edge, and it blocks every letter of the cut's
//! second edge.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::{CertError, PairFunction, FINITE_TOL};
use crate::automata::{Nba, Triplet};

type Scalar<'a> = Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>;

/// `T(x, y) = 0` if `B(x) > 0` or `B(y) ≤ 0`, else `−γ`. Valid with `ξ = γ`
/// and, in the strengthened form, `τ1 = 1`.
pub struct BarrierCc<'a> {
    barrier: Scalar<'a>,
    pub gamma: f64,
    /// `B(x) ≤ threshold` counts as nonpositive.
    pub threshold: f64,
}

pub fn cc_from_barrier<'a>(
    barrier: impl Fn(&[f64]) -> f64 + Send + Sync + 'a,
    gamma: f64,
) -> BarrierCc<'a> {
    BarrierCc {
        barrier: Box::new(barrier),
        gamma,
        threshold: FINITE_TOL,
    }
}

impl BarrierCc<'_> {
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

impl PairFunction for BarrierCc<'_> {
    fn value(&self, x: &[f64], _: usize, y: &[f64], _: usize) -> f64 {
        if (self.barrier)(x) > self.threshold || (self.barrier)(y) <= self.threshold {
            0.0
        } else {
            -self.gamma
        }
    }
}

/// Left and right state sets around the middles of the cut triplets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QlQr {
    pub ql: BTreeSet<usize>,
    pub qr: BTreeSet<usize>,
    pub middles: BTreeSet<usize>,
    /// Initial states lie in `ql` and accepting states in `qr`.
    pub consistent: bool,
}

/// `ql`: non-middle states with a path to some middle. `qr`: non-middle
/// states reachable from every middle.
pub fn compute_ql_qr(a: &Nba, cuts: &[Triplet]) -> QlQr {
    let reach = a.reachability();
    let middles: BTreeSet<usize> = cuts.iter().map(Triplet::middle).collect();
    let n = a.num_states();
    let ql: BTreeSet<usize> = (0..n)
        .filter(|q| !middles.contains(q) && middles.iter().any(|&m| reach[*q][m]))
        .collect();
    let qr: BTreeSet<usize> = (0..n)
        .filter(|q| {
            !middles.contains(q) && !middles.is_empty() && middles.iter().all(|&m| reach[m][*q])
        })
        .collect();
    let consistent = a.initial.is_subset(&ql) && a.accepting.is_subset(&qr);
    QlQr {
        ql,
        qr,
        middles,
        consistent,
    }
}

/// A cut triplet with its separating barrier.
pub struct CutBarrier<'a> {
    pub triplet: Triplet,
    pub barrier: Scalar<'a>,
}

impl<'a> CutBarrier<'a> {
    pub fn new(triplet: Triplet, barrier: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        CutBarrier {
            triplet,
            barrier: Box::new(barrier),
        }
    }
}

/// Largest number of abstract configurations (automaton state, fact set).
const MAX_CONFIGS: usize = 1 << 16;

/// LTL certificate built from cut barriers.
///
/// `T((x,i),(y,j)) = 0` when configuration `(i, F(x))` lies in the top set,
/// or when some `(j, G)` with `G ⊆ F(y)` is abstractly reachable from it in
/// one or more steps. Otherwise `T = −ξ`. The strengthened conditions hold
/// with `τ1 = τ2 = 1`.
pub struct TripletCc<'a> {
    cuts: Vec<CutBarrier<'a>>,
    states: usize,
    pub xi: f64,
    pub threshold: f64,
    top: Vec<bool>,
    /// `reach[c][j]`: fact sets reachable at automaton state `j` from `c`.
    reach: Vec<Vec<Vec<u32>>>,
    pub qlqr: QlQr,
    /// The top set is the backward closure of `qr` (otherwise of the
    /// accepting states, used when `qr` would contain an initial state).
    pub top_from_qr: bool,
}

impl TripletCc<'_> {
    fn masks(&self) -> usize {
        1 << self.cuts.len()
    }

    pub fn facts(&self, x: &[f64]) -> u32 {
        self.cuts
            .iter()
            .enumerate()
            .filter(|(_, c)| (c.barrier)(x) <= self.threshold)
            .fold(0, |m, (k, _)| m | 1 << k)
    }

    pub fn in_top(&self, i: usize, facts: u32) -> bool {
        self.top[i * self.masks() + facts as usize]
    }
}

impl PairFunction for TripletCc<'_> {
    fn value(&self, x: &[f64], i: usize, y: &[f64], j: usize) -> f64 {
        if i >= self.states || j >= self.states {
            return f64::NAN;
        }
        let c = i * self.masks() + self.facts(x) as usize;
        if self.top[c] {
            return 0.0;
        }
        let fy = self.facts(y);
        if self.reach[c][j].iter().any(|g| g & !fy == 0) {
            0.0
        } else {
            -self.xi
        }
    }
}

pub fn cc_from_triplet_barriers<'a>(
    a: &Nba,
    cuts: Vec<CutBarrier<'a>>,
    xi: f64,
) -> Result<TripletCc<'a>, CertError> {
    let k = cuts.len();
    let q = a.num_states();
    if k > 16 || q << k > MAX_CONFIGS {
        return Err(CertError::Format(format!(
            "{k} cuts over {q} states is too many to combine"
        )));
    }
    let m = 1usize << k;
    let gain = |letter| {
        cuts.iter()
            .enumerate()
            .filter(|(_, c)| c.triplet.first_letters().contains(letter))
            .fold(0u32, |s, (i, _)| s | 1 << i)
    };
    let block = |letter| {
        cuts.iter()
            .enumerate()
            .filter(|(_, c)| c.triplet.second_letters().contains(letter))
            .fold(0u32, |s, (i, _)| s | 1 << i)
    };
    let letters: Vec<(u32, u32)> = a.alphabet.iter().map(|l| (gain(l), block(l))).collect();

    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); q * m];
    for t in &a.transitions {
        let Some(li) = a.letter_index(&t.letter) else {
            continue;
        };
        let (g, b) = letters[li];
        for f in 0..m as u32 {
            if f & b == 0 {
                succ[t.from * m + f as usize].push(t.to * m + (f | g) as usize);
            }
        }
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }

    // Forward reachability in one or more steps, with parents for witnesses.
    let forward = |c: usize| {
        let mut parent = vec![usize::MAX; q * m];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &d in &succ[c] {
            if parent[d] == usize::MAX {
                parent[d] = c;
                queue.push_back(d);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &d in &succ[u] {
                if parent[d] == usize::MAX {
                    parent[d] = u;
                    queue.push_back(d);
                }
            }
        }
        parent
    };

    for &s in &a.initial {
        let start = s * m;
        let parent = forward(start);
        if let Some(hit) =
            (0..q * m).find(|&c| parent[c] != usize::MAX && a.accepting.contains(&(c / m)))
        {
            let mut run = vec![hit / m];
            let mut c = hit;
            loop {
                c = parent[c];
                run.push(c / m);
                if c == start {
                    break;
                }
            }
            run.reverse();
            return Err(CertError::UncutPath(run));
        }
        if a.accepting.contains(&s) {
            return Err(CertError::UncutPath(vec![s]));
        }
    }

    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); q * m];
    for (c, ds) in succ.iter().enumerate() {
        for &d in ds {
            pred[d].push(c);
        }
    }
    let backward = |targets: &BTreeSet<usize>| {
        let mut seen = vec![false; q * m];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for c in 0..q * m {
            if targets.contains(&(c / m)) {
                seen[c] = true;
                queue.push_back(c);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &p in &pred[u] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    };

    let triplets: Vec<Triplet> = cuts.iter().map(|c| c.triplet.clone()).collect();
    let qlqr = compute_ql_qr(a, &triplets);
    let from_qr = backward(&qlqr.qr);
    // The closure is downward closed in the fact set, so the empty set decides.
    let top_from_qr = qlqr.consistent && a.initial.iter().all(|&s| !from_qr[s * m]);
    let top = if top_from_qr {
        from_qr
    } else {
        backward(&a.accepting)
    };

    let reach = (0..q * m)
        .map(|c| {
            let parent = forward(c);
            let mut row = vec![Vec::new(); q];
            for (d, p) in parent.iter().enumerate() {
                if *p != usize::MAX {
                    row[d / m].push((d % m) as u32);
                }
            }
            row
        })
        .collect();

    Ok(TripletCc {
        cuts,
        states: q,
        xi,
        threshold: FINITE_TOL,
        top,
        reach,
        qlqr,
        top_from_qr,
    })
}
