//! Synchronous product of a system with an automaton: from `(x, q)` the
//! system moves to each `x' ∈ f(x)` while the automaton reads `ℒ(x)`.

use std::collections::{BTreeSet, VecDeque};

use super::{AutomataError, Letter, Nba};

/// Successors of `(x, q)` given the letter of `x` and the system successors
/// of `x`. A missing letter means the labeling has a gap at `x`.
pub fn product_successors<X: Clone>(
    a: &Nba,
    q: usize,
    letter: Option<&Letter>,
    next: &[X],
) -> Result<Vec<(X, usize)>, AutomataError> {
    let letter = letter.ok_or(AutomataError::NoLetterForState)?;
    let targets = a.step(q, letter);
    let mut out = Vec::with_capacity(next.len() * targets.len());
    for x in next {
        for &t in &targets {
            out.push((x.clone(), t));
        }
    }
    Ok(out)
}

/// Edges of the product restricted to states reachable from
/// `initial × Q0`, for a finite system with per-state letters.
pub fn finite_product_edges(
    a: &Nba,
    succ: &[Vec<usize>],
    initial: &[usize],
    letters: &[Letter],
) -> Result<BTreeSet<((usize, usize), (usize, usize))>, AutomataError> {
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for &x in initial {
        for &q in &a.initial {
            if seen.insert((x, q)) {
                queue.push_back((x, q));
            }
        }
    }
    let mut edges = BTreeSet::new();
    while let Some((x, q)) = queue.pop_front() {
        for (y, r) in product_successors(a, q, letters.get(x), &succ[x])? {
            edges.insert(((x, q), (y, r)));
            if seen.insert((y, r)) {
                queue.push_back((y, r));
            }
        }
    }
    Ok(edges)
}
