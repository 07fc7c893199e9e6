//! Simple paths, state triplets and one-step unrolling.

use std::collections::BTreeSet;

use super::{AutomataError, Letter, Nba, Transition};

pub const MAX_PATHS: usize = 1_000_000;

/// Three consecutive states of a path with every letter pair that drives it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    pub states: (usize, usize, usize),
    pub pairs: Vec<(Letter, Letter)>,
}

impl Triplet {
    pub fn middle(&self) -> usize {
        self.states.1
    }

    /// Letters of the first edge.
    pub fn first_letters(&self) -> Vec<Letter> {
        let s: BTreeSet<Letter> = self.pairs.iter().map(|p| p.0.clone()).collect();
        s.into_iter().collect()
    }

    /// Letters of the second edge.
    pub fn second_letters(&self) -> Vec<Letter> {
        let s: BTreeSet<Letter> = self.pairs.iter().map(|p| p.1.clone()).collect();
        s.into_iter().collect()
    }
}

/// All simple paths from an initial to an accepting state, by DFS in
/// lexicographic state order. Paths continue past accepting states.
pub fn enumerate_simple_paths(a: &Nba) -> Result<Vec<Vec<usize>>, AutomataError> {
    let succ: Vec<Vec<usize>> = (0..a.num_states()).map(|q| a.successors(q)).collect();
    let mut out = Vec::new();
    let mut on_path = vec![false; a.num_states()];
    let mut path = Vec::new();
    for &s in &a.initial {
        dfs(a, &succ, s, &mut on_path, &mut path, &mut out)?;
    }
    Ok(out)
}

fn dfs(
    a: &Nba,
    succ: &[Vec<usize>],
    q: usize,
    on_path: &mut [bool],
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) -> Result<(), AutomataError> {
    on_path[q] = true;
    path.push(q);
    if a.is_accepting(q) {
        if out.len() >= MAX_PATHS {
            return Err(AutomataError::PathExplosion(MAX_PATHS));
        }
        out.push(path.clone());
    }
    for &r in &succ[q] {
        if !on_path[r] {
            dfs(a, succ, r, on_path, path, out)?;
        }
    }
    path.pop();
    on_path[q] = false;
    Ok(())
}

pub fn decompose_triplets(a: &Nba, path: &[usize]) -> Result<Vec<Triplet>, AutomataError> {
    if path.len() < 3 {
        return Err(AutomataError::PathTooShort(path.len()));
    }
    Ok(path
        .windows(3)
        .map(|w| {
            let first = a.letters_between(w[0], w[1]);
            let second = a.letters_between(w[1], w[2]);
            let mut pairs = Vec::new();
            for x in &first {
                for y in &second {
                    pairs.push((x.clone(), y.clone()));
                }
            }
            Triplet {
                states: (w[0], w[1], w[2]),
                pairs,
            }
        })
        .collect())
}

/// Every letter pair appearing on a triplet of some simple accepting path.
pub fn triplet_letter_pairs(a: &Nba) -> Result<BTreeSet<(Letter, Letter)>, AutomataError> {
    let mut out = BTreeSet::new();
    for p in enumerate_simple_paths(a)? {
        if p.len() >= 3 {
            for t in decompose_triplets(a, &p)? {
                out.extend(t.pairs);
            }
        }
    }
    Ok(out)
}

/// One unrolling of the cycles through accepting states.
///
/// Every state reachable (in one or more steps) from an accepting state
/// gets a primed copy; transitions among those states are copied onto the
/// primes, edges leaving accepting states are redirected to primed targets,
/// and the accepting set becomes the primed accepting states.
pub fn unroll_once(a: &Nba) -> Nba {
    let n = a.num_states();
    let reach = a.reachability();
    let from_acc: Vec<bool> = (0..n)
        .map(|j| a.accepting.iter().any(|&l| reach[l][j]))
        .collect();
    let mut prime = vec![None; n];
    let mut names = a.state_names.clone();
    for j in 0..n {
        if from_acc[j] {
            prime[j] = Some(names.len());
            names.push(format!("{}'", a.state_names[j]));
        }
    }
    let mut transitions = Vec::new();
    for t in &a.transitions {
        if a.is_accepting(t.from) {
            let to = prime[t.to].expect("successor of an accepting state is reachable from it");
            transitions.push(Transition {
                from: t.from,
                letter: t.letter.clone(),
                to,
            });
        } else {
            transitions.push(t.clone());
        }
        if let (Some(pf), Some(pt)) = (prime[t.from], prime[t.to]) {
            transitions.push(Transition {
                from: pf,
                letter: t.letter.clone(),
                to: pt,
            });
        }
    }
    let accepting: Vec<usize> = a.accepting.iter().filter_map(|&l| prime[l]).collect();
    Nba::with_names(
        a.aps.clone(),
        a.alphabet.clone(),
        names,
        a.initial.iter().copied(),
        accepting,
        transitions,
    )
    .expect("unrolling preserves validity")
}
