//! Nondeterministic Büchi automata over letters that are sets of atomic
//! propositions.

mod hoa;
mod paths;
mod product;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hoa::{parse_hoa, to_hoa};
pub use paths::{
    decompose_triplets, enumerate_simple_paths, triplet_letter_pairs, unroll_once, Triplet,
    MAX_PATHS,
};
pub use product::{finite_product_edges, product_successors};

/// A letter: the sorted set of atomic propositions that hold.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter(pub Vec<String>);

impl Letter {
    pub fn new<S: AsRef<str>>(aps: &[S]) -> Self {
        let mut v: Vec<String> = aps.iter().map(|s| s.as_ref().to_string()).collect();
        v.sort();
        v.dedup();
        Letter(v)
    }

    pub fn empty() -> Self {
        Letter(Vec::new())
    }

    pub fn holds(&self, ap: &str) -> bool {
        self.0.iter().any(|a| a == ap)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutomataError {
    #[error("unsupported HOA feature: {0}")]
    UnsupportedFeature(String),
    #[error("HOA syntax error on line {line}: {message}")]
    SyntaxError { line: usize, message: String },
    #[error("more than {0} simple paths")]
    PathExplosion(usize),
    #[error("path has {0} states; triplets need at least 3")]
    PathTooShort(usize),
    #[error("no letter labels the state")]
    NoLetterForState,
    #[error("invalid automaton: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: usize,
    pub letter: Letter,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nba {
    pub aps: Vec<String>,
    pub alphabet: Vec<Letter>,
    pub state_names: Vec<String>,
    pub initial: BTreeSet<usize>,
    pub accepting: BTreeSet<usize>,
    /// Sorted and deduplicated.
    pub transitions: Vec<Transition>,
}

impl Nba {
    pub fn new(
        aps: Vec<String>,
        alphabet: Vec<Letter>,
        states: usize,
        initial: impl IntoIterator<Item = usize>,
        accepting: impl IntoIterator<Item = usize>,
        transitions: Vec<Transition>,
    ) -> Result<Self, AutomataError> {
        let names = (0..states).map(|i| format!("q{i}")).collect();
        Nba::with_names(aps, alphabet, names, initial, accepting, transitions)
    }

    pub fn with_names(
        aps: Vec<String>,
        mut alphabet: Vec<Letter>,
        state_names: Vec<String>,
        initial: impl IntoIterator<Item = usize>,
        accepting: impl IntoIterator<Item = usize>,
        mut transitions: Vec<Transition>,
    ) -> Result<Self, AutomataError> {
        let n = state_names.len();
        alphabet.sort();
        alphabet.dedup();
        transitions.sort();
        transitions.dedup();
        let initial: BTreeSet<usize> = initial.into_iter().collect();
        let accepting: BTreeSet<usize> = accepting.into_iter().collect();
        if let Some(s) = initial.iter().chain(&accepting).find(|&&s| s >= n) {
            return Err(AutomataError::Invalid(format!("state {s} out of range")));
        }
        for t in &transitions {
            if t.from >= n || t.to >= n {
                return Err(AutomataError::Invalid(format!(
                    "transition {} -> {} out of range",
                    t.from, t.to
                )));
            }
            if alphabet.binary_search(&t.letter).is_err() {
                return Err(AutomataError::Invalid(format!(
                    "letter {} not in alphabet",
                    t.letter
                )));
            }
        }
        Ok(Nba {
            aps,
            alphabet,
            state_names,
            initial,
            accepting,
            transitions,
        })
    }

    /// All `2^|AP|` letters, in sorted order.
    pub fn full_alphabet(aps: &[String]) -> Vec<Letter> {
        let k = aps.len();
        let mut out: Vec<Letter> = (0..1usize << k)
            .map(|mask| {
                Letter::new(
                    &(0..k)
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| aps[i].as_str())
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        out.sort();
        out
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting.contains(&q)
    }

    pub fn step(&self, q: usize, letter: &Letter) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .transitions
            .iter()
            .filter(|t| t.from == q && &t.letter == letter)
            .map(|t| t.to)
            .collect();
        out.dedup();
        out
    }

    /// Letters on edges `from → to`.
    pub fn letters_between(&self, from: usize, to: usize) -> Vec<Letter> {
        self.transitions
            .iter()
            .filter(|t| t.from == from && t.to == to)
            .map(|t| t.letter.clone())
            .collect()
    }

    /// Distinct successor states, ascending.
    pub fn successors(&self, q: usize) -> Vec<usize> {
        let s: BTreeSet<usize> = self
            .transitions
            .iter()
            .filter(|t| t.from == q)
            .map(|t| t.to)
            .collect();
        s.into_iter().collect()
    }

    /// `reach[i][j]`: `j` reachable from `i` in one or more steps.
    pub fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.num_states();
        let mut out = vec![vec![false; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            let mut q: VecDeque<usize> = self.successors(i).into();
            while let Some(a) = q.pop_front() {
                if !row[a] {
                    row[a] = true;
                    q.extend(self.successors(a));
                }
            }
        }
        out
    }

    pub fn letter_index(&self, l: &Letter) -> Option<usize> {
        self.alphabet.binary_search(l).ok()
    }

    /// Transitions grouped by `(from, to)`.
    pub fn edge_letters(&self) -> BTreeMap<(usize, usize), Vec<Letter>> {
        let mut m: BTreeMap<(usize, usize), Vec<Letter>> = BTreeMap::new();
        for t in &self.transitions {
            m.entry((t.from, t.to)).or_default().push(t.letter.clone());
        }
        m
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    fn l(aps: &[&str]) -> Letter {
        Letter::new(aps)
    }

    fn t(from: usize, letter: &[&str], to: usize) -> Transition {
        Transition {
            from,
            letter: l(letter),
            to,
        }
    }

    /// Fig. 2: q0 -a1-> q1 (a0 loop) -a0-> q2 (a1 loop) -a0-> q3 (loops).
    pub fn fig2() -> Nba {
        let aps = vec!["a0".to_string(), "a1".to_string()];
        Nba::new(
            aps,
            vec![l(&["a0"]), l(&["a1"])],
            4,
            [0],
            [3],
            vec![
                t(0, &["a1"], 1),
                t(1, &["a0"], 1),
                t(1, &["a0"], 2),
                t(2, &["a1"], 2),
                t(2, &["a0"], 3),
                t(3, &["a0"], 3),
                t(3, &["a1"], 3),
            ],
        )
        .unwrap()
    }

    /// Fig. 5a over single-proposition letters a, b, c, d.
    pub fn fig5a() -> Nba {
        let aps: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        Nba::new(
            aps,
            vec![l(&["a"]), l(&["b"]), l(&["c"]), l(&["d"])],
            4,
            [0],
            [2],
            vec![
                t(0, &["a"], 1),
                t(1, &["b"], 2),
                t(2, &["c"], 3),
                t(3, &["b"], 2),
                t(1, &["b"], 1),
                t(1, &["d"], 1),
                t(3, &["a"], 3),
            ],
        )
        .unwrap()
    }

    /// Fig. 7: eventually `a`.
    pub fn fig7() -> Nba {
        let aps = vec!["a".to_string()];
        let alphabet = Nba::full_alphabet(&aps);
        Nba::new(
            aps,
            alphabet,
            2,
            [0],
            [1],
            vec![t(0, &[], 0), t(0, &["a"], 1), t(1, &[], 1), t(1, &["a"], 1)],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn step_and_letters() {
        let a = fig7();
        assert_eq!(a.step(0, &Letter::empty()), vec![0]);
        assert_eq!(a.step(0, &Letter::new(&["a"])), vec![1]);
        assert_eq!(a.letters_between(1, 1).len(), 2);
        assert_eq!(a.alphabet, vec![Letter::empty(), Letter::new(&["a"])]);
    }

    #[test]
    fn reachability_matrix() {
        let r = fig5a().reachability();
        assert!(r[2][2] && r[2][3] && !r[2][1] && r[0][3]);
    }

    #[test]
    fn rejects_bad_transitions() {
        let aps = vec!["a".to_string()];
        let e = Nba::new(
            aps.clone(),
            vec![Letter::empty()],
            1,
            [0],
            [0],
            vec![Transition {
                from: 0,
                letter: Letter::new(&["a"]),
                to: 0,
            }],
        );
        assert!(matches!(e, Err(AutomataError::Invalid(_))));
    }
}
