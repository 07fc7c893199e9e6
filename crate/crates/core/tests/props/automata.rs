use std::collections::{BTreeSet, VecDeque};

use clocert::automata::{
    finite_product_edges, parse_hoa, to_hoa, triplet_letter_pairs, unroll_once, Transition,
};
use clocert::{Letter, Nba};
use crate::common::*;
use rand::Rng as _;

fn random_nba(r: &mut clocert::rng::Rng) -> Nba {
    let q = r.gen_range(1..=6);
    let k = r.gen_range(1..=3);
    let aps: Vec<String> = (0..k).map(|i| format!("p{i}")).collect();
    let alphabet = Nba::full_alphabet(&aps);
    let mut transitions = Vec::new();
    for from in 0..q {
        for to in 0..q {
            if r.gen_bool(0.35) {
                for l in &alphabet {
                    if r.gen_bool(0.3) {
                        transitions.push(Transition { from, letter: l.clone(), to });
                    }
                }
            }
        }
    }
    let initial: Vec<usize> = (0..q).filter(|&i| i == 0 || r.gen_bool(0.1)).collect();
    let accepting: Vec<usize> = (0..q).filter(|_| r.gen_bool(0.35)).collect();
    Nba::new(aps, alphabet, q, initial, accepting, transitions).unwrap()
}

/// Consecutive edge letters `(σ1, σ2)` of `i -σ1-> j -σ2-> k` with `j`
/// reachable from an accepting state.
fn cycle_pairs(a: &Nba) -> BTreeSet<(Letter, Letter)> {
    let reach = a.reachability();
    let post: Vec<bool> = (0..a.num_states())
        .map(|j| a.accepting.iter().any(|&l| reach[l][j]))
        .collect();
    let mut out = BTreeSet::new();
    for t1 in &a.transitions {
        for t2 in a.transitions.iter().filter(|t2| t2.from == t1.to) {
            if post[t1.to] {
                out.insert((t1.letter.clone(), t2.letter.clone()));
            }
        }
    }
    out
}

/// Further unrollings can only expose letter pairs that wrap around a cycle
/// behind an accepting state.
pub fn unrolling_twice_adds_only_wrapped_cycle_pairs() {
    let mut r = rng(61);
    let (mut checked, mut grew) = (0, 0);
    while checked < 200 {
        let a = random_nba(&mut r);
        let once = unroll_once(&a);
        let twice = unroll_once(&once);
        let thrice = unroll_once(&twice);
        let (Ok(p1), Ok(p2), Ok(p3)) = (
            triplet_letter_pairs(&once),
            triplet_letter_pairs(&twice),
            triplet_letter_pairs(&thrice),
        ) else {
            continue;
        };
        checked += 1;
        let wrapped = cycle_pairs(&a);
        for pair in p2.union(&p3).filter(|p| !p1.contains(p)) {
            assert!(wrapped.contains(pair), "{pair:?} in\n{}", to_hoa(&a));
        }
        grew += !p2.is_subset(&p1) as usize;
    }
    eprintln!("{checked} automata checked, {grew} gained pairs on the second unrolling");
}

/// The unrolling lemma as literally stated: no letter pair after two
/// unrollings that one unrolling lacks. Returns the number of automata
/// checked and the ones that break it.
pub fn literal_unrolling_lemma(count: usize) -> (usize, Vec<String>) {
    let mut r = rng(61);
    let (mut checked, mut broken) = (0, Vec::new());
    while checked < count {
        let a = random_nba(&mut r);
        let once = unroll_once(&a);
        let (Ok(p1), Ok(p2)) = (triplet_letter_pairs(&once), triplet_letter_pairs(&unroll_once(&once))) else {
            continue;
        };
        checked += 1;
        if !p2.is_subset(&p1) {
            broken.push(to_hoa(&a));
        }
    }
    (checked, broken)
}

/// An accepting self-loop entered once: the pair of two loop letters only
/// shows up after the second unrolling.
pub fn accepting_self_loop_needs_two_unrollings() {
    let a = parse_hoa(
        "HOA: v1\nStates: 2\nStart: 0\nAP: 2 \"a\" \"b\"\nacc-name: Buchi\nAcceptance: 1 Inf(0)\n--BODY--\n\
         State: 0\n[0&!1] 1\nState: 1 {0}\n[!0&1] 1\n--END--\n",
    )
    .unwrap();
    let (a_, b_) = (Letter::new(&["a"]), Letter::new(&["b"]));
    let once = triplet_letter_pairs(&unroll_once(&a)).unwrap();
    let twice = triplet_letter_pairs(&unroll_once(&unroll_once(&a))).unwrap();
    assert_eq!(once, BTreeSet::from([(a_.clone(), b_.clone())]));
    assert_eq!(twice, BTreeSet::from([(a_, b_.clone()), (b_.clone(), b_)]));
}

/// Product edges by direct search over the transition list.
fn brute_product(
    a: &Nba,
    succ: &[Vec<usize>],
    initial: &[usize],
    letters: &[Letter],
) -> BTreeSet<((usize, usize), (usize, usize))> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for &x in initial {
        for &q in &a.initial {
            if seen.insert((x, q)) {
                queue.push_back((x, q));
            }
        }
    }
    let mut edges = BTreeSet::new();
    while let Some((x, q)) = queue.pop_front() {
        for t in a.transitions.iter().filter(|t| t.from == q && t.letter == letters[x]) {
            for &y in &succ[x] {
                edges.insert(((x, q), (y, t.to)));
                if seen.insert((y, t.to)) {
                    queue.push_back((y, t.to));
                }
            }
        }
    }
    edges
}

fn random_labelled_system(r: &mut clocert::rng::Rng, a: &Nba) -> (Vec<Vec<usize>>, Vec<usize>, Vec<Letter>) {
    let n = r.gen_range(1..=6);
    let mut succ = vec![Vec::new(); n];
    for (s, t) in random_edges(r, n, 2) {
        succ[s].push(t);
    }
    for s in succ.iter_mut() {
        s.sort_unstable();
        s.dedup();
    }
    let initial: Vec<usize> = (0..n).filter(|&s| s == 0 || r.gen_bool(0.2)).collect();
    let letters = (0..n).map(|_| a.alphabet[r.gen_range(0..a.alphabet.len())].clone()).collect();
    (succ, initial, letters)
}

/// Whether a reachable product cycle passes an accepting automaton state.
fn accepting_lasso(a: &Nba, edges: &BTreeSet<((usize, usize), (usize, usize))>) -> bool {
    let nodes: Vec<(usize, usize)> = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let id = |p: (usize, usize)| nodes.binary_search(&p).unwrap();
    let flat: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (id(u), id(v))).collect();
    let tc = naive_closure(nodes.len(), &flat);
    nodes.iter().enumerate().any(|(i, &(_, q))| a.is_accepting(q) && tc[i][i])
}

pub fn product_matches_brute_force_and_unrolling_preserves_acceptance() {
    let mut r = rng(62);
    for _ in 0..500 {
        let a = random_nba(&mut r);
        let (succ, initial, letters) = random_labelled_system(&mut r, &a);
        let got = finite_product_edges(&a, &succ, &initial, &letters).unwrap();
        assert_eq!(got, brute_product(&a, &succ, &initial, &letters));
        let u = unroll_once(&a);
        let unrolled = finite_product_edges(&u, &succ, &initial, &letters).unwrap();
        assert_eq!(accepting_lasso(&a, &got), accepting_lasso(&u, &unrolled));
    }
}

pub fn hoa_round_trips() {
    let mut r = rng(63);
    for _ in 0..500 {
        let a = random_nba(&mut r);
        let text = to_hoa(&a);
        let b = parse_hoa(&text).unwrap();
        assert_eq!(a.transitions, b.transitions, "{text}");
        assert_eq!((&a.initial, &a.accepting, &a.aps), (&b.initial, &b.accepting, &b.aps));
        assert_eq!(to_hoa(&b), text);
    }
}
