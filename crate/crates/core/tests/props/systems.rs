use clocert::certificate::{finite_barrier, FiniteInstance};
use clocert::system::{BarrierLp, FiniteSystem, PersistenceResult, SafetyResult};
use clocert::{CheckMode, Region};
use clocert::expr::{Interval, IntervalBox};
use crate::common::*;
use rand::Rng as _;

fn random_system(r: &mut clocert::rng::Rng, max_states: usize) -> (FiniteSystem, Vec<(usize, usize)>) {
    let n = r.gen_range(1..=max_states);
    let edges = random_edges(r, n, 3);
    let mut init = random_subset(r, n, 0.3);
    if init.is_empty() {
        init.push(r.gen_range(0..n));
    }
    (FiniteSystem::new(n, init, &edges, None).unwrap(), edges)
}

pub fn closure_matches_naive_fixpoint() {
    let mut r = rng(31);
    for _ in 0..500 {
        let (sys, edges) = random_system(&mut r, 12);
        assert_eq!(sys.transitive_closure(), naive_closure(sys.states, &edges));
    }
}

pub fn exact_safety_agrees_with_closure() {
    let mut r = rng(32);
    for _ in 0..500 {
        let (sys, edges) = random_system(&mut r, 12);
        let bad = random_subset(&mut r, sys.states, 0.2);
        let tc = naive_closure(sys.states, &edges);
        let reaches = sys
            .initial
            .iter()
            .any(|&i| bad.contains(&i) || bad.iter().any(|&u| tc[i][u]));
        match sys.exact_safety(&bad) {
            SafetyResult::Safe => assert!(!reaches),
            SafetyResult::Unsafe(path) => {
                assert!(reaches);
                assert!(sys.initial.contains(&path[0]));
                assert!(bad.contains(path.last().unwrap()));
                assert!(path.windows(2).all(|w| edges.contains(&(w[0], w[1]))));
            }
        }
    }
}

pub fn exact_persistence_agrees_with_closure() {
    let mut r = rng(33);
    for _ in 0..500 {
        let (sys, edges) = random_system(&mut r, 10);
        let vf = random_subset(&mut r, sys.states, 0.3);
        let tc = naive_closure(sys.states, &edges);
        let reachable = |v: usize| sys.initial.iter().any(|&i| i == v || tc[i][v]);
        let recurring = vf.iter().any(|&v| reachable(v) && tc[v][v]);
        match sys.exact_persistence(&vf) {
            PersistenceResult::Persistent => assert!(!recurring),
            PersistenceResult::NotPersistent { stem, cycle } => {
                assert!(recurring);
                assert!(vf.contains(&cycle[0]));
                let mut run = stem.clone();
                run.extend(&cycle);
                run.push(cycle[0]);
                assert!(sys.initial.contains(&run[0]));
                assert!(run.windows(2).all(|w| edges.contains(&(w[0], w[1]))));
            }
        }
    }
}

pub fn feasible_barrier_lp_rechecks_exhaustively() {
    let mut r = rng(34);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..300 {
        let (sys, _) = random_system(&mut r, 7);
        let bad = random_subset(&mut r, sys.states, 0.25);
        let safe = sys.exact_safety(&bad) == SafetyResult::Safe;
        let inst = FiniteInstance {
            sys: &sys,
            unsafe_states: &bad,
            vf_states: &[],
            letters: &[],
            nba: None,
        };
        for degree in 1..=sys.states.max(2) - 1 {
            match sys.exists_polynomial_barrier(&bad, degree, 1e-3) {
                BarrierLp::Feasible(c) => {
                    feasible += 1;
                    let b = |s: usize| clocert::system::eval_poly(&c, s as f64);
                    assert!(finite_barrier(&b, &inst, CheckMode::Implication).is_ok(), "{c:?}");
                    assert!(safe);
                }
                BarrierLp::Infeasible => infeasible += 1,
            }
        }
        // interpolation through every state makes any safe separation reachable
        let full = sys.exists_polynomial_barrier(&bad, sys.states.max(2) - 1, 1e-3);
        assert_eq!(matches!(full, BarrierLp::Feasible(_)), safe, "{} states, edges {:?}, init {:?}, bad {bad:?}", sys.states, sys.edges().collect::<Vec<_>>(), sys.initial);
    }
    assert!(feasible > 50 && infeasible > 50, "{feasible} / {infeasible}");
}

pub fn region_sampling_is_deterministic() {
    let region = Region::from_box(IntervalBox(vec![Interval::new(0.0, 1.0), Interval::new(-2.0, 5.0)]));
    for seed in 0..50 {
        let a = region.sample(100, seed).unwrap();
        assert_eq!(a, region.sample(100, seed).unwrap());
        assert!(a.iter().all(|p| region.contains(p)));
        assert_ne!(a, region.sample(100, seed + 1).unwrap());
    }
    assert!(Region::new(vec![]).sample(3, 0).is_err());
}
