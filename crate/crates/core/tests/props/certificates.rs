use clocert::automata::finite_product_edges;
use clocert::certificate::{
    cc_from_barrier, finite_barrier, finite_persistence_cc, finite_safety_cc, FiniteInstance,
    PairFunction,
};
use clocert::system::{FiniteSystem, PersistenceResult, SafetyResult};
use clocert::triplet::{subsume, triplet_verify, TripletConfig};
use clocert::{load_problem, CheckMode};
use crate::common::*;
use rand::Rng as _;
use serde_json::json;

const MODES: [CheckMode; 2] = [CheckMode::Strengthened, CheckMode::Implication];

fn instance<'a>(sys: &'a FiniteSystem, unsafe_states: &'a [usize], vf: &'a [usize]) -> FiniteInstance<'a> {
    FiniteInstance {
        sys,
        unsafe_states,
        vf_states: vf,
        letters: &[],
        nba: None,
    }
}

fn system_with_initial(r: &mut clocert::rng::Rng, max_states: usize) -> FiniteSystem {
    let n = r.gen_range(1..=max_states);
    let edges = random_edges(r, n, 3);
    let mut init = random_subset(r, n, 0.3);
    if init.is_empty() {
        init.push(r.gen_range(0..n));
    }
    FiniteSystem::new(n, init, &edges, None).unwrap()
}

pub fn barrier_derived_closure_certificates_are_valid() {
    let mut r = rng(41);
    let mut tried = 0;
    while tried < 1000 {
        let sys = system_with_initial(&mut r, 10);
        // B ≤ 0 on a successor-closed superset of the reachable states
        let mut seeds = sys.initial.clone();
        seeds.extend(random_subset(&mut r, sys.states, 0.2));
        let inside = sys.forward_closure(&seeds);
        let outside: Vec<usize> = (0..sys.states).filter(|&s| !inside[s]).collect();
        if outside.is_empty() {
            continue;
        }
        tried += 1;
        let values: Vec<f64> = (0..sys.states)
            .map(|s| {
                let v = r.gen_range(0.01..5.0);
                if inside[s] {
                    -v * r.gen_range(0..2) as f64
                } else {
                    v
                }
            })
            .collect();
        let bad: Vec<usize> = outside.iter().copied().filter(|_| r.gen_bool(0.7)).collect();
        let inst = instance(&sys, &bad, &[]);
        let b = |s: usize| values[s];
        for mode in MODES {
            assert!(finite_barrier(&b, &inst, mode).is_ok() || mode == CheckMode::Strengthened);
        }
        assert!(finite_barrier(&b, &inst, CheckMode::Implication).is_ok());
        let gamma = r.gen_range(0.1..5.0);
        let table = values.clone();
        let cc = cc_from_barrier(move |x: &[f64]| table[x[0] as usize], gamma);
        let t = |a: usize, c: usize| cc.value(&[a as f64], 0, &[c as f64], 0);
        for mode in MODES {
            if let Err(v) = finite_safety_cc(&t, &inst, gamma, 1.0, mode) {
                panic!("{mode:?}: {v:?} for barrier {values:?}");
            }
        }
    }
}

/// Calls `f` on every table over `m × m` with entries from `grid` until it
/// returns true.
fn any_table(m: usize, grid: &[f64], f: &mut dyn FnMut(&[f64]) -> bool) -> bool {
    let cells = m * m;
    let mut idx = vec![0usize; cells];
    let mut table = vec![grid[0]; cells];
    loop {
        if f(&table) {
            return true;
        }
        let mut k = 0;
        loop {
            if k == cells {
                return false;
            }
            idx[k] += 1;
            if idx[k] < grid.len() {
                table[k] = grid[idx[k]];
                break;
            }
            idx[k] = 0;
            table[k] = grid[0];
            k += 1;
        }
    }
}

pub fn safety_certificates_exist_exactly_for_safe_systems() {
    let mut r = rng(42);
    let (mut safe_count, mut unsafe_count) = (0, 0);
    for _ in 0..500 {
        let sys = system_with_initial(&mut r, 3);
        let bad: Vec<usize> = random_subset(&mut r, sys.states, 0.4)
            .into_iter()
            .filter(|s| !sys.initial.contains(s))
            .collect();
        let inst = instance(&sys, &bad, &[]);
        let m = sys.states;
        let safe = sys.exact_safety(&bad) == SafetyResult::Safe;
        for mode in MODES {
            let found = any_table(m, &[-1.0, 0.0], &mut |t| {
                finite_safety_cc(&|a, b| t[a * m + b], &inst, 1.0, 1.0, mode).is_ok()
            });
            assert_eq!(found, safe, "{mode:?}");
        }
        // the closure indicator is a certificate on larger systems as well
        let big = system_with_initial(&mut r, 9);
        let bad: Vec<usize> = random_subset(&mut r, big.states, 0.3)
            .into_iter()
            .filter(|s| !big.initial.contains(s))
            .collect();
        let tc = big.transitive_closure();
        let t = |a: usize, b: usize| if tc[a][b] { 0.0 } else { -1.0 };
        let valid = finite_safety_cc(&t, &instance(&big, &bad, &[]), 1.0, 1.0, CheckMode::Strengthened).is_ok();
        let safe_big = big.exact_safety(&bad) == SafetyResult::Safe;
        assert_eq!(valid, safe_big);
        if safe_big {
            safe_count += 1;
        } else {
            unsafe_count += 1;
        }
    }
    assert!(safe_count > 50 && unsafe_count > 50);
}

/// Most `vf` states on any path from each state, capped at `states + 1`.
fn vf_height(sys: &FiniteSystem, vf: &[usize]) -> Vec<f64> {
    let cap = sys.states + 1;
    let own: Vec<usize> = (0..sys.states).map(|s| vf.contains(&s) as usize).collect();
    let mut h = own.clone();
    for _ in 0..=cap {
        let next: Vec<usize> = (0..sys.states)
            .map(|s| {
                let best = sys.edges().filter(|e| e.0 == s).map(|e| h[e.1]).max().unwrap_or(0);
                (own[s] + best).min(cap)
            })
            .collect();
        h = next;
    }
    h.into_iter().map(|v| v as f64).collect()
}

pub fn persistence_certificates_imply_persistence() {
    let mut r = rng(43);
    let (mut found_count, mut persistent_count) = (0, 0);
    for _ in 0..500 {
        let sys = system_with_initial(&mut r, 3);
        let vf = random_subset(&mut r, sys.states, 0.4);
        let inst = instance(&sys, &[], &vf);
        let m = sys.states;
        let persistent = sys.exact_persistence(&vf) == PersistenceResult::Persistent;
        let found = any_table(m, &[-1.0, 0.0, 1.0], &mut |t| {
            finite_persistence_cc(&|a, b| t[a * m + b], &inst, 1.0, [1.0, 0.0, 0.0], CheckMode::Implication).is_ok()
        });
        if found {
            found_count += 1;
            assert!(persistent);
        }
        // and a ranking certificate exists whenever the system is persistent
        let big = system_with_initial(&mut r, 9);
        let vf = random_subset(&mut r, big.states, 0.3);
        let tc = big.transitive_closure();
        let h = vf_height(&big, &vf);
        let t = |a: usize, b: usize| if tc[a][b] { h[b] } else { -1.0 };
        let valid = finite_persistence_cc(&t, &instance(&big, &[], &vf), 1.0, [1.0, 0.0, 0.0], CheckMode::Implication).is_ok();
        let persistent_big = big.exact_persistence(&vf) == PersistenceResult::Persistent;
        assert_eq!(valid, persistent_big);
        persistent_count += persistent_big as usize;
    }
    assert!(found_count > 50 && persistent_count > 50, "{found_count} / {persistent_count}");
}

const LETTERS: [&[&str]; 4] = [&[], &["a0"], &["a1"], &["a0", "a1"]];

fn random_ltl_problem(r: &mut clocert::rng::Rng) -> serde_json::Value {
    let n = r.gen_range(1..=6);
    // mostly forward edges, so some letter orders become impossible
    let forward = r.gen_bool(0.8);
    let mut edges = Vec::new();
    for s in 0..n {
        for _ in 0..r.gen_range(1..=2) {
            edges.push((s, if forward { r.gen_range(s..n) } else { r.gen_range(0..n) }));
        }
    }
    let mut init = random_subset(r, n, 0.3);
    if init.is_empty() {
        init.push(0);
    }
    let labels: Vec<&[&str]> = (0..n).map(|_| LETTERS[r.gen_range(0..4)]).collect();
    let q = r.gen_range(2..=4);
    let mut nba_edges = Vec::new();
    for from in 0..q {
        for to in 0..q {
            if r.gen_bool(0.45) {
                let letters: Vec<&[&str]> = LETTERS.iter().copied().filter(|_| r.gen_bool(0.4)).collect();
                if !letters.is_empty() {
                    nba_edges.push(json!({"from": from, "to": to, "letters": letters}));
                }
            }
        }
    }
    let names: Vec<String> = (0..q).map(|i| format!("q{i}")).collect();
    let accepting: Vec<usize> = (1..q).filter(|_| r.gen_bool(0.5)).collect();
    json!({
        "name": "random",
        "system": "finite",
        "spec": "ltl",
        "states": n,
        "initial": init,
        "transitions": edges,
        "state_labels": labels,
        "nba": {"aps": ["a0", "a1"], "states": names, "initial": [0], "accepting": accepting, "edges": nba_edges},
    })
}

/// Whether some reachable product cycle visits an accepting state.
fn accepting_lasso(p: &clocert::Problem) -> bool {
    let sys = p.finite_system().unwrap();
    let sets = p.finite.as_ref().unwrap();
    let a = p.nba.as_ref().unwrap();
    let succ: Vec<Vec<usize>> = (0..sys.states)
        .map(|s| sys.edges().filter(|e| e.0 == s).map(|e| e.1).collect())
        .collect();
    let edges = finite_product_edges(a, &succ, &sys.initial, &sets.state_letters).unwrap();
    let q = a.num_states();
    let id = |(x, i): (usize, usize)| x * q + i;
    let flat: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (id(u), id(v))).collect();
    let tc = naive_closure(sys.states * q, &flat);
    (0..sys.states).any(|x| a.accepting.iter().any(|&i| tc[id((x, i))][id((x, i))] && flat.iter().any(|e| e.1 == id((x, i)))))
}

pub fn subsumption_certificates_check_exhaustively() {
    let mut r = rng(44);
    let cfg = TripletConfig {
        n: 20,
        max_iters: 50,
        ..TripletConfig::default()
    };
    let (mut verified, mut vacuous, mut attempts) = (0, 0, 0);
    while verified < 200 {
        attempts += 1;
        assert!(attempts < 100_000, "only {verified} verified instances");
        let p = load_problem(&random_ltl_problem(&mut r).to_string(), None).unwrap();
        let tv = triplet_verify(&p, &cfg).unwrap();
        if !tv.verified() {
            continue;
        }
        assert!(!accepting_lasso(&p), "triplet verification accepted a violating system");
        if tv.cuts.is_empty() {
            vacuous += 1;
            continue;
        }
        verified += 1;
        let sub = subsume(&tv, &p, 1.0).unwrap();
        for mode in MODES {
            let res = sub.certificate.check_finite(&sub.problem, mode).unwrap();
            assert!(res.is_ok(), "{mode:?}: {:?}\n{}", res.err(), random_dump(&p));
        }
    }
    eprintln!("{verified} instances with cuts, {vacuous} vacuous, {attempts} generated");
}

fn random_dump(p: &clocert::Problem) -> String {
    format!("{:?}\n{:?}", p.finite, p.nba)
}
