//! Fixtures for the benchmarks in `benches/`.

use std::path::PathBuf;

use clocert::lp::{LinearProgram, Rel};
use clocert::{load_problem_file, Certificate, Problem};

pub fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

pub fn problem(name: &str) -> Problem {
    load_problem_file(&problems_dir().join(name)).expect("bundled problem loads")
}

pub fn certificate(name: &str, p: &Problem) -> Certificate {
    let text = std::fs::read_to_string(problems_dir().join(name)).expect("bundled certificate");
    Certificate::parse(&text, p).expect("bundled certificate parses")
}

/// A dense feasible LP with `n` variables and `m` rows, built from a fixed
/// quasi-random sequence.
pub fn dense_lp(n: usize, m: usize) -> LinearProgram {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let names = (0..n).map(|i| format!("v{i}")).collect();
    let mut lp = LinearProgram::new(names, vec![(-10.0, 10.0); n]);
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| next()).collect();
        // the origin is feasible
        lp.add(row, Rel::Le, 1.0 + next().abs());
    }
    lp.maximize((0..n).map(|_| next()).collect());
    lp
}

/// `states` states on a ring with chords; state 0 is initial.
pub fn ring_system(states: usize) -> clocert::FiniteSystem {
    let edges: Vec<(usize, usize)> = (0..states)
        .flat_map(|s| [(s, (s + 1) % states), (s, (s * 7 + 3) % states)])
        .collect();
    clocert::FiniteSystem::new(states, vec![0], &edges, None).expect("valid system")
}
