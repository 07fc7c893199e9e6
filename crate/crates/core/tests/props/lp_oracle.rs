use clocert::lp::{solve, solve_rowgen, LinearProgram, LpOutcome, Rel};
use crate::common::rng;
use rand::Rng as _;

struct Plane {
    a: Vec<f64>,
    b: f64,
}

/// Solves the square system by Gaussian elimination with partial pivoting.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

fn feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
    lp.bounds
        .iter()
        .zip(x)
        .all(|(&(l, u), &v)| v >= l - tol && v <= u + tol)
        && lp.constraints.iter().all(|c| c.violation(x) <= tol)
}

fn combinations(pool: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, pool: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..pool {
            cur.push(i);
            rec(i + 1, pool, k, cur, f);
            cur.pop();
        }
    }
    rec(0, pool, k, &mut Vec::new(), f);
}

/// Optimum by enumerating every vertex of the bounded feasible polytope.
fn brute_force(lp: &LinearProgram, c: &[f64]) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes = Vec::new();
    for (i, &(l, u)) in lp.bounds.iter().enumerate() {
        let mut a = vec![0.0; n];
        a[i] = 1.0;
        planes.push(Plane { a: a.clone(), b: l });
        planes.push(Plane { a, b: u });
    }
    for con in &lp.constraints {
        planes.push(Plane {
            a: con.coeffs.clone(),
            b: con.rhs,
        });
    }
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |idx| {
        let m = idx.iter().map(|&i| planes[i].a.clone()).collect();
        let rhs = idx.iter().map(|&i| planes[i].b).collect();
        if let Some(x) = solve_square(m, rhs) {
            if feasible(lp, &x, 1e-7) {
                let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    });
    best
}

fn random_lp(r: &mut clocert::rng::Rng) -> (LinearProgram, Vec<f64>) {
    let n = r.gen_range(1..=4);
    let m = r.gen_range(0..=8);
    let bounds = (0..n)
        .map(|_| {
            let l = r.gen_range(-10..=0) as f64;
            (l, l + r.gen_range(0..=12) as f64)
        })
        .collect();
    let mut lp = LinearProgram::new((0..n).map(|i| format!("v{i}")).collect(), bounds);
    for _ in 0..m {
        let coeffs = (0..n).map(|_| r.gen_range(-5..=5) as f64).collect();
        let rel = match r.gen_range(0..10) {
            0 => Rel::Eq,
            1..=4 => Rel::Ge,
            _ => Rel::Le,
        };
        lp.add(coeffs, rel, r.gen_range(-10..=10) as f64);
    }
    let c: Vec<f64> = (0..n).map(|_| r.gen_range(-5..=5) as f64).collect();
    (lp, c)
}

pub fn simplex_matches_vertex_enumeration() {
    let mut r = rng(21);
    let (mut feasible_count, mut infeasible_count) = (0, 0);
    for case in 0..1000 {
        let (mut lp, c) = random_lp(&mut r);
        let minimize = r.gen_bool(0.5);
        if minimize {
            lp.minimize(c.clone());
        } else {
            lp.maximize(c.clone());
        }
        let sign = if minimize { -1.0 } else { 1.0 };
        let neg: Vec<f64> = c.iter().map(|v| v * sign).collect();
        let oracle = brute_force(&lp, &neg).map(|v| v * sign);
        let got = solve(&lp).unwrap();
        match (oracle, &got) {
            (None, LpOutcome::Infeasible) => infeasible_count += 1,
            (Some(want), LpOutcome::Feasible { x, objective }) => {
                feasible_count += 1;
                assert!((want - objective).abs() <= 1e-6 * (1.0 + want.abs()), "case {case}: {objective} vs {want}\n{}", lp.dump());
                assert!(feasible(&lp, x, 1e-7), "case {case}: solver point infeasible");
                let at: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
                assert!((at - objective).abs() <= 1e-6 * (1.0 + at.abs()));
            }
            _ => panic!("case {case}: oracle {oracle:?}, solver {got:?}\n{}", lp.dump()),
        }
        let rg = solve_rowgen(&lp, 2, 1).unwrap();
        assert_eq!(rg.is_feasible(), got.is_feasible(), "case {case}: row generation disagrees");
        if let (LpOutcome::Feasible { objective: a, .. }, LpOutcome::Feasible { objective: b, .. }) = (&rg, &got) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "case {case}: row generation {a} vs {b}");
        }
    }
    // both outcomes must actually be exercised
    assert!(feasible_count > 100 && infeasible_count > 20, "{feasible_count} / {infeasible_count}");
}

pub fn feasibility_without_objective() {
    let mut r = rng(22);
    for _ in 0..300 {
        let (lp, c) = random_lp(&mut r);
        let got = solve(&lp).unwrap();
        assert_eq!(got.is_feasible(), brute_force(&lp, &c).is_some());
    }
}
