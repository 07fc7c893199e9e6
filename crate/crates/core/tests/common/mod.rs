#![allow(dead_code)]

use clocert::expr::{Expr, Interval, IntervalBox, RegionId};
use clocert::region::{Region, RegionTable};
use clocert::rng::{seeded, Rng};
use rand::Rng as _;

pub fn rng(seed: u64) -> Rng {
    seeded(seed)
}

/// Region table with one box region `r` over two coordinates.
pub fn box_regions() -> RegionTable {
    let mut t = RegionTable::new();
    t.insert(
        "r",
        Region::from_box(IntervalBox(vec![
            Interval::new(-0.5, 1.0),
            Interval::new(0.0, 2.0),
        ])),
    );
    t
}

/// Random expression over `vars` variables. Leaves are variables or
/// constants; `indicators` allows `ind(r; ..)` nodes over region 0.
pub fn random_expr(r: &mut Rng, vars: usize, depth: u32, indicators: bool) -> Expr {
    if depth == 0 || r.gen_bool(0.25) {
        return if r.gen_bool(0.6) {
            Expr::Var(r.gen_range(0..vars))
        } else {
            Expr::Const((r.gen_range(-300..=300) as f64) / 100.0)
        };
    }
    let sub = |r: &mut Rng| random_expr(r, vars, depth - 1, indicators);
    let a = sub(r);
    match r.gen_range(0..if indicators { 10 } else { 9 }) {
        0 => Expr::Add(Box::new(a), Box::new(sub(r))),
        1 => Expr::Sub(Box::new(a), Box::new(sub(r))),
        2 | 3 => Expr::Mul(Box::new(a), Box::new(sub(r))),
        4 => Expr::Pow(Box::new(a), r.gen_range(2..=3)),
        5 => Expr::Sin(Box::new(a)),
        6 => Expr::Cos(Box::new(a)),
        7 => Expr::Max(Box::new(a), Box::new(sub(r))),
        8 => Expr::Min(Box::new(a), Box::new(sub(r))),
        _ => Expr::Indicator(RegionId(0), vec![a, sub(r)]),
    }
}

pub fn random_box(r: &mut Rng, dim: usize) -> Vec<Interval> {
    (0..dim)
        .map(|_| {
            let a: f64 = r.gen_range(-3.0..3.0);
            let w: f64 = if r.gen_bool(0.1) { 0.0 } else { r.gen_range(0.0..2.0) };
            Interval::new(a, a + w)
        })
        .collect()
}

pub fn point_in(r: &mut Rng, bx: &[Interval]) -> Vec<f64> {
    bx.iter()
        .map(|iv| {
            let u: f64 = r.gen();
            (iv.lo + (iv.hi - iv.lo) * u).clamp(iv.lo, iv.hi)
        })
        .collect()
}

/// Random edge list in which every state has between one and `max_out`
/// successors.
pub fn random_edges(r: &mut Rng, states: usize, max_out: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for s in 0..states {
        let k = r.gen_range(1..=max_out.min(states));
        for _ in 0..k {
            edges.push((s, r.gen_range(0..states)));
        }
    }
    edges
}

pub fn random_subset(r: &mut Rng, states: usize, p: f64) -> Vec<usize> {
    (0..states).filter(|_| r.gen_bool(p)).collect()
}

/// Reachability in one or more steps, by naive fixpoint iteration.
pub fn naive_closure(states: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; states]; states];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    loop {
        let mut changed = false;
        for a in 0..states {
            for b in 0..states {
                if !r[a][b] {
                    continue;
                }
                for c in 0..states {
                    if r[b][c] && !r[a][c] {
                        r[a][c] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return r;
        }
    }
}
