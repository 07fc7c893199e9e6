use clocert::expr::{Expr, Interval, IntervalBox};
use clocert::falsifier::{decide, BlockDomain, Claim, Decision, Domain, FalsifierConfig, Sense};
use crate::common::*;
use rand::Rng as _;

fn random_domain(r: &mut clocert::rng::Rng) -> (Domain, IntervalBox) {
    let blocks = r.gen_range(1..=2);
    let bx: Vec<Interval> = (0..blocks).flat_map(|_| random_box(r, 1)).collect();
    let domain = Domain::new(
        1,
        bx.iter().map(|iv| BlockDomain::from_box(IntervalBox(vec![*iv]))).collect(),
    );
    (domain, IntervalBox(bx))
}

/// Shifts `e` so its sampled minimum sits near `offset`.
fn shifted(r: &mut clocert::rng::Rng, e: Expr, bx: &IntervalBox, offset: f64) -> Expr {
    let env = box_regions();
    let m = (0..200)
        .map(|_| e.eval(&point_in(r, &bx.0), &env))
        .fold(f64::INFINITY, f64::min);
    Expr::Add(Box::new(e), Box::new(Expr::Const(offset - m)))
}

const SAMPLES: usize = 100_000;

pub fn verified_claims_have_no_sampled_violation() {
    let env = box_regions();
    let cfg = FalsifierConfig {
        delta: 1e-4,
        budget: 20_000,
        eps: 1e-6,
    };
    let mut r = rng(51);
    let (mut verified, mut refuted, mut unknown) = (0, 0, 0);
    while verified < 20 {
        let (domain, bx) = random_domain(&mut r);
        let e = random_expr(&mut r, bx.dim(), 3, true);
        let offset = r.gen_range(-0.2..0.5);
        let expr = shifted(&mut r, e, &bx, offset);
        let claim = Claim::ForAllNonneg { expr: expr.clone(), domain };
        match decide(&claim, &env, &cfg).unwrap() {
            Decision::Verified { min_lower, .. } => {
                verified += 1;
                assert!(min_lower >= -cfg.eps);
                for _ in 0..SAMPLES {
                    let p = point_in(&mut r, &bx.0);
                    assert!(!claim.violated_at(&p, &env, cfg.eps), "{expr:?} at {p:?}");
                }
            }
            Decision::Counterexample { point, values } => {
                refuted += 1;
                assert!(claim.domain().contains(&point));
                assert!(claim.violated_at(&point, &env, cfg.eps));
                assert_eq!(values[0], expr.eval(&point, &env));
            }
            Decision::Unknown { .. } => unknown += 1,
        }
    }
    assert!(refuted > 0, "{verified} {refuted} {unknown}");
}

pub fn unsatisfiable_conjunctions_have_no_sampled_witness() {
    let env = box_regions();
    let cfg = FalsifierConfig {
        delta: 1e-4,
        budget: 20_000,
        eps: 1e-6,
    };
    let mut r = rng(52);
    let mut verified = 0;
    let mut tries = 0;
    while verified < 10 {
        tries += 1;
        assert!(tries < 5000);
        let (domain, bx) = random_domain(&mut r);
        let conjuncts: Vec<(Expr, Sense, f64)> = (0..r.gen_range(1..=3))
            .map(|_| {
                let e = random_expr(&mut r, bx.dim(), 3, false);
                let sense = if r.gen_bool(0.5) { Sense::Ge } else { Sense::Le };
                (e, sense, r.gen_range(-2.0..2.0))
            })
            .collect();
        let claim = Claim::UnsatConj { conjuncts, domain };
        match decide(&claim, &env, &cfg).unwrap() {
            Decision::Verified { .. } => {
                verified += 1;
                for _ in 0..SAMPLES {
                    let p = point_in(&mut r, &bx.0);
                    assert!(!claim.violated_at(&p, &env, cfg.eps), "{claim:?} at {p:?}");
                }
            }
            Decision::Counterexample { point, .. } => {
                assert!(claim.domain().contains(&point));
                assert!(claim.violated_at(&point, &env, cfg.eps));
            }
            Decision::Unknown { .. } => {}
        }
    }
}
