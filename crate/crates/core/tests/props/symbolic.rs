use clocert::expr::{parse_with, Expr, Interval, VarContext};
use crate::common::*;
use rand::Rng as _;

pub fn point_values_lie_in_interval_extension() {
    let env = box_regions();
    let mut r = rng(11);
    for case in 0..100_000 {
        let e = random_expr(&mut r, 2, 4, true);
        let bx = random_box(&mut r, 2);
        let p = point_in(&mut r, &bx);
        let v = e.eval(&p, &env);
        let iv = e.eval_box(&bx, &env).unwrap();
        assert!(iv.contains(v), "case {case}: {e:?} at {p:?} = {v} outside {iv:?}");
        let tight = e.enclose(&bx, &env);
        assert!(tight.contains(v), "case {case}: {e:?} at {p:?} = {v} outside affine {tight:?}");
        assert!(iv.lo <= tight.lo + 1e-9 * (1.0 + iv.lo.abs()) || !iv.is_finite());
    }
}

pub fn degenerate_boxes_contain_the_point_value() {
    let env = box_regions();
    let mut r = rng(12);
    for _ in 0..20_000 {
        let e = random_expr(&mut r, 2, 4, true);
        let p: Vec<f64> = (0..2).map(|_| r.gen_range(-3.0..3.0)).collect();
        let bx: Vec<Interval> = p.iter().map(|&v| Interval::point(v)).collect();
        let v = e.eval(&p, &env);
        assert!(e.eval_box(&bx, &env).unwrap().contains(v));
    }
}

pub fn arbitrary_constants_print_exactly() {
    let ctx = VarContext::from_names(&["x1"]);
    let mut r = rng(13);
    for _ in 0..10_000 {
        let c: f64 = r.gen_range(-1e6..1e6) * r.gen::<f64>().powi(8);
        let e = Expr::Add(Box::new(Expr::Var(0)), Box::new(Expr::Const(c)));
        let back = parse_with(&ctx.show(&e).to_string(), &ctx).unwrap();
        assert_eq!(back.eval(&[0.0], &clocert::expr::NoRegions), c);
    }
}

pub fn parse_errors_are_reported() {
    let ctx = VarContext::from_names(&["x1"]);
    for bad in ["x1 +", "x1 ^ x1", "1 / x1", "foo", "sin x1", "ind(nope)", "(x1"] {
        assert!(parse_with(bad, &ctx).is_err(), "{bad} parsed");
    }
}
