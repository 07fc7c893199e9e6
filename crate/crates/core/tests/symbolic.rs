mod common;
mod props;

use clocert::expr::{parse_with, Interval, VarContext};
use common::*;
use proptest::prelude::*;
use rand::Rng as _;

#[test]
fn point_values_lie_in_interval_extension() {
    props::symbolic::point_values_lie_in_interval_extension();
}

#[test]
fn degenerate_boxes_contain_the_point_value() {
    props::symbolic::degenerate_boxes_contain_the_point_value();
}

#[test]
fn arbitrary_constants_print_exactly() {
    props::symbolic::arbitrary_constants_print_exactly();
}

#[test]
fn parse_errors_are_reported() {
    props::symbolic::parse_errors_are_reported();
}

fn sub_box(r: &mut clocert::rng::Rng, bx: &[Interval]) -> Vec<Interval> {
    bx.iter()
        .map(|iv| {
            let a = iv.lo + (iv.hi - iv.lo) * r.gen::<f64>();
            let b = iv.lo + (iv.hi - iv.lo) * r.gen::<f64>();
            Interval::new(a.min(b).max(iv.lo), a.max(b).min(iv.hi))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn refinement_never_widens(seed in any::<u64>()) {
        let env = box_regions();
        let mut r = rng(seed);
        let e = random_expr(&mut r, 2, 4, true);
        let bx = random_box(&mut r, 2);
        let inner = sub_box(&mut r, &bx);
        let outer = e.eval_box(&bx, &env).unwrap();
        let refined = e.eval_box(&inner, &env).unwrap();
        prop_assert!(outer.contains_interval(&refined), "{:?}: {:?} not in {:?}", e, refined, outer);
    }

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let ctx = VarContext::from_names(&["x1", "x2"]).with_regions(&["r"]);
        let mut r = rng(seed);
        let e = random_expr(&mut r, 2, 5, true);
        let text = ctx.show(&e).to_string();
        let once = parse_with(&text, &ctx).unwrap();
        let again = parse_with(&ctx.show(&once).to_string(), &ctx).unwrap();
        prop_assert_eq!(&once, &again, "{}", text);
        // printing never changes values
        let env = box_regions();
        let p = [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)];
        let (a, b) = (e.eval(&p, &env), once.eval(&p, &env));
        prop_assert!(a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs()) || (a.is_nan() && b.is_nan()),
            "{} : {} vs {}", text, a, b);
    }
}

