mod common;

use common::*;
use proptest::prelude::*;
use varjet::symexpr::{parse_expression, Var};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_then_parsing_round_trips(e in jet_polynomial(&sig_tx(), 2, 3)) {
        let sig = sig_tx();
        prop_assert_eq!(parse_expression(&e.to_text(&sig), &sig).unwrap(), e);
    }

    #[test]
    fn normalization_is_idempotent(e in jet_polynomial(&sig_tx(), 2, 3)) {
        let sig = sig_tx();
        let once = parse_expression(&e.to_text(&sig), &sig).unwrap();
        let twice = parse_expression(&once.to_text(&sig), &sig).unwrap();
        prop_assert_eq!(once.to_text(&sig), twice.to_text(&sig));
    }

    #[test]
    fn partial_derivatives_commute(e in jet_polynomial(&sig_tx(), 2, 4), i in 0usize..8, j in 0usize..8) {
        let vars: Vec<Var> = e.vars().into_iter().collect();
        prop_assume!(!vars.is_empty());
        let (a, b) = (&vars[i % vars.len()], &vars[j % vars.len()]);
        prop_assert_eq!(e.partial(a).partial(b), e.partial(b).partial(a));
    }

    #[test]
    fn ring_laws(a in jet_polynomial(&sig_x(), 1, 2), b in jet_polynomial(&sig_x(), 1, 2), c in jet_polynomial(&sig_x(), 1, 2)) {
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(&a * &b, &b * &a);
    }

    #[test]
    fn product_rule(a in jet_polynomial(&sig_x(), 1, 2), b in jet_polynomial(&sig_x(), 1, 2)) {
        let v = Var::Base(0);
        prop_assert_eq!((&a * &b).partial(&v), &(&a.partial(&v) * &b) + &(&a * &b.partial(&v)));
    }
}
