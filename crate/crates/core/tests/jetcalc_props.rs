mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use varjet::jetcalc::{
    apply_prolonged, evaluate_on_section, iterated_total_derivative, jet_prolong_section, total_derivative, tower_project,
    EvolutionaryField, Section,
};
use varjet::symexpr::{evaluate, MultiIndex, Rational, Var};

fn point(m: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-8i64..=8, 1i64..=3).prop_map(|(p, q)| Rational::new(p.into(), q.into())), m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn total_derivatives_commute(e in jet_polynomial(&sig_tx(), 2, 3)) {
        let sig = sig_tx();
        let a = total_derivative(&total_derivative(&e, 0, &sig).unwrap(), 1, &sig).unwrap();
        let b = total_derivative(&total_derivative(&e, 1, &sig).unwrap(), 0, &sig).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(iterated_total_derivative(&e, &MultiIndex::from_counts(vec![1, 1])), a);
    }

    #[test]
    fn total_derivative_is_a_derivation(a in jet_polynomial(&sig_tx(), 1, 2), b in jet_polynomial(&sig_tx(), 1, 2)) {
        let sig = sig_tx();
        let d = |e| total_derivative(e, 1, &sig).unwrap();
        let ab = &a * &b;
        prop_assert_eq!(d(&ab), &(&d(&a) * &b) + &(&a * &d(&b)));
    }

    #[test]
    fn prolonged_field_commutes_with_total_derivative(
        q in jet_polynomial(&sig_tx(), 1, 2),
        e in jet_polynomial(&sig_tx(), 2, 2),
        mu in 0usize..2,
    ) {
        let sig = sig_tx();
        let field = EvolutionaryField::new(vec![q], &sig).unwrap();
        let lhs = apply_prolonged(&field, &total_derivative(&e, mu, &sig).unwrap());
        let rhs = total_derivative(&apply_prolonged(&field, &e), mu, &sig).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn evaluation_on_sections_commutes_with_total_derivative(
        e in jet_polynomial(&sig_tx(), 2, 3),
        f in polynomial_map(2, 1, 3),
        at in point(2),
        mu in 0usize..2,
    ) {
        let sig = sig_tx();
        let section = Section::new(f, &sig).unwrap();
        let lhs = evaluate_on_section(&total_derivative(&e, mu, &sig).unwrap(), &section, &at, &BTreeMap::new()).unwrap();
        let pulled = section.pull_back(&e).unwrap().partial(&Var::Base(mu));
        let assignment: BTreeMap<Var, f64> =
            at.iter().enumerate().map(|(i, r)| (Var::Base(i), num_traits::ToPrimitive::to_f64(r).unwrap())).collect();
        let rhs = evaluate(&pulled, &assignment, &BTreeMap::new()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn tower_projections_compose(f in polynomial_map(2, 1, 4), at in point(2), k in 0u32..=3, l in 0u32..=3) {
        let sig = sig_tx();
        let (k, l) = (k.max(l), k.min(l));
        let section = Section::new(f, &sig).unwrap();
        let top = jet_prolong_section(&section, &at, 3, &sig).unwrap();
        let via = tower_project(&tower_project(&top, k).unwrap(), l).unwrap();
        prop_assert_eq!(&via, &tower_project(&top, l).unwrap());
        prop_assert_eq!(via, jet_prolong_section(&section, &at, l, &sig).unwrap());
    }
}
