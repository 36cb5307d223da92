mod common;

use common::*;
use proptest::prelude::*;
use varjet::smoothset::{PlotDomain, PlotWitness, SmoothMap, SmoothSet};
use varjet::symexpr::Rational;

fn interval(lo: (i64, i64), hi: (i64, i64)) -> PlotDomain {
    PlotDomain::interval(Rational::new(lo.0.into(), lo.1.into()), Rational::new(hi.0.into(), hi.1.into())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn representable_restriction_is_functorial(
        phi in polynomial_map(1, 2, 2),
        psi in polynomial_map(2, 2, 2),
        w in polynomial_map(2, 3, 2),
    ) {
        let x = SmoothSet::representable(3);
        let phi = SmoothMap::new(PlotDomain::euclidean(1), PlotDomain::euclidean(2), phi).unwrap();
        let psi = SmoothMap::new(PlotDomain::euclidean(2), PlotDomain::euclidean(2), psi).unwrap();
        prop_assert_eq!(x.check_functoriality(&phi, &psi, &PlotWitness::Map(w)), Ok(true));
    }

    #[test]
    fn identity_restriction_is_trivial(w in polynomial_map(2, 2, 3)) {
        let x = SmoothSet::product(SmoothSet::representable(1), SmoothSet::representable(1));
        let plot = PlotWitness::pair(PlotWitness::Map(vec![w[0].clone()]), PlotWitness::Map(vec![w[1].clone()]));
        let domain = PlotDomain::euclidean(2);
        let back = x.restrict(&SmoothMap::identity(domain.clone()), &plot).unwrap();
        prop_assert!(x.same_plot(&domain, &back, &plot));
    }

    #[test]
    fn forms_restriction_is_functorial(c in polynomial_map(2, 2, 2), phi in polynomial_map(2, 2, 2), psi in polynomial_map(2, 2, 2)) {
        let x = SmoothSet::forms_sheaf(1);
        let form = c.into_iter().enumerate().fold(varjet::bicomplex::DeRhamForm::zero(2, 1), |acc, (i, e)| {
            acc.add(&varjet::bicomplex::DeRhamForm::monomial(2, vec![i], e).unwrap()).unwrap()
        });
        let r2 = PlotDomain::euclidean(2);
        let phi = SmoothMap::new(r2.clone(), r2.clone(), phi).unwrap();
        let psi = SmoothMap::new(r2.clone(), r2, psi).unwrap();
        prop_assert_eq!(x.check_functoriality(&phi, &psi, &PlotWitness::Form(form)), Ok(true));
    }

    #[test]
    fn glue_then_restrict_round_trips(w in polynomial_map(1, 2, 3), cut in 2i64..=8) {
        let x = SmoothSet::representable(2);
        let cover = [interval((0, 1), (cut + 1, 5)), interval((cut - 1, 5), (2, 1))];
        let plot = PlotWitness::Map(w);
        let (union, glued) = x.glue(&cover, &[plot.clone(), plot.clone()]).unwrap();
        for piece in &cover {
            let incl = SmoothMap::inclusion(piece.clone(), union.clone()).unwrap();
            prop_assert!(x.same_plot(piece, &x.restrict(&incl, &glued).unwrap(), &plot));
        }
    }

    #[test]
    fn mismatched_pieces_do_not_glue(w in polynomial_map(1, 1, 2), bump in prop_oneof![-2i64..=-1, 1i64..=2]) {
        let x = SmoothSet::representable(1);
        let cover = [interval((0, 1), (3, 2)), interval((1, 2), (2, 1))];
        let other = vec![&w[0] + &(&varjet::symexpr::Expr::int(bump) * &varjet::symexpr::Expr::base(0).pow(2))];
        prop_assert!(x.glue(&cover, &[PlotWitness::Map(w), PlotWitness::Map(other)]).is_err());
    }
}
