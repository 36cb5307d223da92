//! Randomized property suites over every module, reported per property.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde_json::json;

use crate::bicomplex::{ev_pullback, BigradedForm, DeRhamForm, SectionFamily};
use crate::holonomy::{compose, holonomy, reparametrize, reverse, ConnectionForm, GroupElement, Group, MatrixExpr, Path, C64};
use crate::jetcalc::{
    apply_prolonged, evaluate_on_section, jet_prolong_section, total_derivative_unchecked,
    tower_project, EvolutionaryField, Section,
};
use crate::random::Sampler;
use crate::smoothset::{
    jet_tower, prolongation_plot, tower_level_point, Concreteness, GlueError, PlotDomain, PlotWitness, PointSet, Relation,
    SmoothMap, SmoothSet,
};
use crate::symexpr::{parse_expression, BundleSignature, Expr, MultiIndex, Rational, Var};
use crate::variational::{
    euler_lagrange, euler_operator, first_variation_decompose, helmholtz_check, interior_source, is_divergence_symmetry,
    noether_current, Current, Lagrangian, SourceForm,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Sheaf,
    Jet,
    Bicomplex,
    Variational,
    Holonomy,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Sheaf, Suite::Jet, Suite::Bicomplex, Suite::Variational, Suite::Holonomy];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Sheaf => "sheaf",
            Suite::Jet => "jet",
            Suite::Bicomplex => "bicomplex",
            Suite::Variational => "variational",
            Suite::Holonomy => "holonomy",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Outcome of one property over its randomized trials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyResult {
    pub id: String,
    pub trials: usize,
    /// Descriptions of the first few failing trials.
    pub failures: Vec<String>,
    pub failed: usize,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let properties: Vec<_> = self
            .properties
            .iter()
            .map(|p| json!({ "id": p.id, "trials": p.trials, "failed": p.failed, "failures": p.failures, "passed": p.passed() }))
            .collect();
        json!({ "suite": self.suite, "seed": self.seed, "passed": self.passed(), "properties": properties })
    }
}

const KEPT_FAILURES: usize = 3;

#[derive(Default)]
struct Recorder {
    props: BTreeMap<String, PropertyResult>,
}

impl Recorder {
    fn check(&mut self, id: &str, ok: bool, detail: impl FnOnce() -> String) {
        let p = self.props.entry(id.to_string()).or_insert_with(|| PropertyResult {
            id: id.to_string(),
            trials: 0,
            failures: Vec::new(),
            failed: 0,
        });
        p.trials += 1;
        if !ok {
            p.failed += 1;
            if p.failures.len() < KEPT_FAILURES {
                p.failures.push(detail());
            }
        }
    }

    fn finish(self, suite: Suite, seed: u64) -> SuiteReport {
        SuiteReport { suite: suite.name().into(), seed, properties: self.props.into_values().collect() }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let mut sampler = Sampler::new(seed ^ (suite as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut rec = Recorder::default();
    match suite {
        Suite::Sheaf => sheaf_suite(&mut sampler, &mut rec),
        Suite::Jet => jet_suite(&mut sampler, &mut rec),
        Suite::Bicomplex => bicomplex_suite(&mut sampler, &mut rec),
        Suite::Variational => variational_suite(&mut sampler, &mut rec),
        Suite::Holonomy => holonomy_suite(&mut sampler, &mut rec),
    }
    rec.finish(suite, seed)
}

fn field_sig(base: &[&str], fields: &[&str]) -> BundleSignature {
    BundleSignature::new(base, fields, &[]).expect("valid names")
}

fn p(text: &str, sig: &BundleSignature) -> Expr {
    parse_expression(text, sig).expect("suite expression parses")
}

// ---- sheaf ----

fn random_form_on(s: &mut Sampler, dim: usize, degree: usize) -> DeRhamForm {
    let mut out = DeRhamForm::zero(dim, degree);
    if degree > dim {
        return out;
    }
    for _ in 0..s.int(1, 2) {
        let mut idx: Vec<usize> = (0..dim).collect();
        idx.shuffle(s.rng());
        idx.truncate(degree);
        let coeff = s.polynomial_map(dim, 1, 2).remove(0);
        out = out.add(&DeRhamForm::monomial(dim, idx, coeff).expect("in range")).expect("same degree");
    }
    out
}

fn random_plot(s: &mut Sampler, x: &SmoothSet, dim: usize) -> PlotWitness {
    match x {
        SmoothSet::Representable(n) => PlotWitness::Map(s.polynomial_map(dim, *n, 3)),
        SmoothSet::Product(a, b) => PlotWitness::pair(random_plot(s, a, dim), random_plot(s, b, dim)),
        SmoothSet::Exponential { source, target } => PlotWitness::ExponentialMap(s.polynomial_map(dim + source.dim(), target.dim(), 2)),
        SmoothSet::Sections { sig, window } => {
            PlotWitness::SectionFamily(s.polynomial_map(dim + window.dim(), sig.field_names().len(), 2))
        }
        SmoothSet::Forms(p) => PlotWitness::Form(random_form_on(s, dim, *p)),
        SmoothSet::Tower { levels, .. } => {
            let SmoothSet::Representable(width) = levels.last().expect("nonempty") else {
                return x.zero_plot(&PlotDomain::euclidean(dim));
            };
            let top = s.polynomial_map(dim, *width, 2);
            let widths: Vec<usize> =
                levels.iter().map(|l| if let SmoothSet::Representable(w) = l { *w } else { 0 }).collect();
            PlotWitness::TowerSequence(widths.iter().map(|w| PlotWitness::Map(top[..*w].to_vec())).collect())
        }
        SmoothSet::Quotient { cover, .. } => PlotWitness::QuotientLift(Box::new(random_plot(s, cover, dim))),
    }
}

fn integer_shift_relation() -> Relation {
    Relation::new("integer translation", |_, a, b| match (a, b) {
        (PlotWitness::Map(x), PlotWitness::Map(y)) if x.len() == y.len() => {
            x.iter().zip(y).all(|(u, v)| (u - v).as_constant().is_some_and(|c| c.is_integer()))
        }
        _ => false,
    })
}

fn combinators() -> Vec<(&'static str, SmoothSet)> {
    let line = PlotDomain::euclidean(1);
    let sig = field_sig(&["x"], &["u", "v"]);
    let jets = field_sig(&["x"], &["u"]);
    vec![
        ("representable", SmoothSet::representable(2)),
        ("product", SmoothSet::product(SmoothSet::representable(1), SmoothSet::representable(2))),
        ("exponential", SmoothSet::exponential(line.clone(), line.clone())),
        ("sections", SmoothSet::sections_sheaf(sig, line).expect("window matches")),
        ("forms1", SmoothSet::forms_sheaf(1)),
        ("forms2", SmoothSet::forms_sheaf(2)),
        ("jet_tower", jet_tower(&jets, 2)),
        ("quotient", SmoothSet::quotient(SmoothSet::representable(1), integer_shift_relation())),
    ]
}

fn sheaf_suite(s: &mut Sampler, rec: &mut Recorder) {
    for (name, x) in combinators() {
        for _ in 0..50 {
            let (du, dv, dw) = (s.int(1, 2) as usize, s.int(1, 2) as usize, s.int(1, 2) as usize);
            let (u, v, w) = (PlotDomain::euclidean(du), PlotDomain::euclidean(dv), PlotDomain::euclidean(dw));
            let phi = SmoothMap::new(u.clone(), v.clone(), s.polynomial_map(du, dv, 2)).expect("into R^n");
            let psi = SmoothMap::new(v, w.clone(), s.polynomial_map(dv, dw, 2)).expect("into R^n");
            let plot = random_plot(s, &x, dw);
            let ok = x.is_plot(&w, &plot) && x.check_functoriality(&phi, &psi, &plot) == Ok(true);
            rec.check(&format!("functoriality/{name}"), ok, || format!("{:?}", plot.to_json()));
            let pulled = x.restrict(&phi.then(&psi).expect("composable"), &plot);
            rec.check(&format!("restriction_preserves_plots/{name}"), pulled.is_ok_and(|r| x.is_plot(&u, &r)), || {
                format!("{:?}", plot.to_json())
            });
        }
        for _ in 0..10 {
            let cover = [interval(0, 1, 6, 5), interval(4, 5, 2, 1)];
            let plot = random_plot(s, &x, 1);
            let round_trip = x.glue(&cover, &[plot.clone(), plot.clone()]).is_ok_and(|(union, glued)| {
                cover.iter().all(|piece| {
                    let incl = SmoothMap::inclusion(piece.clone(), union.clone()).expect("piece of the union");
                    x.restrict(&incl, &glued).is_ok_and(|r| x.same_plot(piece, &r, &plot))
                })
            });
            rec.check(&format!("glue_restrict_round_trip/{name}"), round_trip, || format!("{:?}", plot.to_json()));
        }
        if x.points().concreteness == Concreteness::Concrete {
            for _ in 0..10 {
                let point = random_plot(s, &x, 0);
                let dim = s.int(1, 2) as usize;
                let u = PlotDomain::euclidean(dim);
                let constant = x.restrict(&SmoothMap::terminal(u.clone()), &point);
                rec.check(&format!("constant_maps_are_plots/{name}"), constant.is_ok_and(|c| x.is_plot(&u, &c)), || {
                    format!("{:?}", point.to_json())
                });
            }
        }
    }

    let line = SmoothSet::representable(1);
    let cover = [interval(0, 1, 6, 5), interval(4, 5, 2, 1)];
    for _ in 0..10 {
        let a = s.polynomial_map(1, 1, 3).remove(0);
        let b = &a + &(&s.coefficient() * &Expr::base(0).pow(3));
        let err = line.glue(&cover, &[PlotWitness::Map(vec![a]), PlotWitness::Map(vec![b])]);
        let ok = matches!(err, Err(GlueError::Incompatible { i: 0, j: 1, point: Some(ref q) }) if q[0] > 0.8 && q[0] < 1.2);
        rec.check("glue_detects_incompatible_overlap", ok, || format!("{err:?}"));
    }

    for p in 1..=3 {
        let forms = SmoothSet::forms_sheaf(p);
        let report = forms.points();
        let ok = match (&report.points, &report.concreteness) {
            (PointSet::Finite(points), Concreteness::NonConcrete { domain, witness, same_points_as }) => {
                points.len() == 1
                    && forms.is_point(&points[0])
                    && forms.is_plot(domain, witness)
                    && forms.is_plot(domain, same_points_as)
                    && witness != same_points_as
            }
            _ => false,
        };
        rec.check("forms_single_point_non_concrete", ok, || format!("p = {p}"));
    }
}

fn interval(a: i64, b: i64, c: i64, d: i64) -> PlotDomain {
    PlotDomain::interval(Rational::new(a.into(), b.into()), Rational::new(c.into(), d.into())).expect("nonempty")
}

// ---- jet ----

fn random_rational(s: &mut Sampler) -> Rational {
    Rational::new(s.int(-12, 12).into(), s.int(1, 4).into())
}

fn jet_suite(s: &mut Sampler, rec: &mut Recorder) {
    let sigs = [field_sig(&["x"], &["u"]), field_sig(&["t", "x"], &["u"]), field_sig(&["t", "x"], &["u", "v"])];
    for _ in 0..100 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let m = sig.base_dim();
        let e = s.jet_polynomial(&sig, 2, 3, true);
        let section = Section::new(s.polynomial_map(m, sig.field_names().len(), 3), &sig).expect("base only");
        let point: Vec<Rational> = (0..m).map(|_| random_rational(s)).collect();
        let mu = s.int(0, m as i64 - 1) as usize;
        let lhs = evaluate_on_section(&total_derivative_unchecked(&e, mu), &section, &point, &BTreeMap::new());
        let pulled = section.pull_back(&e).expect("polynomial");
        let at: BTreeMap<Var, f64> = point.iter().enumerate().map(|(i, r)| (Var::Base(i), r.to_f64_lossy())).collect();
        let rhs = crate::symexpr::evaluate(&pulled.partial(&Var::Base(mu)), &at, &BTreeMap::new());
        let ok = match (lhs, rhs) {
            (Ok(a), Ok(b)) => (a - b).abs() <= 1e-8 * (1.0 + b.abs()),
            _ => false,
        };
        rec.check("evaluation_commutes_with_total_derivative", ok, || e.to_text(&sig));
    }
    for _ in 0..50 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let m = sig.base_dim();
        let e = s.jet_polynomial(&sig, 2, 3, true);
        let (mu, nu) = (s.int(0, m as i64 - 1) as usize, s.int(0, m as i64 - 1) as usize);
        let a = total_derivative_unchecked(&total_derivative_unchecked(&e, mu), nu);
        let b = total_derivative_unchecked(&total_derivative_unchecked(&e, nu), mu);
        rec.check("total_derivatives_commute", a == b, || e.to_text(&sig));

        let q = EvolutionaryField::new(
            (0..sig.field_names().len()).map(|_| s.jet_polynomial(&sig, 1, 2, true)).collect(),
            &sig,
        )
        .expect("one per field");
        let f = s.jet_polynomial(&sig, 2, 2, true);
        let lhs = apply_prolonged(&q, &total_derivative_unchecked(&f, mu));
        let rhs = total_derivative_unchecked(&apply_prolonged(&q, &f), mu);
        rec.check("prolonged_fields_commute_with_total_derivative", lhs == rhs, || f.to_text(&sig));

        let de = total_derivative_unchecked(&e, mu);
        rec.check("total_derivative_raises_order_by_at_most_one", de.order() <= e.order() + 1, || e.to_text(&sig));
    }
    for _ in 0..30 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let m = sig.base_dim();
        let section = Section::new(s.polynomial_map(m, sig.field_names().len(), 4), &sig).expect("base only");
        let point: Vec<Rational> = (0..m).map(|_| random_rational(s)).collect();
        let top = jet_prolong_section(&section, &point, 3, &sig).expect("polynomial");
        let chained = tower_project(&tower_project(&top, 2).expect("l <= k"), 1).expect("l <= k");
        let direct = tower_project(&top, 1).expect("l <= k");
        let prolonged = jet_prolong_section(&section, &point, 2, &sig).expect("polynomial");
        let ok = chained == direct && tower_project(&top, 2).as_ref() == Ok(&prolonged) && tower_project(&top, 3).as_ref() == Ok(&top);
        rec.check("tower_projection_functoriality", ok, || format!("{:?}", section.components()));

        let tower = jet_tower(&sig, 3);
        let plot = prolongation_plot(&sig, section.components(), 3);
        let on_tower = tower.is_plot(&PlotDomain::euclidean(m), &plot);
        let PlotWitness::TowerSequence(levels) = &plot else { unreachable!("tower plot") };
        let consistent = (0..=3u32).all(|k| {
            tower_level_point(&sig, &levels[k as usize], k, &point)
                .is_some_and(|pt| tower_project(&top, k).is_ok_and(|proj| proj == pt))
        });
        rec.check("tower_plots_commute_with_projection", on_tower && consistent, || {
            format!("{:?}", section.components())
        });
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for Rational {
    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

// ---- bicomplex ----

fn bicomplex_suite(s: &mut Sampler, rec: &mut Recorder) {
    let sigs = [field_sig(&["x"], &["u"]), field_sig(&["t", "x"], &["u"]), field_sig(&["x", "y"], &["u", "v"])];
    for _ in 0..200 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let m = sig.base_dim();
        let (sd, rd) = (s.int(0, 2) as usize, s.int(0, m as i64) as usize);
        let omega = s.form(&sig, sd, rd, 2);
        let dh = omega.d_horizontal();
        let dv = omega.d_vertical();
        let ok = dh.d_horizontal().is_zero()
            && dv.d_vertical().is_zero()
            && dh.d_vertical().add(&dv.d_horizontal()).is_ok_and(|f| f.is_zero());
        rec.check("differentials_square_to_zero_and_anticommute", ok, || omega.to_text(&sig));
        let bidegrees = dh.bidegree() == (sd, rd + 1) && dv.bidegree() == (sd + 1, rd);
        rec.check("differentials_shift_bidegree", bidegrees, || omega.to_text(&sig));
    }
    for _ in 0..50 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let m = sig.base_dim();
        let (a_s, a_r) = (s.int(0, 1) as usize, s.int(0, 1).min(m as i64) as usize);
        let a = s.form(&sig, a_s, a_r, 1);
        let (b_s, b_r) = (s.int(0, 1) as usize, s.int(0, 1).min(m as i64) as usize);
        let b = s.form(&sig, b_s, b_r, 1);
        let sign = if a.degree() % 2 == 0 { Expr::one() } else { Expr::int(-1) };
        for (label, d) in [("horizontal", BigradedForm::d_horizontal as fn(&BigradedForm) -> BigradedForm), ("vertical", BigradedForm::d_vertical)] {
            let lhs = d(&a.wedge(&b).expect("same base"));
            let rhs = d(&a).wedge(&b).and_then(|x| x.add(&a.wedge(&d(&b)).expect("same base").scale(&sign)));
            rec.check(&format!("graded_leibniz/{label}"), rhs.is_ok_and(|r| r == lhs), || {
                format!("{} ; {}", a.to_text(&sig), b.to_text(&sig))
            });
        }
        let swapped = b.wedge(&a).expect("same base");
        let sign = if (a.degree() * b.degree()) % 2 == 0 { Expr::one() } else { Expr::int(-1) };
        rec.check("wedge_graded_commutative", a.wedge(&b).expect("same base") == swapped.scale(&sign), || {
            format!("{} ; {}", a.to_text(&sig), b.to_text(&sig))
        });
    }
    for _ in 0..50 {
        let sig = sigs[..2].choose(s.rng()).expect("nonempty").clone();
        let m = sig.base_dim();
        let (sd, rd) = (s.int(0, 2) as usize, s.int(0, m as i64 - 1) as usize);
        let omega = s.form(&sig, sd, rd, 1);
        let family = SectionFamily::new(2, &sig, s.polynomial_map(2 + m, sig.field_names().len(), 3)).expect("polynomial");
        let check = || -> Option<bool> {
            let pulled = ev_pullback(&omega, &family).ok()?;
            let via_h = ev_pullback(&omega.d_horizontal(), &family).ok()?;
            let via_v = ev_pullback(&omega.d_vertical(), &family).ok()?;
            let split_ok = pulled.split_by(2).keys().all(|&(e, x)| (e, x) == (sd, rd));
            Some(pulled.d() == via_h.add(&via_v).ok()? && split_ok)
        };
        rec.check("pullback_splits_exterior_derivative", check() == Some(true), || omega.to_text(&sig));
    }
}

// ---- variational ----

fn random_lagrangian(s: &mut Sampler, sig: &BundleSignature, with_base: bool) -> Lagrangian {
    Lagrangian::new(s.jet_polynomial(sig, 2, 3, with_base))
}

fn variational_suite(s: &mut Sampler, rec: &mut Recorder) {
    let sigs = [field_sig(&["x"], &["u"]), field_sig(&["t", "x"], &["u"]), field_sig(&["t", "x"], &["u", "v"])];
    for _ in 0..100 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let current = Current { components: (0..sig.base_dim()).map(|_| s.jet_polynomial(&sig, 2, 3, true)).collect() };
        rec.check("euler_operator_annihilates_divergences", euler_operator(&current.divergence(), &sig).is_zero(), || {
            format!("{:?}", current.to_json(&sig))
        });
    }
    for _ in 0..50 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let l = random_lagrangian(s, &sig, true);
        rec.check("euler_lagrange_is_variational", helmholtz_check(&euler_lagrange(&l, &sig), &sig).variational, || {
            l.density.to_text(&sig)
        });
    }
    let st = field_sig(&["x", "t"], &["u"]);
    let transport = SourceForm { components: vec![p("u_t - u*u_x", &st)] };
    rec.check("transport_equation_is_not_variational", !helmholtz_check(&transport, &st).variational, String::new);

    for _ in 0..30 {
        let sig = sigs.choose(s.rng()).expect("nonempty").clone();
        let l = random_lagrangian(s, &sig, true);
        let q = EvolutionaryField::new(
            (0..sig.field_names().len()).map(|_| s.jet_polynomial(&sig, 1, 2, true)).collect(),
            &sig,
        )
        .expect("one per field");
        let (interior, boundary) = first_variation_decompose(&l, &q, &sig);
        let e = euler_lagrange(&l, &sig);
        let qe: Expr = q.characteristics().iter().zip(&e.components).map(|(a, b)| a * b).sum();
        let residual = &(&apply_prolonged(&q, &l.density) - &interior) - &boundary.divergence();
        rec.check("first_variation_identity", residual.is_zero() && interior == qe, || l.density.to_text(&sig));

        let c = Expr::int(s.int(-3, 3));
        let shift = |f: &Expr| {
            f.substitute(&mut |v| match v {
                Var::Jet(j) if j.index.is_zero() && j.field == 0 => Some(&Expr::var(v.clone()) + &c),
                _ => None,
            })
            .expect("polynomial")
        };
        let shifted = euler_lagrange(&Lagrangian::new(shift(&l.density)), &sig);
        let natural = shifted.components.iter().zip(&e.components).all(|(a, b)| *a == shift(b));
        rec.check("euler_lagrange_commutes_with_field_shift", natural, || l.density.to_text(&sig));

        let reduced = interior_source(&l.as_form(&sig).d_vertical(), &sig);
        rec.check("vertical_differential_reduces_to_euler_lagrange", reduced.as_ref() == Some(&e), || {
            l.density.to_text(&sig)
        });
    }

    let wave_sig = field_sig(&["t", "x"], &["u"]);
    let wave = Lagrangian::new(p("1/2*(u_t^2 - u_x^2)", &wave_sig));
    let time = EvolutionaryField::new(vec![p("u_t", &wave_sig)], &wave_sig).expect("one field");
    let ok = noether_current(&wave, &time, &wave_sig).is_ok_and(|j| {
        j.components == vec![p("1/2*u_t^2 + 1/2*u_x^2", &wave_sig), p("-u_t*u_x", &wave_sig)]
            && noether_identity_holds(&wave, &time, &j, &wave_sig)
    });
    rec.check("noether/wave_time_translation", ok, String::new);

    for _ in 0..20 {
        let (l, q, sig) = random_symmetric_pair(s);
        let verdict = is_divergence_symmetry(&l, &q, &sig);
        let ok = verdict.is_symmetry
            && noether_current(&l, &q, &sig).is_ok_and(|j| noether_identity_holds(&l, &q, &j, &sig));
        rec.check("noether/randomized_symmetries", ok, || l.density.to_text(&sig));
    }
}

fn noether_identity_holds(l: &Lagrangian, q: &EvolutionaryField, j: &Current, sig: &BundleSignature) -> bool {
    let e = euler_lagrange(l, sig);
    let qe: Expr = q.characteristics().iter().zip(&e.components).map(|(a, b)| a * b).sum();
    (&j.divergence() + &qe).is_zero()
}

/// A Lagrangian together with a known divergence symmetry: translations of
/// autonomous densities, shifts of fields that enter only through
/// derivatives, and either of those with a total divergence added to `L`.
pub fn random_symmetric_pair(s: &mut Sampler) -> (Lagrangian, EvolutionaryField, BundleSignature) {
    let sig = if s.int(0, 1) == 0 { field_sig(&["x"], &["u"]) } else { field_sig(&["t", "x"], &["u"]) };
    let m = sig.base_dim();
    let kind = s.int(0, 2);
    let (density, q) = match kind {
        0 => {
            let mu = s.int(0, m as i64 - 1) as usize;
            let l = s.jet_polynomial(&sig, 2, 3, false);
            (l, Expr::jet(0, MultiIndex::unit(m, mu)))
        }
        1 => {
            let derivs: Vec<Expr> =
                sig.jet_coordinates(2).into_iter().filter(|j| j.order() > 0).map(|j| Expr::var(Var::Jet(j))).collect();
            let mut atoms = derivs;
            atoms.extend(Sampler::base_atoms(0, m));
            let terms = s.int(1, 4) as usize;
            (s.polynomial(&atoms, 3, terms), Expr::one())
        }
        _ => {
            let mu = s.int(0, m as i64 - 1) as usize;
            let base = s.jet_polynomial(&sig, 1, 3, false);
            let extra = total_derivative_unchecked(&s.jet_polynomial(&sig, 1, 2, false), s.int(0, m as i64 - 1) as usize);
            (&base + &extra, Expr::jet(0, MultiIndex::unit(m, mu)))
        }
    };
    let q = EvolutionaryField::new(vec![q], &sig).expect("one field");
    (Lagrangian::new(density), q, sig)
}

// ---- holonomy ----

/// `∫_0^1 f` by 64-panel Gauss–Legendre (5 nodes per panel).
pub fn gauss_legendre(f: impl Fn(f64) -> f64) -> f64 {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] =
        [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let panels = 64;
    let h = 1.0 / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = (k as f64 + 0.5) * h;
            NODES.iter().zip(WEIGHTS).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn small_polynomial(s: &mut Sampler) -> Expr {
    let atoms = Sampler::base_atoms(0, 2);
    let terms = s.int(1, 3) as usize;
    s.polynomial(&atoms, 2, terms).scale(&Rational::new(1.into(), 2.into()))
}

/// `A_μ = i (a_μ σ_x + b_μ σ_y + c_μ σ_z)` with random polynomial `a, b, c`.
pub fn random_su2(s: &mut Sampler) -> ConnectionForm {
    let components = (0..2)
        .map(|_| {
            let (a, b, c) = (small_polynomial(s), small_polynomial(s), small_polynomial(s));
            let re = vec![Expr::zero(), b.clone(), -b, Expr::zero()];
            let im = vec![c.clone(), a.clone(), a, -c];
            MatrixExpr::new(2, re, im).expect("2x2")
        })
        .collect();
    ConnectionForm::new(Group::SU2, PlotDomain::euclidean(2), components).expect("traceless anti-Hermitian")
}

/// `A = i (a dx + b dy)` with random polynomial `a, b`; returns `(A, a, b)`.
pub fn random_u1(s: &mut Sampler) -> (ConnectionForm, Expr, Expr) {
    let (a, b) = (small_polynomial(s), small_polynomial(s));
    let comp = |e: &Expr| MatrixExpr::new(1, vec![Expr::zero()], vec![e.clone()]).expect("1x1");
    let conn = ConnectionForm::new(Group::U1, PlotDomain::euclidean(2), vec![comp(&a), comp(&b)]).expect("imaginary");
    (conn, a, b)
}

/// A polynomial path in the unit square region with sitting instants.
pub fn random_path(s: &mut Sampler, start: [f64; 2]) -> Path {
    let chart = crate::holonomy::path_chart();
    let comps: Vec<Expr> = start
        .iter()
        .map(|x0| {
            let x0 = Expr::constant(Rational::from_float(*x0).expect("finite"));
            let c1 = Expr::ratio(s.int(-4, 4), 4);
            let c2 = Expr::ratio(s.int(-4, 4), 4);
            &(&x0 + &(&c1 * &p("s", &chart))) + &(&c2 * &p("s^2", &chart))
        })
        .collect();
    Path::with_sitting_instants(comps).expect("path in s")
}

fn holonomy_suite(s: &mut Sampler, rec: &mut Recorder) {
    const STEPS: usize = 4096;
    let chart = crate::holonomy::path_chart();
    for _ in 0..10 {
        let (conn, a, b) = random_u1(s);
        let path = { let start = [s.unit(), s.unit()]; random_path(s, start) };
        let phase = gauss_legendre(|t| {
            let (pos, vel) = path.at(t);
            let at = |e: &Expr| e.eval(&|v| if let Var::Base(i) = v { pos.get(*i).copied() } else { None }, &|_| None).unwrap_or(f64::NAN);
            at(&a) * vel[0] + at(&b) * vel[1]
        });
        let expected = C64::new(0.0, -phase).exp();
        let ok = holonomy(&conn, &path, STEPS).is_ok_and(|h| (h.matrix[(0, 0)] - expected).norm() < 1e-8);
        rec.check("u1_matches_line_integral", ok, || format!("{:?}", path.to_json()));
    }
    for _ in 0..10 {
        let conn = random_su2(s);
        let first = { let start = [s.unit(), s.unit()]; random_path(s, start) };
        let end = first.end();
        let second = random_path(s, [end[0], end[1]]);
        let composite = compose(&second, &first).expect("endpoints match");
        let check = || -> Option<(f64, f64, f64)> {
            let h1 = holonomy(&conn, &first, STEPS).ok()?;
            let h2 = holonomy(&conn, &second, STEPS).ok()?;
            let h = holonomy(&conn, &composite, STEPS).ok()?;
            let back = holonomy(&conn, &reverse(&first), STEPS).ok()?;
            let rho = reparametrize(&first, &p("s^2", &chart)).ok()?;
            let moved = holonomy(&conn, &rho, STEPS).ok()?;
            Some((
                h.distance(&h2.mul(&h1)),
                back.mul(&h1).distance(&GroupElement::identity(Group::SU2)),
                moved.distance(&h1),
            ))
        };
        let result = check();
        rec.check("composition_law", result.is_some_and(|r| r.0 < 1e-7), || format!("{result:?}"));
        rec.check("inverse_law", result.is_some_and(|r| r.1 < 1e-7), || format!("{result:?}"));
        rec.check("reparametrization_invariance", result.is_some_and(|r| r.2 < 1e-7), || format!("{result:?}"));
    }
    let conn = random_su2(s);
    let still = Path::with_sitting_instants(vec![Expr::ratio(1, 3), Expr::ratio(1, 2)]).expect("constant path");
    let ok = holonomy(&conn, &still, STEPS).is_ok_and(|h| h.distance(&GroupElement::identity(Group::SU2)) == 0.0);
    rec.check("constant_path_gives_identity", ok, String::new);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        assert!((gauss_legendre(|x| x.powi(7)) - 0.125).abs() < 1e-14);
        assert!((gauss_legendre(f64::sin) - (1.0 - 1f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
    }

    #[test]
    fn symmetric_pairs_are_symmetries() {
        let mut s = Sampler::new(5);
        for _ in 0..10 {
            let (l, q, sig) = random_symmetric_pair(&mut s);
            assert!(is_divergence_symmetry(&l, &q, &sig).is_symmetry, "{}", l.density.to_text(&sig));
        }
    }

    #[test]
    fn variational_suite_passes() {
        let report = run_suite(Suite::Variational, 1);
        assert!(report.passed(), "{}", report.to_json());
    }
}
