//! Acceptance criteria 1-9, one PASS/FAIL line each.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use varjet::bicomplex::{ev_pullback, SectionFamily};
use varjet::holonomy::{
    compose, holonomy, path_chart, reparametrize, reverse, thin_invariance_probe, ConnectionForm, Group, GroupElement,
    MatrixExpr, Path, C64,
};
use varjet::jetcalc::{
    evaluate_on_section, jet_prolong_section, total_derivative, tower_project, EvolutionaryField, Section,
};
use varjet::random::Sampler;
use varjet::smoothset::PlotDomain;
use varjet::suites::{random_path, random_su2, random_symmetric_pair, random_u1, run_suite, Suite};
use varjet::symexpr::{evaluate, parse_expression, BundleSignature, Expr, Rational, Var};
use varjet::variational::{
    euler_lagrange, euler_operator, helmholtz_check, noether_current, Current, Lagrangian, SourceForm,
};

const SEED: u64 = 20_240_917;
const HOLONOMY_STEPS: usize = 4096;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn sig(base: &[&str], fields: &[&str], params: &[&str]) -> BundleSignature {
    BundleSignature::new(base, fields, params).unwrap()
}

fn expr(text: &str, sig: &BundleSignature) -> Expr {
    parse_expression(text, sig).unwrap()
}

// Composite Gauss-Legendre on [0, 1] with 5 nodes per panel.
fn nodes(panels: usize) -> Vec<(f64, f64)> {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] =
        [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = 1.0 / panels as f64;
    let mut out = Vec::new();
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// `∫_{[0,1]^dim} f`.
fn integrate(dim: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let n = nodes(16);
    match dim {
        1 => n.iter().map(|(x, w)| w * f(&[*x])).sum(),
        2 => n.iter().flat_map(|(a, wa)| n.iter().map(move |(b, wb)| wa * wb * f(&[*a, *b]))).sum(),
        _ => unreachable!("windows of dimension 1 or 2"),
    }
}

fn eval_base(e: &Expr, p: &[f64], params: &BTreeMap<String, f64>) -> f64 {
    let at: BTreeMap<Var, f64> = p.iter().enumerate().map(|(i, v)| (Var::Base(i), *v)).collect();
    evaluate(e, &at, params).unwrap()
}

/// `256 x^4 (1-x)^4` in each direction: vanishes to fourth order on the boundary.
fn bump(dim: usize) -> Expr {
    (0..dim).fold(Expr::one(), |acc, i| {
        let x = Expr::base(i);
        let one_minus = &Expr::one() - &x;
        &acc * &(&Expr::int(256) * &(&x.pow(4) * &one_minus.pow(4)))
    })
}

/// `∫ F[φ + εψ]` for a density `F`, with `φ, ψ` polynomial in the base.
fn action(f: &Expr, sig: &BundleSignature, phi: &Expr, psi: &Expr, eps: &Rational, params: &BTreeMap<String, f64>) -> f64 {
    let moved = phi + &psi.scale(eps);
    let pulled = Section::new(vec![moved], sig).unwrap().pull_back(f).unwrap();
    integrate(sig.base_dim(), &|p| eval_base(&pulled, p, params))
}

fn on_section(f: &Expr, sig: &BundleSignature, phi: &Expr) -> Expr {
    Section::new(vec![phi.clone()], sig).unwrap().pull_back(f).unwrap()
}

fn criterion_1(s: &mut Sampler) -> Verdict {
    let sigs = [sig(&["x"], &["u"], &[]), sig(&["t", "x"], &["u"], &[]), sig(&["x", "y"], &["u", "v"], &[])];
    let start = Instant::now();
    let mut failures = 0;
    let mut cases = 0;
    for k in 0..200 {
        let sig = &sigs[k % sigs.len()];
        let m = sig.base_dim();
        let (sd, rd) = (s.int(0, 2) as usize, s.int(0, m as i64) as usize);
        let w = s.form(sig, sd, rd, 2);
        let ok = w.d_horizontal().d_horizontal().is_zero()
            && w.d_vertical().d_vertical().is_zero()
            && w.d_horizontal().d_vertical().add(&w.d_vertical().d_horizontal()).unwrap().is_zero();
        failures += usize::from(!ok);
        cases += 1;
    }
    let took = start.elapsed();
    verdict(failures == 0 && took < Duration::from_secs(30), format!("{}/{cases} forms, {:.2} s", cases - failures, took.as_secs_f64()))
}

fn criterion_2(s: &mut Sampler) -> Verdict {
    let sigs = [sig(&["x"], &["u"], &[]), sig(&["t", "x"], &["u"], &[])];
    let mut good = 0;
    for k in 0..50 {
        let sig = &sigs[k % 2];
        let m = sig.base_dim();
        let (sd, rd) = (s.int(0, 2) as usize, s.int(0, m as i64) as usize);
        let w = s.form(sig, sd, rd, 1);
        let family = SectionFamily::new(2, sig, s.polynomial_map(2 + m, 1, 3)).unwrap();
        let lhs = ev_pullback(&w, &family).unwrap().d();
        let rhs = ev_pullback(&w.d_horizontal(), &family).unwrap().add(&ev_pullback(&w.d_vertical(), &family).unwrap()).unwrap();
        good += usize::from(lhs == rhs);
    }
    verdict(good == 50, format!("{good}/50 (form, family) pairs"))
}

fn criterion_3(s: &mut Sampler) -> Verdict {
    let x = sig(&["x"], &["u"], &[]);
    let tx = sig(&["t", "x"], &["u"], &["m"]);
    let params: BTreeMap<String, f64> = [("m".to_string(), 1.5)].into();
    let cases = [
        ("1/2*u_x^2", &x, "-u_xx"),
        ("1/2*u_xx^2", &x, "u_xxxx"),
        ("1/2*(u_t^2 - u_x^2)", &tx, "-u_tt + u_xx"),
        ("1/2*(u_t^2 - u_x^2 - m^2*u^2)", &tx, "-m^2*u - u_tt + u_xx"),
    ];
    let eps = Rational::new(1.into(), 1000.into());
    let mut worst: f64 = 0.0;
    let mut symbolic_ok = true;
    for (density, sig, expected) in cases {
        let l = Lagrangian::new(expr(density, sig));
        let e = euler_lagrange(&l, sig);
        symbolic_ok &= e.components[0] == expr(expected, sig);
        let m = sig.base_dim();
        let psi = bump(m);
        for _ in 0..3 {
            let phi = s.polynomial_map(m, 1, 3).remove(0);
            let plus = action(&l.density, sig, &phi, &psi, &eps, &params);
            let minus = action(&l.density, sig, &phi, &psi, &-eps.clone(), &params);
            let numeric = (plus - minus) / (2.0 * 1e-3);
            let e_phi = on_section(&e.components[0], sig, &phi);
            let weak = integrate(m, &|p| eval_base(&e_phi, p, &params) * eval_base(&psi, p, &params));
            worst = worst.max((numeric - weak).abs() / weak.abs().max(1.0));
        }
    }
    verdict(symbolic_ok && worst < 1e-6, format!("4 Lagrangians x 3 sections, max deviation {worst:.2e}"))
}

fn criterion_4(s: &mut Sampler) -> Verdict {
    let sigs = [sig(&["x"], &["u"], &[]), sig(&["t", "x"], &["u"], &[]), sig(&["t", "x"], &["u", "v"], &[])];
    let mut annihilated = 0;
    for k in 0..100 {
        let sig = &sigs[k % 3];
        let p = Current { components: (0..sig.base_dim()).map(|_| s.jet_polynomial(sig, 2, 3, true)).collect() };
        annihilated += usize::from(euler_operator(&p.divergence(), sig).is_zero());
    }
    let mut variational = 0;
    for k in 0..50 {
        let sig = &sigs[k % 3];
        let l = Lagrangian::new(s.jet_polynomial(sig, 2, 3, true));
        variational += usize::from(helmholtz_check(&euler_lagrange(&l, sig), sig).variational);
    }
    let tx = sig(&["t", "x"], &["u"], &[]);
    let x = sig(&["x"], &["u"], &[]);
    let transport = SourceForm { components: vec![expr("u_t - u*u_x", &tx)] };
    let rejected = !helmholtz_check(&transport, &tx).variational;
    let accepted = helmholtz_check(&SourceForm { components: vec![expr("u_xx + u^2", &x)] }, &x).variational;

    // Numerical asymmetry of the linearization of the transport operator.
    let phi = expr("1 + t*x", &tx);
    let psi1 = bump(2);
    let psi2 = &bump(2) * &Expr::base(1);
    let no_params = BTreeMap::new();
    let eps = Rational::new(1.into(), 1000.into());
    let linearized = |psi: &Expr, other: &Expr| {
        let f = &transport.components[0];
        let moved = |e: &Rational| on_section(f, &tx, &(&phi + &psi.scale(e)));
        let (plus, minus) = (moved(&eps), moved(&-eps.clone()));
        integrate(2, &|p| {
            (eval_base(&plus, p, &no_params) - eval_base(&minus, p, &no_params)) / 2e-3 * eval_base(other, p, &no_params)
        })
    };
    let gap = (linearized(&psi2, &psi1) - linearized(&psi1, &psi2)).abs();
    verdict(
        annihilated == 100 && variational == 50 && rejected && accepted && gap > 1e-3,
        format!(
            "divergences {annihilated}/100, E(L) variational {variational}/50, transport rejected {rejected} (asymmetry gap {gap:.3e}), u_xx + u^2 accepted {accepted}"
        ),
    )
}

fn criterion_5(s: &mut Sampler) -> Verdict {
    let tx = sig(&["t", "x"], &["u"], &[]);
    let identity = |l: &Lagrangian, q: &EvolutionaryField, sig: &BundleSignature| {
        noether_current(l, q, sig).is_ok_and(|j| {
            let e = euler_lagrange(l, sig);
            let qe: Expr = q.characteristics().iter().zip(&e.components).map(|(a, b)| a * b).sum();
            (&j.divergence() + &qe).is_zero()
        })
    };
    let wave = Lagrangian::new(expr("1/2*(u_t^2 - u_x^2)", &tx));
    let time = EvolutionaryField::new(vec![expr("u_t", &tx)], &tx).unwrap();
    let energy = noether_current(&wave, &time, &tx).is_ok_and(|j| {
        j.components == vec![expr("1/2*u_t^2 + 1/2*u_x^2", &tx), expr("-u_t*u_x", &tx)]
    });
    let wave_ok = energy && identity(&wave, &time, &tx);
    let mut good = 0;
    for _ in 0..20 {
        let (l, q, sig) = random_symmetric_pair(s);
        good += usize::from(identity(&l, &q, &sig));
    }
    verdict(wave_ok && good == 20, format!("wave energy current {wave_ok}, randomized {good}/20"))
}

fn criterion_6(s: &mut Sampler) -> Verdict {
    let sigs = [sig(&["x"], &["u"], &[]), sig(&["t", "x"], &["u"], &[]), sig(&["t", "x"], &["u", "v"], &[])];
    let no_params = BTreeMap::new();
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    for k in 0..100 {
        let sig = &sigs[k % 3];
        let m = sig.base_dim();
        let e = s.jet_polynomial(sig, 2, 3, true);
        let section = Section::new(s.polynomial_map(m, sig.field_names().len(), 3), sig).unwrap();
        let fractions: Vec<(i64, i64)> = (0..m).map(|_| (s.int(-12, 12), s.int(1, 4))).collect();
        let point: Vec<Rational> = fractions.iter().map(|&(p, q)| Rational::new(p.into(), q.into())).collect();
        let pf: Vec<f64> = fractions.iter().map(|&(p, q)| p as f64 / q as f64).collect();
        let mu = s.int(0, m as i64 - 1) as usize;
        let lhs = evaluate_on_section(&total_derivative(&e, mu, sig).unwrap(), &section, &point, &no_params);
        let rhs = eval_base(&section.pull_back(&e).unwrap().partial(&Var::Base(mu)), &pf, &no_params);
        match lhs {
            Ok(v) => worst = worst.max((v - rhs).abs() / (1.0 + rhs.abs())),
            Err(_) => errors += 1,
        }
    }
    let mut functorial = 0;
    for k in 0..30 {
        let sig = &sigs[k % 3];
        let m = sig.base_dim();
        let section = Section::new(s.polynomial_map(m, sig.field_names().len(), 4), sig).unwrap();
        let point: Vec<Rational> = (0..m).map(|_| Rational::new(s.int(-6, 6).into(), 1.into())).collect();
        let top = jet_prolong_section(&section, &point, 3, sig).unwrap();
        let ok = (0..=3).all(|k| {
            (0..=k).all(|l| {
                let via = tower_project(&tower_project(&top, k).unwrap(), l).unwrap();
                via == tower_project(&top, l).unwrap() && via == jet_prolong_section(&section, &point, l, sig).unwrap()
            })
        });
        functorial += usize::from(ok);
    }
    verdict(
        errors == 0 && worst <= 1e-8 && functorial == 30,
        format!("100 triples, max relative deviation {worst:.2e}; tower functoriality {functorial}/30"),
    )
}

fn criterion_7() -> Verdict {
    let report = run_suite(Suite::Sheaf, SEED);
    let failed: Vec<&str> = report.properties.iter().filter(|p| !p.passed()).map(|p| p.id.as_str()).collect();
    let functoriality: Vec<_> = report.properties.iter().filter(|p| p.id.starts_with("functoriality/")).collect();
    let per_combinator = functoriality.iter().all(|p| p.trials == 50);
    let has = |id: &str| report.properties.iter().any(|p| p.id.starts_with(id) && p.passed());
    let ok = failed.is_empty()
        && per_combinator
        && functoriality.len() >= 7
        && has("glue_restrict_round_trip/")
        && has("forms_single_point_non_concrete");
    verdict(
        ok,
        format!(
            "{} properties over {} combinators, failing: {}",
            report.properties.len(),
            functoriality.len(),
            if failed.is_empty() { "none".to_string() } else { failed.join(", ") }
        ),
    )
}

// The sitting-instant collars make the integrand steep; 16 panels is not converged here.
const PHASE_PANELS: usize = 256;
fn gl_phase(path: &Path, a: &Expr, b: &Expr) -> f64 {
    let none = BTreeMap::new();
    nodes(PHASE_PANELS)
        .into_iter()
        .map(|(s, w)| {
            let (pos, vel) = path.at(s);
            w * (eval_base(a, &pos, &none) * vel[0] + eval_base(b, &pos, &none) * vel[1])
        })
        .sum()
}

fn criterion_8(s: &mut Sampler) -> Verdict {
    let steps = HOLONOMY_STEPS;
    let chart = path_chart();
    let plane = sig(&["x", "y"], &["u"], &[]);

    // A = i k dx along a straight segment of length L.
    let mut closed_form: f64 = 0.0;
    for (k, len) in [(3i64, 2i64), (-2, 1), (5, 3)] {
        let a = MatrixExpr::parse(1, "0", &k.to_string(), &plane).unwrap();
        let conn = ConnectionForm::new(Group::U1, PlotDomain::euclidean(2), vec![a, MatrixExpr::zero(1)]).unwrap();
        let path = Path::with_sitting_instants(vec![expr(&format!("{len}*s"), &chart), Expr::zero()]).unwrap();
        let h = holonomy(&conn, &path, steps).unwrap();
        let expected = C64::new(0.0, -(k * len) as f64).exp();
        closed_form = closed_form.max((h.matrix[(0, 0)] - expected).norm());
    }
    let mut quadrature: f64 = 0.0;
    let mut retrace: f64 = 0.0;
    for _ in 0..10 {
        let (conn, a, b) = random_u1(s);
        let start = [s.unit(), s.unit()];
        let path = random_path(s, start);
        let h = holonomy(&conn, &path, steps).unwrap();
        let expected = C64::new(0.0, -gl_phase(&path, &a, &b)).exp();
        quadrature = quadrature.max((h.matrix[(0, 0)] - expected).norm());

        let end = path.end();
        let excursion = random_path(s, [end[0], end[1]]);
        let there_and_back = compose(&reverse(&excursion), &excursion).unwrap();
        let longer = compose(&there_and_back, &path).unwrap();
        retrace = retrace.max(holonomy(&conn, &longer, steps).unwrap().distance(&h));
    }

    let (mut composition, mut inverse, mut thin): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10 {
        let conn = random_su2(s);
        let start = [s.unit(), s.unit()];
        let g1 = random_path(s, start);
        let end = g1.end();
        let g2 = random_path(s, [end[0], end[1]]);
        let h1 = holonomy(&conn, &g1, steps).unwrap();
        let h2 = holonomy(&conn, &g2, steps).unwrap();
        composition = composition.max(holonomy(&conn, &compose(&g2, &g1).unwrap(), steps).unwrap().distance(&h2.mul(&h1)));
        let back = holonomy(&conn, &reverse(&g1), steps).unwrap();
        inverse = inverse.max(back.mul(&h1).distance(&GroupElement::identity(Group::SU2)));
        let rhos = [expr("s^2", &chart), expr("s^3", &chart), expr("(3*s^2 - 2*s^3)", &chart)];
        thin = thin.max(thin_invariance_probe(&conn, &g1, &rhos, steps).unwrap().max_deviation);
        let rho = reparametrize(&g2, &expr("s^2", &chart)).unwrap();
        thin = thin.max(holonomy(&conn, &rho, steps).unwrap().distance(&h2));
    }
    let ok = closed_form < 1e-8 && quadrature < 1e-8 && composition < 1e-7 && inverse < 1e-7 && thin < 1e-7 && retrace < 1e-7;
    verdict(
        ok,
        format!(
            "U(1) closed form {closed_form:.1e}, U(1) quadrature {quadrature:.1e}, composition {composition:.1e}, inverse {inverse:.1e}, reparametrization {thin:.1e}, retracing {retrace:.1e}"
        ),
    )
}

fn criterion_9() -> Verdict {
    let models = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models");
    let runs: Vec<Vec<&str>> = vec![
        vec!["axioms", "--suite", "all", "--seed", "7"],
        vec!["noether", "wave.model"],
        vec!["holonomy", "holonomy_su2.model"],
    ];
    let mut identical = 0;
    for args in &runs {
        let once = || {
            Command::new(env!("CARGO_BIN_EXE_varjet"))
                .args(args)
                .current_dir(&models)
                .env_remove("VARJET_SEED")
                .output()
                .expect("binary runs")
        };
        let (a, b) = (once(), once());
        identical += usize::from(!a.stdout.is_empty() && a.stdout == b.stdout && a.status.code() == Some(0));
    }
    verdict(identical == runs.len(), format!("{identical}/{} commands byte-identical across two runs", runs.len()))
}

fn main() {
    let mut s = Sampler::new(SEED);
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Sampler) -> Verdict>)> = vec![
        ("bicomplex identities", Box::new(criterion_1)),
        ("ev-pullback bigrading", Box::new(criterion_2)),
        ("Euler-Lagrange vs first variation", Box::new(criterion_3)),
        ("divergence annihilation and Helmholtz", Box::new(criterion_4)),
        ("Noether identity", Box::new(criterion_5)),
        ("jet semantics", Box::new(criterion_6)),
        ("sheaf axioms", Box::new(|_: &mut Sampler| criterion_7())),
        ("holonomy", Box::new(criterion_8)),
        ("CLI determinism", Box::new(|_: &mut Sampler| criterion_9())),
    ];
    let mut passed = 0;
    let total = criteria.len();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = check(&mut s);
        passed += usize::from(v.passed);
        println!(
            "criterion {} ({name}): {} [{}; {:.2} s]",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{total} criteria passed");
    if passed != total {
        std::process::exit(1);
    }
}
