//! Euler–Lagrange operator, first variation, divergence symmetries, Noether
//! currents and the Helmholtz test.

use std::collections::BTreeMap;

use serde_json::json;
use thiserror::Error;

use crate::bicomplex::{BigradedForm, Generator};
use crate::jetcalc::{apply_prolonged, iterated_total_derivative, total_derivative_unchecked, EvolutionaryField};
use crate::symexpr::{BundleSignature, Expr, JetVar, MultiIndex, Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VariationalError {
    #[error("the field is not a divergence symmetry of the Lagrangian")]
    NotASymmetry,
    #[error("symmetry holds but no divergence witness was found for a non-polynomial variation")]
    NoWitness,
}

/// A Lagrangian density `L`, standing for the top horizontal form `L dx^1∧…∧dx^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lagrangian {
    pub density: Expr,
}

impl Lagrangian {
    pub fn new(density: Expr) -> Self {
        Lagrangian { density }
    }

    pub fn order(&self) -> u32 {
        self.density.order()
    }

    pub fn as_form(&self, sig: &BundleSignature) -> BigradedForm {
        BigradedForm::volume(sig.base_dim()).scale(&self.density)
    }
}

/// Candidate equations of motion, one component per field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceForm {
    pub components: Vec<Expr>,
}

impl SourceForm {
    pub fn order(&self) -> u32 {
        self.components.iter().map(Expr::order).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    pub fn to_json(&self, sig: &BundleSignature) -> serde_json::Value {
        let map: serde_json::Map<_, _> = sig
            .field_names()
            .iter()
            .zip(&self.components)
            .map(|(f, e)| (f.clone(), json!(e.to_text(sig))))
            .collect();
        serde_json::Value::Object(map)
    }
}

/// A current `P^μ`, one component per base direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Current {
    pub components: Vec<Expr>,
}

impl Current {
    pub fn zero(base_dim: usize) -> Self {
        Current { components: vec![Expr::zero(); base_dim] }
    }

    /// `D_μ P^μ`.
    pub fn divergence(&self) -> Expr {
        self.components.iter().enumerate().map(|(mu, p)| total_derivative_unchecked(p, mu)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    pub fn to_json(&self, sig: &BundleSignature) -> serde_json::Value {
        let map: serde_json::Map<_, _> = sig
            .base_names()
            .iter()
            .zip(&self.components)
            .map(|(x, e)| (x.clone(), json!(e.to_text(sig))))
            .collect();
        serde_json::Value::Object(map)
    }

    fn sub(&self, other: &Current) -> Current {
        Current { components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect() }
    }
}

/// `E_a(f) = Σ_I (-1)^{|I|} D_I ∂f/∂u^a_I`.
pub fn euler_operator(f: &Expr, sig: &BundleSignature) -> SourceForm {
    let mut components = vec![Expr::zero(); sig.field_names().len()];
    for jet in f.jet_vars() {
        let mut term = iterated_total_derivative(&f.partial(&Var::Jet(jet.clone())), &jet.index);
        if jet.order() % 2 == 1 {
            term = -term;
        }
        components[jet.field] = &components[jet.field] + &term;
    }
    SourceForm { components }
}

pub fn euler_lagrange(l: &Lagrangian, sig: &BundleSignature) -> SourceForm {
    euler_operator(&l.density, sig)
}

/// Split `pr Q(L) = Σ_a Q^a E_a(L) + D_μ P^μ`, moving one total derivative
/// at a time off the `Q` factors, highest order first and the lowest
/// direction first. Returns the interior part and the boundary current.
pub fn first_variation_decompose(l: &Lagrangian, q: &EvolutionaryField, sig: &BundleSignature) -> (Expr, Current) {
    let dim = sig.base_dim();
    let mut boundary = Current::zero(dim);
    // pending[(a, I)] = F with the term F · D_I Q^a still to be reduced
    let mut pending: BTreeMap<(u32, JetVar), Expr> = BTreeMap::new();
    for jet in l.density.jet_vars() {
        if q.characteristic(jet.field).is_zero() {
            continue;
        }
        let f = l.density.partial(&Var::Jet(jet.clone()));
        add_to(&mut pending, jet, f);
    }
    let mut interior = Expr::zero();
    while let Some(((order, jet), f)) = pending.pop_last() {
        let qa = q.characteristic(jet.field);
        if order == 0 {
            interior = &interior + &(&f * qa);
            continue;
        }
        let mu = jet.index.first_direction().expect("nonzero index");
        let lower = JetVar::new(jet.field, jet.index.lowered(mu).expect("contains mu"));
        let dq = iterated_total_derivative(qa, &lower.index);
        boundary.components[mu] = &boundary.components[mu] + &(&f * &dq);
        add_to(&mut pending, lower, -total_derivative_unchecked(&f, mu));
    }
    (interior, boundary)
}

fn add_to(pending: &mut BTreeMap<(u32, JetVar), Expr>, jet: JetVar, f: Expr) {
    if f.is_zero() {
        return;
    }
    let key = (jet.order(), jet);
    let sum = match pending.remove(&key) {
        Some(prev) => &prev + &f,
        None => f,
    };
    if !sum.is_zero() {
        pending.insert(key, sum);
    }
}

/// Outcome of the divergence-symmetry test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryVerdict {
    pub is_symmetry: bool,
    /// `K` with `pr Q(L) = D_μ K^μ`, when one could be constructed.
    pub witness: Option<Current>,
}

/// Decide whether `pr Q(L)` is a total divergence via the Euler operator,
/// and if so build `K` by the homotopy on jet degree plus integration of the
/// base-only remainder along a coordinate line.
pub fn is_divergence_symmetry(l: &Lagrangian, q: &EvolutionaryField, sig: &BundleSignature) -> SymmetryVerdict {
    let g = apply_prolonged(q, &l.density);
    if !euler_operator(&g, sig).is_zero() {
        return SymmetryVerdict { is_symmetry: false, witness: None };
    }
    let witness = divergence_witness(&g, sig).filter(|k| k.divergence() == g);
    SymmetryVerdict { is_symmetry: true, witness }
}

/// A `K` with `D_μ K^μ = g` for `g` in the kernel of the Euler operator.
pub fn divergence_witness(g: &Expr, sig: &BundleSignature) -> Option<Current> {
    let dim = sig.base_dim();
    let identity = EvolutionaryField::new(
        (0..sig.field_names().len()).map(|a| Expr::jet(a, MultiIndex::zero(dim))).collect(),
        sig,
    )
    .expect("one characteristic per field");
    let mut k = Current::zero(dim);
    for (degree, part) in g.degree_in_jets()? {
        if degree == 0 {
            let (mu, antiderivative) = (0..dim).find_map(|mu| integrate_base(&part, mu).map(|a| (mu, a)))?;
            k.components[mu] = &k.components[mu] + &antiderivative;
            continue;
        }
        // u·E(g_k) + D·P = pr_u g_k = k g_k, and E(g_k) = 0
        let (_, p) = first_variation_decompose(&Lagrangian::new(part), &identity, sig);
        let scale = Expr::constant(Rational::new(1.into(), degree.into()));
        for (acc, pc) in k.components.iter_mut().zip(&p.components) {
            *acc = &*acc + &(pc * &scale);
        }
    }
    Some(k)
}

/// `∫_0^{x^μ} f` for `f` polynomial in `x^μ`.
fn integrate_base(f: &Expr, mu: usize) -> Option<Expr> {
    let x = Expr::base(mu);
    let mut out = Expr::zero();
    for (k, c) in f.coefficients_in(&Var::Base(mu))? {
        if k < 0 {
            return None;
        }
        let n = k as u32 + 1;
        out = &out + &(&c * &x.pow(n)).scale(&Rational::new(1.into(), n.into()));
    }
    Some(out)
}

/// `J = P - K`, with `D_μ J^μ = -Σ_a Q^a E_a(L)`.
pub fn noether_current(l: &Lagrangian, q: &EvolutionaryField, sig: &BundleSignature) -> Result<Current, VariationalError> {
    let verdict = is_divergence_symmetry(l, q, sig);
    if !verdict.is_symmetry {
        return Err(VariationalError::NotASymmetry);
    }
    let k = verdict.witness.ok_or(VariationalError::NoWitness)?;
    let (_, p) = first_variation_decompose(l, q, sig);
    Ok(p.sub(&k))
}

/// One coefficient where the linearization differs from its adjoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelmholtzFailure {
    /// Component `Δ_b` being linearized.
    pub component: usize,
    /// Field `a` of the variation.
    pub field: usize,
    /// Coefficient of `D_J ψ^a`.
    pub index: MultiIndex,
    /// Linearization coefficient minus adjoint coefficient.
    pub difference: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelmholtzReport {
    pub variational: bool,
    pub failures: Vec<HelmholtzFailure>,
}

impl HelmholtzReport {
    pub fn to_json(&self, sig: &BundleSignature) -> serde_json::Value {
        let failures: Vec<_> = self
            .failures
            .iter()
            .map(|f| {
                let jet = JetVar::new(f.field, f.index.clone());
                json!({
                    "component": sig.field_names()[f.component],
                    "coefficient_of": sig.jet_name(&jet),
                    "difference": f.difference.to_text(sig),
                })
            })
            .collect();
        json!({ "variational": self.variational, "failures": failures })
    }
}

/// Self-adjointness of the Fréchet derivative `D_Δ`.
///
/// With `D_Δ(ψ)_b = Σ ∂Δ_b/∂u^a_J D_J ψ^a`, the adjoint has coefficient
/// `Σ_{I ⊇ J} (-1)^{|I|} C(I, J) D_{I-J}(∂Δ_a/∂u^b_I)` on `D_J ψ^a`.
pub fn helmholtz_check(delta: &SourceForm, sig: &BundleSignature) -> HelmholtzReport {
    let fields = sig.field_names().len();
    let max_order = delta.order();
    let indices = MultiIndex::all_up_to(sig.base_dim(), max_order);
    let linear = |b: usize, a: usize, j: &MultiIndex| -> Expr {
        delta.components[b].partial(&Var::Jet(JetVar::new(a, j.clone())))
    };
    let mut failures = Vec::new();
    for b in 0..fields {
        for a in 0..fields {
            for j in &indices {
                let mut adjoint = Expr::zero();
                for i in indices.iter().filter(|i| i.contains(j)) {
                    let c = linear(a, b, i);
                    if c.is_zero() {
                        continue;
                    }
                    let mut term = iterated_total_derivative(&c, &i.minus(j)).scale(&Rational::from_integer(i.binomial(j).into()));
                    if i.order() % 2 == 1 {
                        term = -term;
                    }
                    adjoint = &adjoint + &term;
                }
                let difference = &linear(b, a, j) - &adjoint;
                if !difference.is_zero() {
                    failures.push(HelmholtzFailure { component: b, field: a, index: j.clone(), difference });
                }
            }
        }
    }
    HelmholtzReport { variational: failures.is_empty(), failures }
}

/// `Σ_a Δ_a θ^a ∧ dx^1 ∧ … ∧ dx^m`.
pub fn source_form_as_bicomplex(delta: &SourceForm, sig: &BundleSignature) -> BigradedForm {
    let dim = sig.base_dim();
    let mut out = BigradedForm::zero(dim, 1, dim);
    for (a, e) in delta.components.iter().enumerate() {
        let mut gens = vec![Generator::Theta(JetVar::new(a, MultiIndex::zero(dim)))];
        gens.extend((0..dim).map(Generator::Dx));
        let term = BigradedForm::monomial(dim, gens, e.clone()).expect("generators in range");
        out = out.add(&term).expect("same bidegree");
    }
    out
}

/// Reduce a `(1, m)`-form `Σ F_{a,I} θ^a_I ∧ vol` by integration by parts to
/// its source part `Σ_a (Σ_I (-D)_I F_{a,I}) θ^a ∧ vol`. `None` for other
/// bidegrees.
pub fn interior_source(omega: &BigradedForm, sig: &BundleSignature) -> Option<SourceForm> {
    let m = omega.base_dim();
    if omega.bidegree() != (1, m) {
        return None;
    }
    // canonical monomials are vol ∧ θ = (-1)^m θ ∧ vol
    let flip = m % 2 == 1;
    let mut components = vec![Expr::zero(); sig.field_names().len()];
    for (basis, coeff) in omega.terms() {
        let jet = &basis.theta[0];
        let mut reduced = iterated_total_derivative(coeff, &jet.index);
        if (jet.order() % 2 == 1) ^ flip {
            reduced = -reduced;
        }
        components[jet.field] = &components[jet.field] + &reduced;
    }
    Some(SourceForm { components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_expression;

    fn sig(base: &[&str]) -> BundleSignature {
        BundleSignature::new(base, &["u"], &["m"]).unwrap()
    }

    fn p(s: &str, sig: &BundleSignature) -> Expr {
        parse_expression(s, sig).unwrap()
    }

    fn field(s: &str, sig: &BundleSignature) -> EvolutionaryField {
        EvolutionaryField::new(vec![p(s, sig)], sig).unwrap()
    }

    #[test]
    fn euler_lagrange_examples() {
        let s = sig(&["x"]);
        assert_eq!(euler_lagrange(&Lagrangian::new(p("1/2*u_x^2", &s)), &s).components, vec![p("-u_xx", &s)]);
        assert!(euler_lagrange(&Lagrangian::new(p("u_x", &s)), &s).is_zero());
        let w = sig(&["t", "x"]);
        let wave = Lagrangian::new(p("1/2*(u_t^2 - u_x^2)", &w));
        assert_eq!(euler_lagrange(&wave, &w).components, vec![p("-u_tt + u_xx", &w)]);
    }

    #[test]
    fn first_variation_examples() {
        let s = sig(&["x"]);
        let l = Lagrangian::new(p("1/2*u_x^2", &s));
        let (interior, boundary) = first_variation_decompose(&l, &field("u", &s), &s);
        assert_eq!(interior, p("-u*u_xx", &s));
        assert_eq!(boundary.components, vec![p("u*u_x", &s)]);

        let (interior, boundary) = first_variation_decompose(&l, &EvolutionaryField::zero(&s), &s);
        assert!(interior.is_zero() && boundary.is_zero());

        let potential = Lagrangian::new(p("u^3 + x*u", &s));
        let (_, boundary) = first_variation_decompose(&potential, &field("u_xx", &s), &s);
        assert!(boundary.is_zero());
    }

    #[test]
    fn symmetry_examples() {
        let w = sig(&["t", "x"]);
        let wave = Lagrangian::new(p("1/2*(u_t^2 - u_x^2)", &w));
        let verdict = is_divergence_symmetry(&wave, &field("u_t", &w), &w);
        assert!(verdict.is_symmetry);
        let k = verdict.witness.unwrap();
        assert_eq!(k.divergence(), apply_prolonged(&field("u_t", &w), &wave.density));

        let s = sig(&["x"]);
        assert!(is_divergence_symmetry(&Lagrangian::new(p("1/2*u_x^2", &s)), &field("1", &s), &s).is_symmetry);
        let cubic = Lagrangian::new(p("1/2*u_x^2 + u^3", &s));
        assert!(!is_divergence_symmetry(&cubic, &field("1", &s), &s).is_symmetry);
    }

    #[test]
    fn witness_handles_base_only_remainder() {
        let s = sig(&["x", "y"]);
        let g = p("x^2*y + u_x*u + 3", &s);
        let k = divergence_witness(&g, &s).unwrap();
        assert_eq!(k.divergence(), g);
    }

    #[test]
    fn noether_examples() {
        let w = sig(&["t", "x"]);
        let wave = Lagrangian::new(p("1/2*(u_t^2 - u_x^2)", &w));
        let j = noether_current(&wave, &field("u_t", &w), &w).unwrap();
        assert_eq!(j.components, vec![p("1/2*u_t^2 + 1/2*u_x^2", &w), p("-u_t*u_x", &w)]);
        let e = euler_lagrange(&wave, &w);
        assert_eq!(j.divergence(), -(&p("u_t", &w) * &e.components[0]));

        assert!(noether_current(&wave, &EvolutionaryField::zero(&w), &w).unwrap().is_zero());

        let s = sig(&["x"]);
        let l = Lagrangian::new(p("1/2*u_x^2", &s));
        let j = noether_current(&l, &field("1", &s), &s).unwrap();
        let e = euler_lagrange(&l, &s);
        assert_eq!(j.divergence(), -e.components[0].clone());

        let cubic = Lagrangian::new(p("1/2*u_x^2 + u^3", &s));
        assert_eq!(noether_current(&cubic, &field("1", &s), &s), Err(VariationalError::NotASymmetry));
    }

    #[test]
    fn helmholtz_examples() {
        let s = sig(&["x"]);
        let ok = SourceForm { components: vec![p("u_xx + u^2", &s)] };
        assert!(helmholtz_check(&ok, &s).variational);
        let l = Lagrangian::new(p("-1/2*u_x^2 + 1/3*u^3", &s));
        assert_eq!(euler_lagrange(&l, &s), ok);

        let st = sig(&["x", "t"]);
        let bad = SourceForm { components: vec![p("u_t - u*u_x", &st)] };
        let report = helmholtz_check(&bad, &st);
        assert!(!report.variational);
        assert!(!report.failures.is_empty());
    }

    #[test]
    fn source_forms_in_the_bicomplex() {
        let s = sig(&["x"]);
        let zero = source_form_as_bicomplex(&SourceForm { components: vec![Expr::zero()] }, &s);
        assert!(zero.is_zero());
        assert_eq!(zero.bidegree(), (1, 1));

        let l = Lagrangian::new(p("1/2*u_x^2 + u^3", &s));
        let dv = l.as_form(&s).d_vertical();
        let reduced = interior_source(&dv, &s).unwrap();
        assert_eq!(reduced, euler_lagrange(&l, &s));

        let w = sig(&["t", "x"]);
        let wave = Lagrangian::new(p("1/2*(u_t^2 - u_x^2) - 1/2*m^2*u^2", &w));
        let reduced = interior_source(&wave.as_form(&w).d_vertical(), &w).unwrap();
        assert_eq!(
            source_form_as_bicomplex(&reduced, &w),
            source_form_as_bicomplex(&euler_lagrange(&wave, &w), &w)
        );
    }
}
