//! The variational bicomplex `Ω^{s,r}(J^∞π)` in the basis `{dx^μ, θ^a_I}`,
//! with `θ^a_I = du^a_I - u^a_{I+μ} dx^μ`.
//!
//! Monomials are stored with the `dx` block first (ascending `μ`) followed by
//! the contact block (ascending `(a, I)`); the sign of the sorting permutation
//! is absorbed into the coefficient. Bidegrees are `(s, r)` = (contact count,
//! horizontal count).

use std::collections::BTreeMap;

use serde_json::json;
use thiserror::Error;

use crate::jetcalc::total_derivative_unchecked;
use crate::symexpr::{BundleSignature, DivisionByZero, Expr, JetVar, MultiIndex, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("forms live over base dimensions {0} and {1}")]
    SignatureMismatch(usize, usize),
    #[error("horizontal generator dx^{mu} does not exist in base dimension {dim}")]
    DirectionOutOfRange { mu: usize, dim: usize },
    #[error("contact generator has a multi-index of dimension {got}, expected {dim}")]
    IndexDimension { got: usize, dim: usize },
    #[error("terms of bidegree {got:?} do not match {expected:?}")]
    MixedBidegree { expected: (usize, usize), got: (usize, usize) },
    #[error("family component is not polynomial")]
    NonPolynomialFamily,
    #[error("family has {got} components, signature has {expected} fields")]
    FamilyArity { expected: usize, got: usize },
    #[error("forms on spaces of dimension {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    DivisionByZero(#[from] DivisionByZero),
}

/// A single generator of the exterior algebra.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    Dx(usize),
    Theta(JetVar),
}

/// A basis monomial `dx^{μ1} ∧ … ∧ θ^{a1}_{I1} ∧ …` in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormBasis {
    pub dx: Vec<usize>,
    pub theta: Vec<JetVar>,
}

impl FormBasis {
    pub fn bidegree(&self) -> (usize, usize) {
        (self.theta.len(), self.dx.len())
    }

    fn generators(&self) -> Vec<Generator> {
        self.dx.iter().map(|&m| Generator::Dx(m)).chain(self.theta.iter().cloned().map(Generator::Theta)).collect()
    }
}

/// Sort a sequence of anticommuting symbols. `None` if one repeats,
/// otherwise the sorted sequence and whether the permutation was odd.
pub(crate) fn sort_anticommuting<T: Ord>(mut v: Vec<T>) -> Option<(Vec<T>, bool)> {
    let mut odd = false;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            odd = !odd;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, odd))
}

fn canonical(seq: Vec<Generator>) -> Option<(FormBasis, bool)> {
    let (sorted, odd) = sort_anticommuting(seq)?;
    let mut basis = FormBasis { dx: Vec::new(), theta: Vec::new() };
    for g in sorted {
        match g {
            Generator::Dx(m) => basis.dx.push(m),
            Generator::Theta(j) => basis.theta.push(j),
        }
    }
    Some((basis, odd))
}

/// An element of `Ω^{s,r}(J^∞π)` with expression coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigradedForm {
    base_dim: usize,
    bidegree: (usize, usize),
    terms: BTreeMap<FormBasis, Expr>,
}

impl BigradedForm {
    /// The zero form of a nominal bidegree.
    pub fn zero(base_dim: usize, s: usize, r: usize) -> Self {
        BigradedForm { base_dim, bidegree: (s, r), terms: BTreeMap::new() }
    }

    /// A `(0,0)`-form, i.e. a function on the jet bundle.
    pub fn function(base_dim: usize, f: Expr) -> Self {
        let mut out = BigradedForm::zero(base_dim, 0, 0);
        out.insert(FormBasis { dx: vec![], theta: vec![] }, f);
        out
    }

    pub fn dx(base_dim: usize, mu: usize) -> Result<Self, FormError> {
        BigradedForm::monomial(base_dim, vec![Generator::Dx(mu)], Expr::one())
    }

    pub fn theta(base_dim: usize, jet: JetVar) -> Result<Self, FormError> {
        BigradedForm::monomial(base_dim, vec![Generator::Theta(jet)], Expr::one())
    }

    /// `dx^1 ∧ … ∧ dx^m`.
    pub fn volume(base_dim: usize) -> Self {
        let gens = (0..base_dim).map(Generator::Dx).collect();
        BigradedForm::monomial(base_dim, gens, Expr::one()).expect("directions in range")
    }

    /// `coeff · g1 ∧ g2 ∧ …` for generators in any order. A repeated generator
    /// yields the zero form of the corresponding bidegree.
    pub fn monomial(base_dim: usize, generators: Vec<Generator>, coeff: Expr) -> Result<Self, FormError> {
        for g in &generators {
            match g {
                Generator::Dx(mu) if *mu >= base_dim => {
                    return Err(FormError::DirectionOutOfRange { mu: *mu, dim: base_dim })
                }
                Generator::Theta(j) if j.index.dim() != base_dim => {
                    return Err(FormError::IndexDimension { got: j.index.dim(), dim: base_dim })
                }
                _ => {}
            }
        }
        let s = generators.iter().filter(|g| matches!(g, Generator::Theta(_))).count();
        let r = generators.len() - s;
        let mut out = BigradedForm::zero(base_dim, s, r);
        if let Some((basis, odd)) = canonical(generators) {
            out.insert(basis, if odd { -coeff } else { coeff });
        }
        Ok(out)
    }

    /// Build from explicit canonical terms, checking that all share a bidegree.
    pub fn from_terms(
        base_dim: usize,
        bidegree: (usize, usize),
        terms: impl IntoIterator<Item = (Vec<Generator>, Expr)>,
    ) -> Result<Self, FormError> {
        let mut out = BigradedForm::zero(base_dim, bidegree.0, bidegree.1);
        for (gens, coeff) in terms {
            let m = BigradedForm::monomial(base_dim, gens, coeff)?;
            if m.bidegree != bidegree {
                return Err(FormError::MixedBidegree { expected: bidegree, got: m.bidegree });
            }
            out = out.add(&m)?;
        }
        Ok(out)
    }

    fn insert(&mut self, basis: FormBasis, coeff: Expr) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.remove(&basis).unwrap_or_default();
        let sum = &entry + &coeff;
        if !sum.is_zero() {
            self.terms.insert(basis, sum);
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// `(s, r)`: vertical (contact) degree, horizontal degree.
    pub fn bidegree(&self) -> (usize, usize) {
        self.bidegree
    }

    /// Total degree `s + r`.
    pub fn degree(&self) -> usize {
        self.bidegree.0 + self.bidegree.1
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FormBasis, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, basis: &FormBasis) -> Expr {
        self.terms.get(basis).cloned().unwrap_or_default()
    }

    /// Highest jet order among the coefficients and contact generators.
    pub fn order(&self) -> u32 {
        self.terms
            .iter()
            .map(|(b, c)| b.theta.iter().map(JetVar::order).max().unwrap_or(0).max(c.order()))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &BigradedForm) -> Result<BigradedForm, FormError> {
        if self.base_dim != other.base_dim {
            return Err(FormError::SignatureMismatch(self.base_dim, other.base_dim));
        }
        if self.bidegree != other.bidegree {
            if other.is_zero() {
                return Ok(self.clone());
            }
            if self.is_zero() {
                return Ok(other.clone());
            }
            return Err(FormError::MixedBidegree { expected: self.bidegree, got: other.bidegree });
        }
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.insert(b.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> BigradedForm {
        self.scale(&Expr::int(-1))
    }

    pub fn sub(&self, other: &BigradedForm) -> Result<BigradedForm, FormError> {
        self.add(&other.neg())
    }

    /// Multiply every coefficient by a function.
    pub fn scale(&self, f: &Expr) -> BigradedForm {
        let mut out = BigradedForm::zero(self.base_dim, self.bidegree.0, self.bidegree.1);
        for (b, c) in &self.terms {
            out.insert(b.clone(), c * f);
        }
        out
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> BigradedForm {
        let mut out = BigradedForm::zero(self.base_dim, self.bidegree.0, self.bidegree.1);
        for (b, c) in &self.terms {
            out.insert(b.clone(), f(c));
        }
        out
    }

    /// Exterior product. Graded anticommutative with respect to `s + r`.
    pub fn wedge(&self, other: &BigradedForm) -> Result<BigradedForm, FormError> {
        if self.base_dim != other.base_dim {
            return Err(FormError::SignatureMismatch(self.base_dim, other.base_dim));
        }
        let (s, r) = (self.bidegree.0 + other.bidegree.0, self.bidegree.1 + other.bidegree.1);
        let mut out = BigradedForm::zero(self.base_dim, s, r);
        for (ba, ca) in &self.terms {
            for (bb, cb) in &other.terms {
                let mut seq = ba.generators();
                seq.extend(bb.generators());
                if let Some((basis, odd)) = canonical(seq) {
                    let c = ca * cb;
                    out.insert(basis, if odd { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Apply a degree-one derivation given on functions and generators.
    fn derive(
        &self,
        bidegree: (usize, usize),
        on_function: impl Fn(&Expr) -> Vec<(Generator, Expr)>,
        on_theta: impl Fn(&JetVar) -> Vec<[Generator; 2]>,
    ) -> BigradedForm {
        let mut out = BigradedForm::zero(self.base_dim, bidegree.0, bidegree.1);
        for (basis, coeff) in &self.terms {
            let gens = basis.generators();
            for (g, c) in on_function(coeff) {
                let mut seq = Vec::with_capacity(gens.len() + 1);
                seq.push(g);
                seq.extend(gens.iter().cloned());
                if let Some((b, odd)) = canonical(seq) {
                    out.insert(b, if odd { -c } else { c });
                }
            }
            for (j, g) in gens.iter().enumerate() {
                let Generator::Theta(jet) = g else { continue };
                for pair in on_theta(jet) {
                    let mut seq = Vec::with_capacity(gens.len() + 1);
                    seq.extend(gens[..j].iter().cloned());
                    seq.extend(pair);
                    seq.extend(gens[j + 1..].iter().cloned());
                    if let Some((b, odd)) = canonical(seq) {
                        let negative = odd ^ (j % 2 == 1);
                        out.insert(b, if negative { -coeff.clone() } else { coeff.clone() });
                    }
                }
            }
        }
        out
    }

    /// `d_H`: `f ↦ D_μ f dx^μ`, `dx ↦ 0`, `θ^a_I ↦ dx^μ ∧ θ^a_{I+μ}`.
    pub fn d_horizontal(&self) -> BigradedForm {
        let dim = self.base_dim;
        self.derive(
            (self.bidegree.0, self.bidegree.1 + 1),
            |f| (0..dim).map(|mu| (Generator::Dx(mu), total_derivative_unchecked(f, mu))).collect(),
            |jet| (0..dim).map(|mu| [Generator::Dx(mu), Generator::Theta(jet.raised(mu))]).collect(),
        )
    }

    /// `d_V`: `f ↦ Σ ∂f/∂u^a_I θ^a_I`, `dx ↦ 0`, `θ ↦ 0`.
    pub fn d_vertical(&self) -> BigradedForm {
        self.derive(
            (self.bidegree.0 + 1, self.bidegree.1),
            |f| f.jet_vars().into_iter().map(|j| (Generator::Theta(j.clone()), f.partial(&Var::Jet(j)))).collect(),
            |_| Vec::new(),
        )
    }

    /// `{"bidegree":[s,r], "terms":[{"dx":[..], "theta":[["u",[1,0]]], "coeff":".."}]}`
    pub fn to_json(&self, sig: &BundleSignature) -> serde_json::Value {
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(b, c)| {
                json!({
                    "dx": b.dx.iter().map(|&m| sig.base_names()[m].clone()).collect::<Vec<_>>(),
                    "theta": b.theta.iter().map(|j| json!([sig.field_names()[j.field], j.index.counts()])).collect::<Vec<_>>(),
                    "coeff": c.to_text(sig),
                })
            })
            .collect();
        json!({ "bidegree": [self.bidegree.0, self.bidegree.1], "terms": terms })
    }

    pub fn to_latex(&self, sig: &BundleSignature) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, c)| {
                let mut gens: Vec<String> = b.dx.iter().map(|&m| format!("dx^{{{}}}", sig.base_names()[m])).collect();
                for j in &b.theta {
                    let field = &sig.field_names()[j.field];
                    let name = sig.jet_name(j);
                    let sub = name.get(field.len() + 1..).unwrap_or("");
                    gens.push(if sub.is_empty() {
                        format!("\\theta^{{{field}}}")
                    } else {
                        format!("\\theta^{{{field}}}_{{{sub}}}")
                    });
                }
                let coeff = c.to_latex(sig);
                if gens.is_empty() {
                    coeff
                } else {
                    format!("\\left({coeff}\\right) {}", gens.join(" \\wedge "))
                }
            })
            .collect();
        parts.join(" + ")
    }

    pub fn to_text(&self, sig: &BundleSignature) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, c)| {
                let mut gens: Vec<String> = b.dx.iter().map(|&m| format!("d{}", sig.base_names()[m])).collect();
                gens.extend(b.theta.iter().map(|j| format!("theta[{}]", sig.jet_name(j))));
                if gens.is_empty() {
                    c.to_text(sig)
                } else {
                    format!("({}) {}", c.to_text(sig), gens.join("^"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// A differential form on an open subset of `R^n` with expression
/// coefficients in `Var::Base(0..n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeRhamForm {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

impl DeRhamForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        DeRhamForm { dim, degree, terms: BTreeMap::new() }
    }

    pub fn function(dim: usize, f: Expr) -> Self {
        let mut out = DeRhamForm::zero(dim, 0);
        out.insert(vec![], f);
        out
    }

    /// `coeff · dz^{i1} ∧ dz^{i2} ∧ …` for indices in any order.
    pub fn monomial(dim: usize, indices: Vec<usize>, coeff: Expr) -> Result<Self, FormError> {
        if let Some(&i) = indices.iter().find(|&&i| i >= dim) {
            return Err(FormError::DirectionOutOfRange { mu: i, dim });
        }
        let mut out = DeRhamForm::zero(dim, indices.len());
        if let Some((sorted, odd)) = sort_anticommuting(indices) {
            out.insert(sorted, if odd { -coeff } else { coeff });
        }
        Ok(out)
    }

    fn insert(&mut self, idx: Vec<usize>, coeff: Expr) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.remove(&idx).unwrap_or_default();
        let sum = &entry + &coeff;
        if !sum.is_zero() {
            self.terms.insert(idx, sum);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &[usize]) -> Expr {
        self.terms.get(idx).cloned().unwrap_or_default()
    }

    pub fn add(&self, other: &DeRhamForm) -> Result<DeRhamForm, FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimensionMismatch(self.dim, other.dim));
        }
        if self.degree != other.degree && !other.is_zero() && !self.is_zero() {
            return Err(FormError::MixedBidegree { expected: (0, self.degree), got: (0, other.degree) });
        }
        let mut out = if self.is_zero() && self.degree != other.degree { other.clone() } else { self.clone() };
        if !(self.is_zero() && self.degree != other.degree) {
            for (i, c) in &other.terms {
                out.insert(i.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &DeRhamForm) -> Result<DeRhamForm, FormError> {
        if self.dim != other.dim {
            return Err(FormError::DimensionMismatch(self.dim, other.dim));
        }
        let mut out = DeRhamForm::zero(self.dim, self.degree + other.degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                let mut seq = ia.clone();
                seq.extend(ib);
                if let Some((sorted, odd)) = sort_anticommuting(seq) {
                    let c = ca * cb;
                    out.insert(sorted, if odd { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> DeRhamForm {
        let mut out = DeRhamForm::zero(self.dim, self.degree + 1);
        for (idx, c) in &self.terms {
            for i in 0..self.dim {
                let dc = c.partial(&Var::Base(i));
                if dc.is_zero() {
                    continue;
                }
                let mut seq = vec![i];
                seq.extend(idx);
                if let Some((sorted, odd)) = sort_anticommuting(seq) {
                    out.insert(sorted, if odd { -dc } else { dc });
                }
            }
        }
        out
    }

    /// Pull back along a smooth map whose components are expressions in the
    /// coordinates of a `source_dim`-dimensional domain.
    pub fn pull_back(&self, source_dim: usize, map: &[Expr]) -> Result<DeRhamForm, FormError> {
        if map.len() != self.dim {
            return Err(FormError::DimensionMismatch(map.len(), self.dim));
        }
        let differentials: Vec<DeRhamForm> = map
            .iter()
            .map(|phi| {
                let mut df = DeRhamForm::zero(source_dim, 1);
                for j in 0..source_dim {
                    df.insert(vec![j], phi.partial(&Var::Base(j)));
                }
                df
            })
            .collect();
        let mut out = DeRhamForm::zero(source_dim, self.degree);
        for (idx, c) in &self.terms {
            let coeff = c.substitute(&mut |v| match v {
                Var::Base(i) => Some(map[*i].clone()),
                Var::Jet(_) => None,
            })?;
            let mut term = DeRhamForm::function(source_dim, coeff);
            for &i in idx {
                term = term.wedge(&differentials[i])?;
            }
            for (i, c) in term.terms {
                out.insert(i, c);
            }
        }
        Ok(out)
    }

    /// Split by how many differentials fall in coordinates `0..split`.
    pub fn split_by(&self, split: usize) -> BTreeMap<(usize, usize), DeRhamForm> {
        let mut out: BTreeMap<(usize, usize), DeRhamForm> = BTreeMap::new();
        for (idx, c) in &self.terms {
            let low = idx.iter().filter(|&&i| i < split).count();
            out.entry((low, idx.len() - low))
                .or_insert_with(|| DeRhamForm::zero(self.dim, self.degree))
                .insert(idx.clone(), c.clone());
        }
        out
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> DeRhamForm {
        let mut out = DeRhamForm::zero(self.dim, self.degree);
        for (i, c) in &self.terms {
            out.insert(i.clone(), f(c));
        }
        out
    }

    pub fn to_text(&self, sig: &BundleSignature) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(idx, c)| {
                if idx.is_empty() {
                    c.to_text(sig)
                } else {
                    let gens: Vec<String> = idx.iter().map(|&i| format!("d{}", sig.base_names()[i])).collect();
                    format!("({}) {}", c.to_text(sig), gens.join("^"))
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// A family of sections `φ_ε(x)` polynomial in parameters `ε_1..ε_p` and the
/// base coordinates. Expressions use `Base(0..p)` for `ε` and `Base(p + μ)`
/// for `x^μ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionFamily {
    params: usize,
    base_dim: usize,
    components: Vec<Expr>,
}

impl SectionFamily {
    pub fn new(params: usize, sig: &BundleSignature, components: Vec<Expr>) -> Result<Self, FormError> {
        let expected = sig.field_names().len();
        if components.len() != expected {
            return Err(FormError::FamilyArity { expected, got: components.len() });
        }
        let base_dim = sig.base_dim();
        for c in &components {
            let in_range = c.vars().iter().all(|v| matches!(v, Var::Base(i) if *i < params + base_dim));
            if !c.is_polynomial() || !in_range {
                return Err(FormError::NonPolynomialFamily);
            }
        }
        Ok(SectionFamily { params, base_dim, components })
    }

    pub fn params(&self) -> usize {
        self.params
    }

    /// `∂_I φ^a_ε` in the `(ε, x)` coordinates.
    pub fn derivative(&self, jet: &JetVar) -> Expr {
        let mut out = self.components[jet.field].clone();
        for (mu, &count) in jet.index.counts().iter().enumerate() {
            for _ in 0..count {
                out = out.partial(&Var::Base(self.params + mu));
            }
        }
        out
    }
}

/// Pull a bigraded form back along `(ε, x) ↦ j^∞φ_ε(x)`.
///
/// `u^a_I ↦ ∂_I φ^a_ε`, `dx^μ ↦ dx^μ`, `θ^a_I ↦ Σ_j ∂_{ε_j}(∂_I φ^a_ε) dε_j`.
/// The result lives on `R^{p+m}` with the `dε` block first, and its
/// (`dε`-count, `dx`-count) bidegree is the bidegree of `ω`.
pub fn ev_pullback(omega: &BigradedForm, family: &SectionFamily) -> Result<DeRhamForm, FormError> {
    if omega.base_dim != family.base_dim {
        return Err(FormError::SignatureMismatch(omega.base_dim, family.base_dim));
    }
    let p = family.params;
    let dim = p + family.base_dim;
    let mut out = DeRhamForm::zero(dim, omega.degree());
    for (basis, coeff) in &omega.terms {
        let pulled = coeff.substitute(&mut |v| match v {
            Var::Base(mu) => Some(Expr::base(p + mu)),
            Var::Jet(j) => Some(family.derivative(j)),
        })?;
        let mut term = DeRhamForm::function(dim, pulled);
        for &mu in &basis.dx {
            term = term.wedge(&DeRhamForm::monomial(dim, vec![p + mu], Expr::one())?)?;
        }
        for jet in &basis.theta {
            let d = family.derivative(jet);
            let mut theta = DeRhamForm::zero(dim, 1);
            for j in 0..p {
                theta.insert(vec![j], d.partial(&Var::Base(j)));
            }
            term = term.wedge(&theta)?;
        }
        for (i, c) in term.terms {
            out.insert(i, c);
        }
    }
    Ok(out)
}

/// Contact generator `θ^a_I` over a given base dimension.
pub fn contact(field: usize, counts: Vec<u32>) -> JetVar {
    JetVar::new(field, MultiIndex::from_counts(counts))
}
