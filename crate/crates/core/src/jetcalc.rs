//! Calculus on the infinite jet bundle: total derivatives, prolonged
//! evolutionary fields, evaluation along sections and finite-order jet points.
//!
//! Infinite jets are never materialized. Every expression has finite order,
//! and points of `J^∞` are handled through their finite truncations together
//! with [`tower_project`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symexpr::{BundleSignature, DivisionByZero, EvalError, Expr, JetVar, MultiIndex, Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("base direction {mu} out of range for base dimension {dim}")]
    DirectionOutOfRange { mu: usize, dim: usize },
    #[error("cannot project a jet of order {from} to order {to}")]
    ProjectionOrder { from: u32, to: u32 },
    #[error("section component for `{0}` depends on jet coordinates")]
    SectionNotBasic(String),
    #[error("expected {expected} section components, got {got}")]
    SectionArity { expected: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    DivisionByZero(#[from] DivisionByZero),
}

/// `D_μ f = ∂f/∂x^μ + Σ u^a_{I+μ} ∂f/∂u^a_I`.
pub fn total_derivative(e: &Expr, mu: usize, sig: &BundleSignature) -> Result<Expr, JetError> {
    let dim = sig.base_dim();
    if mu >= dim {
        return Err(JetError::DirectionOutOfRange { mu, dim });
    }
    Ok(total_derivative_unchecked(e, mu))
}

pub(crate) fn total_derivative_unchecked(e: &Expr, mu: usize) -> Expr {
    let mut out = e.partial(&Var::Base(mu));
    for jet in e.jet_vars() {
        let d = e.partial(&Var::Jet(jet.clone()));
        let raised = Expr::var(Var::Jet(jet.raised(mu)));
        out = &out + &(&raised * &d);
    }
    out
}

/// `D_I e`, applying one total derivative per count in `I`.
pub fn iterated_total_derivative(e: &Expr, index: &MultiIndex) -> Expr {
    let mut out = e.clone();
    for (mu, &count) in index.counts().iter().enumerate() {
        for _ in 0..count {
            if out.is_zero() {
                return out;
            }
            out = total_derivative_unchecked(&out, mu);
        }
    }
    out
}

/// Vertical vector field `Σ Q^a ∂/∂u^a`, prolonged as `Σ D_I Q^a ∂/∂u^a_I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvolutionaryField {
    characteristics: Vec<Expr>,
}

impl EvolutionaryField {
    /// One characteristic per field of the signature.
    pub fn new(characteristics: Vec<Expr>, sig: &BundleSignature) -> Result<Self, JetError> {
        let expected = sig.field_names().len();
        if characteristics.len() != expected {
            return Err(JetError::SectionArity { expected, got: characteristics.len() });
        }
        Ok(EvolutionaryField { characteristics })
    }

    pub fn zero(sig: &BundleSignature) -> Self {
        EvolutionaryField { characteristics: vec![Expr::zero(); sig.field_names().len()] }
    }

    pub fn characteristic(&self, field: usize) -> &Expr {
        &self.characteristics[field]
    }

    pub fn characteristics(&self) -> &[Expr] {
        &self.characteristics
    }

    pub fn is_zero(&self) -> bool {
        self.characteristics.iter().all(Expr::is_zero)
    }

    pub fn order(&self) -> u32 {
        self.characteristics.iter().map(Expr::order).max().unwrap_or(0)
    }
}

/// `pr Q (e) = Σ_{a,I} D_I Q^a · ∂e/∂u^a_I`, summed over the jet coordinates
/// occurring in `e`.
pub fn apply_prolonged(q: &EvolutionaryField, e: &Expr) -> Expr {
    e.jet_vars()
        .into_iter()
        .filter(|j| !q.characteristics[j.field].is_zero())
        .map(|j| {
            let coeff = iterated_total_derivative(&q.characteristics[j.field], &j.index);
            &coeff * &e.partial(&Var::Jet(j))
        })
        .sum()
}

/// A local section `x ↦ (x, φ(x))` with components in base coordinates only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    components: Vec<Expr>,
}

impl Section {
    pub fn new(components: Vec<Expr>, sig: &BundleSignature) -> Result<Self, JetError> {
        let expected = sig.field_names().len();
        if components.len() != expected {
            return Err(JetError::SectionArity { expected, got: components.len() });
        }
        for (c, name) in components.iter().zip(sig.field_names()) {
            if !c.jet_vars().is_empty() {
                return Err(JetError::SectionNotBasic(name.clone()));
            }
        }
        Ok(Section { components })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// `∂_I φ^a` as an expression in the base coordinates.
    pub fn derivative(&self, jet: &JetVar) -> Expr {
        let mut out = self.components[jet.field].clone();
        for (mu, &count) in jet.index.counts().iter().enumerate() {
            for _ in 0..count {
                out = out.partial(&Var::Base(mu));
            }
        }
        out
    }

    /// Substitute `u^a_I ↦ ∂_I φ^a`, leaving an expression in the base.
    pub fn pull_back(&self, e: &Expr) -> Result<Expr, DivisionByZero> {
        e.substitute(&mut |v| match v {
            Var::Jet(j) => Some(self.derivative(j)),
            Var::Base(_) => None,
        })
    }
}

/// Evaluate `e ∘ j^∞φ` at a base point: substitute the section and all of its
/// derivatives, then evaluate.
pub fn evaluate_on_section(
    e: &Expr,
    section: &Section,
    point: &[Rational],
    params: &BTreeMap<String, f64>,
) -> Result<f64, JetError> {
    let pulled = section.pull_back(e)?;
    let xs: Vec<f64> = point.iter().map(|r| num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)).collect();
    Ok(pulled.eval(
        &|v| match v {
            Var::Base(mu) => xs.get(*mu).copied(),
            Var::Jet(_) => None,
        },
        &|p| params.get(p).copied(),
    )?)
}

/// A point of `J^kπ`: base point and every jet coordinate with `|I| ≤ k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetPoint {
    pub base: Vec<Rational>,
    pub coords: BTreeMap<JetVar, Rational>,
    pub order: u32,
}

impl JetPoint {
    pub fn get(&self, jet: &JetVar) -> Option<&Rational> {
        self.coords.get(jet)
    }

    /// True iff `coords` holds exactly the jet coordinates of order `≤ k`.
    pub fn is_well_formed(&self, sig: &BundleSignature) -> bool {
        let expected = sig.jet_coordinates(self.order);
        self.base.len() == sig.base_dim()
            && self.coords.len() == expected.len()
            && expected.iter().all(|j| self.coords.contains_key(j))
    }

    pub fn to_json(&self, sig: &BundleSignature) -> serde_json::Value {
        let base: serde_json::Map<_, _> = sig
            .base_names()
            .iter()
            .zip(&self.base)
            .map(|(n, v)| (n.clone(), serde_json::Value::String(rational_text(v))))
            .collect();
        let coords: serde_json::Map<_, _> = self
            .coords
            .iter()
            .map(|(j, v)| (sig.jet_name(j), serde_json::Value::String(rational_text(v))))
            .collect();
        serde_json::json!({ "base": base, "coords": coords, "order": self.order })
    }

    pub fn from_json(value: &serde_json::Value, sig: &BundleSignature) -> Option<JetPoint> {
        let wire: JetPointWire = serde_json::from_value(value.clone()).ok()?;
        let mut base = Vec::with_capacity(sig.base_dim());
        for name in sig.base_names() {
            base.push(parse_rational(wire.base.get(name)?)?);
        }
        let mut coords = BTreeMap::new();
        for (name, v) in &wire.coords {
            let Var::Jet(j) = sig.parse_coordinate(name).ok()? else { return None };
            coords.insert(j, parse_rational(v)?);
        }
        let point = JetPoint { base, coords, order: wire.order };
        point.is_well_formed(sig).then_some(point)
    }
}

#[derive(Serialize, Deserialize)]
struct JetPointWire {
    base: BTreeMap<String, String>,
    coords: BTreeMap<String, String>,
    order: u32,
}

pub(crate) fn rational_text(r: &Rational) -> String {
    if r.denom() == &1.into() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn parse_rational(s: &str) -> Option<Rational> {
    match s.split_once('/') {
        Some((p, q)) => {
            let q: num_bigint::BigInt = q.trim().parse().ok()?;
            if q == 0.into() {
                return None;
            }
            Some(Rational::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational::from_integer(s.trim().parse().ok()?)),
    }
}

/// `π^k_l`: drop every coordinate of order above `l`.
pub fn tower_project(p: &JetPoint, l: u32) -> Result<JetPoint, JetError> {
    if l > p.order {
        return Err(JetError::ProjectionOrder { from: p.order, to: l });
    }
    Ok(JetPoint {
        base: p.base.clone(),
        coords: p.coords.iter().filter(|(j, _)| j.order() <= l).map(|(j, v)| (j.clone(), v.clone())).collect(),
        order: l,
    })
}

/// `j^kφ(x)`: the section and its derivatives up to order `k`, exactly.
pub fn jet_prolong_section(
    section: &Section,
    point: &[Rational],
    k: u32,
    sig: &BundleSignature,
) -> Result<JetPoint, JetError> {
    let env = |v: &Var| match v {
        Var::Base(mu) => point.get(*mu).cloned(),
        Var::Jet(_) => None,
    };
    let mut coords = BTreeMap::new();
    for jet in sig.jet_coordinates(k) {
        let value = section.derivative(&jet).eval_rational(&env)?;
        coords.insert(jet, value);
    }
    Ok(JetPoint { base: point.to_vec(), coords, order: k })
}
