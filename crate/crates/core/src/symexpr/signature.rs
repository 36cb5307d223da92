//! Adapted coordinates on a trivial bundle `M × F → M`: base coordinates
//! `x^μ`, fibre coordinates `u^a`, their jets `u^a_I`, and named parameters.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Symmetric derivative multi-index stored as per-direction counts.
///
/// Because only the counts are stored, `u_xt` and `u_tx` are the same
/// coordinate and symmetry of mixed partials never has to be rewritten.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        MultiIndex(counts)
    }

    /// The index of a single derivative in direction `mu`.
    pub fn unit(dim: usize, mu: usize) -> Self {
        let mut counts = vec![0; dim];
        counts[mu] = 1;
        MultiIndex(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|I|`, the total number of derivatives.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `I + μ`.
    pub fn raised(&self, mu: usize) -> Self {
        let mut counts = self.0.clone();
        counts[mu] += 1;
        MultiIndex(counts)
    }

    /// `I - μ`, if `I` has a derivative in direction `mu`.
    pub fn lowered(&self, mu: usize) -> Option<Self> {
        if self.0[mu] == 0 {
            return None;
        }
        let mut counts = self.0.clone();
        counts[mu] -= 1;
        Some(MultiIndex(counts))
    }

    /// Smallest direction carrying a derivative.
    pub fn first_direction(&self) -> Option<usize> {
        self.0.iter().position(|&c| c > 0)
    }

    /// Componentwise `self ≥ other`.
    pub fn contains(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// Componentwise difference; caller guarantees `self.contains(other)`.
    pub fn minus(&self, other: &MultiIndex) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `∏_μ C(I_μ, J_μ)`.
    pub fn binomial(&self, sub: &MultiIndex) -> u64 {
        self.0
            .iter()
            .zip(&sub.0)
            .map(|(&n, &k)| binomial(n as u64, k as u64))
            .product()
    }

    /// Every sub-index `J ≤ I` componentwise.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.0.len())];
        for &c in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (c as usize + 1));
            for prefix in &out {
                for k in 0..=c {
                    let mut v: Vec<u32> = prefix.clone();
                    v.push(k);
                    next.push(v);
                }
            }
            out = next;
        }
        let mut out: Vec<MultiIndex> = out.into_iter().map(MultiIndex).collect();
        out.sort();
        out
    }

    /// All multi-indices of `dim` directions with `|I| ≤ max_order`, in
    /// canonical order (graded, earlier directions first).
    pub fn all_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            let mut level = Vec::new();
            compositions(dim, order, &mut Vec::new(), &mut level);
            let mut level: Vec<MultiIndex> = level.into_iter().map(MultiIndex).collect();
            level.sort();
            out.extend(level);
        }
        out
    }
}

fn compositions(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == dim {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    if dim == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in 0..=remaining {
        prefix.push(k);
        compositions(dim, remaining - k, prefix, out);
        prefix.pop();
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A jet coordinate `u^a_I`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JetVar {
    pub field: usize,
    pub index: MultiIndex,
}

impl JetVar {
    pub fn new(field: usize, index: MultiIndex) -> Self {
        JetVar { field, index }
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }

    pub fn raised(&self, mu: usize) -> Self {
        JetVar::new(self.field, self.index.raised(mu))
    }
}

/// A coordinate function on the jet bundle.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    Base(usize),
    Jet(JetVar),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("base dimension must be at least 1")]
    NoBase,
    #[error("at least one field is required")]
    NoFields,
    #[error("invalid identifier `{0}`")]
    BadIdentifier(String),
    #[error("name `{0}` is declared twice")]
    Duplicate(String),
    #[error("name `{0}` is reserved")]
    Reserved(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
}

pub(crate) const RESERVED: [&str; 4] = ["sin", "cos", "exp", "log"];

/// Names of base coordinates, fields and parameters of a trivial bundle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSignature {
    base: Vec<String>,
    fields: Vec<String>,
    params: Vec<String>,
}

impl BundleSignature {
    pub fn new<S: AsRef<str>>(base: &[S], fields: &[S], params: &[S]) -> Result<Self, SignatureError> {
        if fields.is_empty() {
            return Err(SignatureError::NoFields);
        }
        Self::build(base, fields, params)
    }

    /// Coordinates of a Euclidean domain: base names only, no fibre.
    pub fn base_chart<S: AsRef<str>>(base: &[S]) -> Result<Self, SignatureError> {
        Self::build::<S>(base, &[], &[])
    }

    /// A chart on `R^n` with coordinates `x1, ..., xn`.
    pub fn numbered_chart(dim: usize) -> Self {
        let names: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        BundleSignature { base: names, fields: Vec::new(), params: Vec::new() }
    }

    fn build<S: AsRef<str>>(base: &[S], fields: &[S], params: &[S]) -> Result<Self, SignatureError> {
        if base.is_empty() {
            return Err(SignatureError::NoBase);
        }
        let to_vec = |xs: &[S]| xs.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>();
        let sig = BundleSignature { base: to_vec(base), fields: to_vec(fields), params: to_vec(params) };
        let mut seen = std::collections::BTreeSet::new();
        for name in sig.base.iter().chain(&sig.fields).chain(&sig.params) {
            if !is_identifier(name) {
                return Err(SignatureError::BadIdentifier(name.clone()));
            }
            if RESERVED.contains(&name.as_str()) {
                return Err(SignatureError::Reserved(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(SignatureError::Duplicate(name.clone()));
            }
        }
        Ok(sig)
    }

    pub fn base_dim(&self) -> usize {
        self.base.len()
    }

    pub fn base_names(&self) -> &[String] {
        &self.base
    }

    pub fn field_names(&self) -> &[String] {
        &self.fields
    }

    pub fn param_names(&self) -> &[String] {
        &self.params
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.base.iter().position(|b| b == name)
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == name)
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| p == name)
    }

    /// Every jet coordinate with `|I| ≤ order`, ordered by index then field,
    /// so the coordinates of a lower order form a prefix.
    pub fn jet_coordinates(&self, order: u32) -> Vec<JetVar> {
        let mut out = Vec::new();
        for index in MultiIndex::all_up_to(self.base_dim(), order) {
            for field in 0..self.fields.len() {
                out.push(JetVar::new(field, index.clone()));
            }
        }
        out
    }

    /// Render a jet coordinate as `u_xxt` (subscript in base order).
    pub fn jet_name(&self, jet: &JetVar) -> String {
        let mut s = self.fields[jet.field].clone();
        if !jet.index.is_zero() {
            s.push('_');
            for (mu, &c) in jet.index.counts().iter().enumerate() {
                for _ in 0..c {
                    s.push_str(&self.base[mu]);
                }
            }
        }
        s
    }

    pub fn var_name(&self, var: &Var) -> String {
        match var {
            Var::Base(mu) => self.base[*mu].clone(),
            Var::Jet(j) => self.jet_name(j),
        }
    }

    /// Split a derivative subscript such as `xxt` into base directions.
    ///
    /// Returns `None` if the subscript has no segmentation or more than one.
    pub fn split_subscript(&self, subscript: &str) -> Option<MultiIndex> {
        let n = subscript.len();
        // ways[i]: number of segmentations of subscript[i..], capped at 2
        let mut ways = vec![0u8; n + 1];
        let mut choice = vec![usize::MAX; n + 1];
        ways[n] = 1;
        for i in (0..n).rev() {
            for (mu, name) in self.base.iter().enumerate() {
                if subscript[i..].starts_with(name.as_str()) && ways[i + name.len()] > 0 {
                    ways[i] = (ways[i] + ways[i + name.len()]).min(2);
                    choice[i] = mu;
                }
            }
        }
        if n == 0 || ways[0] != 1 {
            return None;
        }
        let mut counts = vec![0; self.base_dim()];
        let mut i = 0;
        while i < n {
            let mu = choice[i];
            counts[mu] += 1;
            i += self.base[mu].len();
        }
        Some(MultiIndex(counts))
    }

    /// Parse a coordinate name (`x`, `u`, `u_xt`).
    pub fn parse_coordinate(&self, name: &str) -> Result<Var, SignatureError> {
        let unknown = || SignatureError::UnknownCoordinate(name.to_string());
        if let Some(mu) = self.base_index(name) {
            return Ok(Var::Base(mu));
        }
        let (field, sub) = match name.split_once('_') {
            Some((f, s)) => (f, Some(s)),
            None => (name, None),
        };
        let field = self.field_index(field).ok_or_else(unknown)?;
        let index = match sub {
            None => MultiIndex::zero(self.base_dim()),
            Some(s) => self.split_subscript(s).ok_or_else(unknown)?,
        };
        Ok(Var::Jet(JetVar::new(field, index)))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric())
}
