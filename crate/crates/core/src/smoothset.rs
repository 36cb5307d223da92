//! Smooth sets presented by plots: each object says which symbolic witnesses
//! are `U`-plots and how they restrict along smooth maps.
//!
//! Plot domains are finite unions of open boxes in `R^n`. Range conditions
//! and smoothness of elementary witnesses are checked by sampling, not proved.

use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::bicomplex::DeRhamForm;
use crate::jetcalc::{rational_text, JetPoint};
use crate::symexpr::{BundleSignature, Expr, Rational, Var};

/// Points sampled per box when checking that a map lands in its target.
pub const RANGE_SAMPLES: usize = 1000;
/// Points sampled per box when checking that a witness is finite on a domain.
pub const PLOT_SAMPLES: usize = 64;

const SAMPLE_SEED: u64 = 0x5a3d_17e5;
const UNBOUNDED_REACH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothSetError {
    #[error("box side ({0}, {1}) is empty")]
    EmptySide(String, String),
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression uses `{0}`, which is not a coordinate of the source domain")]
    ForeignVariable(String),
    #[error("map leaves its target at {0:?}")]
    OutOfRange(Vec<f64>),
    #[error("map is not finite at {0:?}")]
    NotSmooth(Vec<f64>),
    #[error("maps are not composable")]
    NonComposable,
    #[error("witness does not match the object: {0}")]
    Shape(String),
    #[error("substitution divides by zero")]
    Singular,
}

/// An open interval; `None` marks an infinite end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

impl Interval {
    pub fn new(lo: Option<Rational>, hi: Option<Rational>) -> Result<Self, SmoothSetError> {
        if let (Some(a), Some(b)) = (&lo, &hi) {
            if a >= b {
                return Err(SmoothSetError::EmptySide(rational_text(a), rational_text(b)));
            }
        }
        Ok(Interval { lo, hi })
    }

    pub fn line() -> Self {
        Interval { lo: None, hi: None }
    }

    fn contains(&self, x: f64) -> bool {
        self.lo.as_ref().is_none_or(|a| to_f64(a) < x) && self.hi.as_ref().is_none_or(|b| x < to_f64(b))
    }

    fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        Interval::new(lo, hi).ok()
    }

    fn sample(&self, t: f64) -> f64 {
        match (&self.lo, &self.hi) {
            (Some(a), Some(b)) => to_f64(a) + (to_f64(b) - to_f64(a)) * t,
            (Some(a), None) => to_f64(a) + UNBOUNDED_REACH * t,
            (None, Some(b)) => to_f64(b) - UNBOUNDED_REACH * t,
            (None, None) => UNBOUNDED_REACH * (2.0 * t - 1.0),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let end = |r: &Option<Rational>| r.as_ref().map_or(serde_json::Value::Null, |r| json!(rational_text(r)));
        json!([end(&self.lo), end(&self.hi)])
    }
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// An open axis-aligned box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cuboid {
    pub sides: Vec<Interval>,
}

impl Cuboid {
    fn contains(&self, p: &[f64]) -> bool {
        self.sides.iter().zip(p).all(|(s, x)| s.contains(*x))
    }
}

/// A finite union of open boxes in `R^n`; `n = 0` is the one-point domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotDomain {
    dim: usize,
    boxes: Vec<Cuboid>,
}

impl PlotDomain {
    pub fn euclidean(dim: usize) -> Self {
        PlotDomain { dim, boxes: vec![Cuboid { sides: vec![Interval::line(); dim] }] }
    }

    pub fn point() -> Self {
        PlotDomain::euclidean(0)
    }

    pub fn empty(dim: usize) -> Self {
        PlotDomain { dim, boxes: Vec::new() }
    }

    pub fn interval(lo: Rational, hi: Rational) -> Result<Self, SmoothSetError> {
        Ok(PlotDomain { dim: 1, boxes: vec![Cuboid { sides: vec![Interval::new(Some(lo), Some(hi))?] }] })
    }

    pub fn cuboid(sides: Vec<Interval>) -> Self {
        PlotDomain { dim: sides.len(), boxes: vec![Cuboid { sides }] }
    }

    pub fn union(dim: usize, boxes: Vec<Cuboid>) -> Result<Self, SmoothSetError> {
        if let Some(b) = boxes.iter().find(|b| b.sides.len() != dim) {
            return Err(SmoothSetError::DimensionMismatch { expected: dim, got: b.sides.len() });
        }
        Ok(PlotDomain { dim, boxes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[Cuboid] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim && self.boxes.iter().any(|b| b.contains(p))
    }

    pub fn intersection(&self, other: &PlotDomain) -> Result<PlotDomain, SmoothSetError> {
        if self.dim != other.dim {
            return Err(SmoothSetError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut boxes = Vec::new();
        for a in &self.boxes {
            for b in &other.boxes {
                let sides: Option<Vec<_>> = a.sides.iter().zip(&b.sides).map(|(x, y)| x.intersect(y)).collect();
                if let Some(sides) = sides {
                    boxes.push(Cuboid { sides });
                }
            }
        }
        Ok(PlotDomain { dim: self.dim, boxes })
    }

    pub fn product(&self, other: &PlotDomain) -> PlotDomain {
        let mut boxes = Vec::new();
        for a in &self.boxes {
            for b in &other.boxes {
                boxes.push(Cuboid { sides: a.sides.iter().chain(&b.sides).cloned().collect() });
            }
        }
        PlotDomain { dim: self.dim + other.dim, boxes }
    }

    /// Deterministic interior sample points, `per_box` in each box.
    pub fn samples(&self, per_box: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        let mut out = Vec::with_capacity(per_box * self.boxes.len());
        for b in &self.boxes {
            for _ in 0..per_box {
                let p: Vec<f64> = b.sides.iter().map(|s| s.sample(rng.gen_range(1e-6..1.0 - 1e-6))).collect();
                out.push(p);
                if self.dim == 0 {
                    break;
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let boxes: Vec<_> =
            self.boxes.iter().map(|b| serde_json::Value::Array(b.sides.iter().map(Interval::to_json).collect())).collect();
        json!({ "dim": self.dim, "boxes": boxes })
    }
}

fn eval_at(e: &Expr, p: &[f64]) -> Option<f64> {
    e.eval(&|v| match v {
        Var::Base(i) => p.get(*i).copied(),
        Var::Jet(_) => None,
    }, &|_| None)
    .ok()
}

fn check_coordinates(e: &Expr, dim: usize) -> Result<(), SmoothSetError> {
    if let Some(p) = e.params().into_iter().next() {
        return Err(SmoothSetError::ForeignVariable(p.to_string()));
    }
    for v in e.vars() {
        match v {
            Var::Base(i) if i < dim => {}
            Var::Base(i) => return Err(SmoothSetError::ForeignVariable(format!("x{}", i + 1))),
            Var::Jet(_) => return Err(SmoothSetError::ForeignVariable("a jet coordinate".into())),
        }
    }
    Ok(())
}

fn substitute_base(e: &Expr, f: &dyn Fn(usize) -> Expr) -> Result<Expr, SmoothSetError> {
    e.substitute(&mut |v| match v {
        Var::Base(i) => Some(f(*i)),
        Var::Jet(_) => None,
    })
    .map_err(|_| SmoothSetError::Singular)
}

/// A smooth map between plot domains with expression components in the
/// source coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothMap {
    source: PlotDomain,
    target: PlotDomain,
    components: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(source: PlotDomain, target: PlotDomain, components: Vec<Expr>) -> Result<Self, SmoothSetError> {
        if components.len() != target.dim {
            return Err(SmoothSetError::DimensionMismatch { expected: target.dim, got: components.len() });
        }
        for c in &components {
            check_coordinates(c, source.dim)?;
        }
        for p in source.samples(RANGE_SAMPLES) {
            let image: Option<Vec<f64>> = components.iter().map(|c| eval_at(c, &p).filter(|y| y.is_finite())).collect();
            let Some(image) = image else { return Err(SmoothSetError::NotSmooth(p)) };
            if !target.contains(&image) {
                return Err(SmoothSetError::OutOfRange(p));
            }
        }
        Ok(SmoothMap { source, target, components })
    }

    pub fn identity(domain: PlotDomain) -> Self {
        let components = (0..domain.dim).map(Expr::base).collect();
        SmoothMap { source: domain.clone(), target: domain, components }
    }

    /// The inclusion of `sub` into `domain`.
    pub fn inclusion(sub: PlotDomain, domain: PlotDomain) -> Result<Self, SmoothSetError> {
        let components = (0..sub.dim).map(Expr::base).collect();
        SmoothMap::new(sub, domain, components)
    }

    /// The unique map to the one-point domain.
    pub fn terminal(domain: PlotDomain) -> Self {
        SmoothMap { source: domain, target: PlotDomain::point(), components: Vec::new() }
    }

    pub fn source(&self) -> &PlotDomain {
        &self.source
    }

    pub fn target(&self) -> &PlotDomain {
        &self.target
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// `psi ∘ self`.
    pub fn then(&self, psi: &SmoothMap) -> Result<SmoothMap, SmoothSetError> {
        if self.target.dim != psi.source.dim {
            return Err(SmoothSetError::NonComposable);
        }
        if self.target != psi.source {
            SmoothMap::new(self.source.clone(), psi.source.clone(), self.components.clone())
                .map_err(|_| SmoothSetError::NonComposable)?;
        }
        let components = psi
            .components
            .iter()
            .map(|c| substitute_base(c, &|i| self.components[i].clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SmoothMap { source: self.source.clone(), target: psi.target.clone(), components })
    }
}

/// Pointwise map between tower levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TowerMap {
    Identity,
    /// Keep the first `n` components of a representable plot.
    Truncate(usize),
}

impl TowerMap {
    fn apply(&self, w: &PlotWitness) -> Result<PlotWitness, SmoothSetError> {
        match (self, w) {
            (TowerMap::Identity, _) => Ok(w.clone()),
            (TowerMap::Truncate(n), PlotWitness::Map(c)) if c.len() >= *n => Ok(PlotWitness::Map(c[..*n].to_vec())),
            _ => Err(SmoothSetError::Shape("truncation applies to representable plots".into())),
        }
    }
}

/// A symbolic `U`-plot of some smooth set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlotWitness {
    /// `U → R^n`.
    Map(Vec<Expr>),
    Pair(Box<PlotWitness>, Box<PlotWitness>),
    /// `U × M → N`, coordinates of `U` first.
    ExponentialMap(Vec<Expr>),
    /// `F : U × M → fibre`, the family of sections `σ_u(x) = F(u, x)`.
    SectionFamily(Vec<Expr>),
    /// A differential form on `U`.
    Form(DeRhamForm),
    /// One plot per tower level.
    TowerSequence(Vec<PlotWitness>),
    /// A plot of the covering object representing a quotient plot.
    QuotientLift(Box<PlotWitness>),
}

impl PlotWitness {
    pub fn pair(a: PlotWitness, b: PlotWitness) -> Self {
        PlotWitness::Pair(Box::new(a), Box::new(b))
    }

    /// The same witness with every power of a sum multiplied out, so that
    /// equal polynomial plots compare equal.
    pub fn expanded(&self) -> PlotWitness {
        let all = |cs: &[Expr]| cs.iter().map(Expr::expand_all).collect::<Vec<_>>();
        match self {
            PlotWitness::Map(c) => PlotWitness::Map(all(c)),
            PlotWitness::ExponentialMap(c) => PlotWitness::ExponentialMap(all(c)),
            PlotWitness::SectionFamily(c) => PlotWitness::SectionFamily(all(c)),
            PlotWitness::Pair(a, b) => PlotWitness::pair(a.expanded(), b.expanded()),
            PlotWitness::Form(f) => PlotWitness::Form(f.map_coefficients(Expr::expand_all)),
            PlotWitness::TowerSequence(ws) => PlotWitness::TowerSequence(ws.iter().map(PlotWitness::expanded).collect()),
            PlotWitness::QuotientLift(w) => PlotWitness::QuotientLift(Box::new(w.expanded())),
        }
    }

    /// Serialize with coordinates named `x1, x2, …`.
    pub fn to_json(&self) -> serde_json::Value {
        let chart = BundleSignature::numbered_chart(self.max_coordinate());
        self.to_json_with(&chart)
    }

    fn max_coordinate(&self) -> usize {
        let of = |cs: &[Expr]| {
            cs.iter()
                .flat_map(|c| c.vars())
                .filter_map(|v| if let Var::Base(i) = v { Some(i + 1) } else { None })
                .max()
                .unwrap_or(0)
        };
        match self {
            PlotWitness::Map(c) | PlotWitness::ExponentialMap(c) | PlotWitness::SectionFamily(c) => of(c),
            PlotWitness::Pair(a, b) => a.max_coordinate().max(b.max_coordinate()),
            PlotWitness::Form(f) => f.dim().max(of(&f.terms().map(|(_, c)| c.clone()).collect::<Vec<_>>())),
            PlotWitness::TowerSequence(ws) => ws.iter().map(PlotWitness::max_coordinate).max().unwrap_or(0),
            PlotWitness::QuotientLift(w) => w.max_coordinate(),
        }
    }

    fn to_json_with(&self, chart: &BundleSignature) -> serde_json::Value {
        let texts = |cs: &[Expr]| cs.iter().map(|c| c.to_text(chart)).collect::<Vec<_>>();
        match self {
            PlotWitness::Map(c) => json!({ "map": texts(c) }),
            PlotWitness::Pair(a, b) => json!({ "pair": [a.to_json_with(chart), b.to_json_with(chart)] }),
            PlotWitness::ExponentialMap(c) => json!({ "exponential_map": texts(c) }),
            PlotWitness::SectionFamily(c) => json!({ "section_family": texts(c) }),
            PlotWitness::Form(f) => {
                let terms: Vec<_> = f
                    .terms()
                    .map(|(idx, c)| json!({ "d": idx.iter().map(|&i| chart.base_names()[i].clone()).collect::<Vec<_>>(), "coeff": c.to_text(chart) }))
                    .collect();
                json!({ "form": { "degree": f.degree(), "terms": terms } })
            }
            PlotWitness::TowerSequence(ws) => json!({ "tower": ws.iter().map(|w| w.to_json_with(chart)).collect::<Vec<_>>() }),
            PlotWitness::QuotientLift(w) => json!({ "lift": w.to_json_with(chart) }),
        }
    }
}

type RelationFn = dyn Fn(&PlotDomain, &PlotWitness, &PlotWitness) -> bool + Send + Sync;

/// Equality oracle on lifts for a quotient object.
#[derive(Clone)]
pub struct Relation {
    name: String,
    test: Arc<RelationFn>,
}

impl Relation {
    pub fn new(name: &str, test: impl Fn(&PlotDomain, &PlotWitness, &PlotWitness) -> bool + Send + Sync + 'static) -> Self {
        Relation { name: name.to_string(), test: Arc::new(test) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn related(&self, domain: &PlotDomain, a: &PlotWitness, b: &PlotWitness) -> bool {
        (self.test)(domain, a, b)
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation({})", self.name)
    }
}

/// A smooth set as a tree of combinators.
#[derive(Clone, Debug)]
pub enum SmoothSet {
    Representable(usize),
    Product(Box<SmoothSet>, Box<SmoothSet>),
    Exponential { source: PlotDomain, target: PlotDomain },
    Sections { sig: BundleSignature, window: PlotDomain },
    Forms(usize),
    Tower { levels: Vec<SmoothSet>, projections: Vec<TowerMap> },
    Quotient { cover: Box<SmoothSet>, relation: Relation },
}

/// The points `X(R^0)` of a smooth set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointSet {
    Finite(Vec<PlotWitness>),
    /// Described by a membership predicate: a witness is a point iff it is a
    /// plot over the one-point domain.
    Predicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Concreteness {
    Concrete,
    /// A plot that differs from another plot with the same underlying map
    /// into points.
    NonConcrete { domain: PlotDomain, witness: PlotWitness, same_points_as: PlotWitness },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointsReport {
    pub points: PointSet,
    pub concreteness: Concreteness,
}

impl PointsReport {
    pub fn to_json(&self) -> serde_json::Value {
        let points = match &self.points {
            PointSet::Finite(ws) => json!({ "finite": ws.iter().map(PlotWitness::to_json).collect::<Vec<_>>() }),
            PointSet::Predicate(d) => json!({ "predicate": d }),
        };
        let concreteness = match &self.concreteness {
            Concreteness::Concrete => json!("concrete"),
            Concreteness::NonConcrete { domain, witness, same_points_as } => json!({
                "non_concrete": { "domain": domain.to_json(), "witness": witness.to_json(), "same_points_as": same_points_as.to_json() }
            }),
        };
        json!({ "points": points, "concreteness": concreteness })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlueError {
    #[error("cover has {0} pieces but {1} witnesses were given")]
    Arity(usize, usize),
    #[error("cover is empty")]
    EmptyCover,
    #[error("witness {0} is not a plot on its piece: {1}")]
    NotAPlot(usize, String),
    #[error("witnesses {i} and {j} disagree on their overlap{}", describe_point(.point))]
    Incompatible { i: usize, j: usize, point: Option<Vec<f64>> },
    #[error("pieces agree on overlaps but differ as expressions; piecewise gluing is not supported")]
    Unsupported,
    #[error(transparent)]
    Domain(#[from] SmoothSetError),
}

fn describe_point(point: &Option<Vec<f64>>) -> String {
    match point {
        Some(p) => format!(" at {p:?}"),
        None => " (they differ symbolically but no sampled point separates them)".into(),
    }
}

impl SmoothSet {
    pub fn representable(n: usize) -> Self {
        SmoothSet::Representable(n)
    }

    pub fn product(a: SmoothSet, b: SmoothSet) -> Self {
        SmoothSet::Product(Box::new(a), Box::new(b))
    }

    pub fn exponential(source: PlotDomain, target: PlotDomain) -> Self {
        SmoothSet::Exponential { source, target }
    }

    pub fn sections_sheaf(sig: BundleSignature, window: PlotDomain) -> Result<Self, SmoothSetError> {
        if window.dim != sig.base_dim() {
            return Err(SmoothSetError::DimensionMismatch { expected: sig.base_dim(), got: window.dim });
        }
        Ok(SmoothSet::Sections { sig, window })
    }

    pub fn forms_sheaf(p: usize) -> Self {
        SmoothSet::Forms(p)
    }

    /// `projections[k]` maps level `k + 1` to level `k`.
    pub fn tower_limit(levels: Vec<SmoothSet>, projections: Vec<TowerMap>) -> Result<Self, SmoothSetError> {
        if levels.is_empty() || projections.len() + 1 != levels.len() {
            return Err(SmoothSetError::Shape("a tower needs one projection between consecutive levels".into()));
        }
        Ok(SmoothSet::Tower { levels, projections })
    }

    pub fn quotient(cover: SmoothSet, relation: Relation) -> Self {
        SmoothSet::Quotient { cover: Box::new(cover), relation }
    }

    /// The exponential object a sections sheaf of a trivial bundle coincides with.
    pub fn as_exponential(&self) -> Option<SmoothSet> {
        match self {
            SmoothSet::Sections { sig, window } => {
                Some(SmoothSet::exponential(window.clone(), PlotDomain::euclidean(sig.field_names().len())))
            }
            _ => None,
        }
    }

    /// Witness-checking membership `w ∈ X(U)`.
    pub fn check_plot(&self, domain: &PlotDomain, w: &PlotWitness) -> Result<(), SmoothSetError> {
        let finite_on = |cs: &[Expr], dom: &PlotDomain, target: Option<&PlotDomain>| -> Result<(), SmoothSetError> {
            for c in cs {
                check_coordinates(c, dom.dim)?;
            }
            for p in dom.samples(PLOT_SAMPLES) {
                let values: Option<Vec<f64>> = cs.iter().map(|c| eval_at(c, &p).filter(|y| y.is_finite())).collect();
                let Some(values) = values else { return Err(SmoothSetError::NotSmooth(p)) };
                if target.is_some_and(|t| !t.contains(&values)) {
                    return Err(SmoothSetError::OutOfRange(p));
                }
            }
            Ok(())
        };
        match (self, w) {
            (SmoothSet::Representable(n), PlotWitness::Map(c)) => {
                if c.len() != *n {
                    return Err(SmoothSetError::DimensionMismatch { expected: *n, got: c.len() });
                }
                finite_on(c, domain, None)
            }
            (SmoothSet::Product(a, b), PlotWitness::Pair(wa, wb)) => {
                a.check_plot(domain, wa)?;
                b.check_plot(domain, wb)
            }
            (SmoothSet::Exponential { source, target }, PlotWitness::ExponentialMap(c)) => {
                if c.len() != target.dim {
                    return Err(SmoothSetError::DimensionMismatch { expected: target.dim, got: c.len() });
                }
                finite_on(c, &domain.product(source), Some(target))
            }
            (SmoothSet::Sections { .. }, PlotWitness::SectionFamily(c)) => {
                let exp = self.as_exponential().expect("sections sheaf");
                exp.check_plot(domain, &PlotWitness::ExponentialMap(c.clone()))
            }
            (SmoothSet::Forms(p), PlotWitness::Form(f)) => {
                if f.dim() != domain.dim {
                    return Err(SmoothSetError::DimensionMismatch { expected: domain.dim, got: f.dim() });
                }
                if f.degree() != *p {
                    return Err(SmoothSetError::Shape(format!("a {}-form is not a {p}-form", f.degree())));
                }
                let coeffs: Vec<Expr> = f.terms().map(|(_, c)| c.clone()).collect();
                finite_on(&coeffs, domain, None)
            }
            (SmoothSet::Tower { levels, projections }, PlotWitness::TowerSequence(ws)) => {
                if ws.len() != levels.len() {
                    return Err(SmoothSetError::DimensionMismatch { expected: levels.len(), got: ws.len() });
                }
                for (level, w) in levels.iter().zip(ws) {
                    level.check_plot(domain, w)?;
                }
                for (k, proj) in projections.iter().enumerate() {
                    let down = proj.apply(&ws[k + 1])?;
                    if !levels[k].same_plot(domain, &down, &ws[k]) {
                        return Err(SmoothSetError::Shape(format!("levels {} and {k} do not commute with the projection", k + 1)));
                    }
                }
                Ok(())
            }
            (SmoothSet::Quotient { cover, .. }, PlotWitness::QuotientLift(w)) => cover.check_plot(domain, w),
            _ => Err(SmoothSetError::Shape(format!("{} plot for {}", witness_kind(w), self.kind()))),
        }
    }

    pub fn is_plot(&self, domain: &PlotDomain, w: &PlotWitness) -> bool {
        self.check_plot(domain, w).is_ok()
    }

    fn kind(&self) -> &'static str {
        match self {
            SmoothSet::Representable(_) => "representable",
            SmoothSet::Product(..) => "product",
            SmoothSet::Exponential { .. } => "exponential",
            SmoothSet::Sections { .. } => "sections",
            SmoothSet::Forms(_) => "forms",
            SmoothSet::Tower { .. } => "tower",
            SmoothSet::Quotient { .. } => "quotient",
        }
    }

    /// `X(φ)(w)` for `φ : U' → U` and a `U`-plot `w`.
    pub fn restrict(&self, phi: &SmoothMap, w: &PlotWitness) -> Result<PlotWitness, SmoothSetError> {
        let along = |c: &Expr| substitute_base(c, &|i| phi.components[i].clone());
        let parametrised = |cs: &[Expr]| -> Result<Vec<Expr>, SmoothSetError> {
            let (k, k2) = (phi.target.dim, phi.source.dim);
            cs.iter()
                .map(|c| substitute_base(c, &|i| if i < k { phi.components[i].clone() } else { Expr::base(i - k + k2) }))
                .collect()
        };
        match (self, w) {
            (SmoothSet::Representable(_), PlotWitness::Map(c)) => Ok(PlotWitness::Map(c.iter().map(along).collect::<Result<_, _>>()?)),
            (SmoothSet::Product(a, b), PlotWitness::Pair(wa, wb)) => Ok(PlotWitness::pair(a.restrict(phi, wa)?, b.restrict(phi, wb)?)),
            (SmoothSet::Exponential { .. }, PlotWitness::ExponentialMap(c)) => Ok(PlotWitness::ExponentialMap(parametrised(c)?)),
            (SmoothSet::Sections { .. }, PlotWitness::SectionFamily(c)) => {
                let exp = self.as_exponential().expect("sections sheaf");
                match exp.restrict(phi, &PlotWitness::ExponentialMap(c.clone()))? {
                    PlotWitness::ExponentialMap(r) => Ok(PlotWitness::SectionFamily(r)),
                    _ => unreachable!("exponential restriction keeps its shape"),
                }
            }
            (SmoothSet::Forms(_), PlotWitness::Form(f)) => f
                .pull_back(phi.source.dim, &phi.components)
                .map(PlotWitness::Form)
                .map_err(|e| SmoothSetError::Shape(e.to_string())),
            (SmoothSet::Tower { levels, .. }, PlotWitness::TowerSequence(ws)) if ws.len() == levels.len() => Ok(
                PlotWitness::TowerSequence(levels.iter().zip(ws).map(|(l, w)| l.restrict(phi, w)).collect::<Result<_, _>>()?),
            ),
            (SmoothSet::Quotient { cover, .. }, PlotWitness::QuotientLift(w)) => {
                Ok(PlotWitness::QuotientLift(Box::new(cover.restrict(phi, w)?)))
            }
            _ => Err(SmoothSetError::Shape(format!("{} plot for {}", witness_kind(w), self.kind()))),
        }
    }

    /// Equality of plots: normal-form equality, or the relation for quotients.
    pub fn same_plot(&self, domain: &PlotDomain, a: &PlotWitness, b: &PlotWitness) -> bool {
        match (self, a, b) {
            (SmoothSet::Product(x, y), PlotWitness::Pair(a1, a2), PlotWitness::Pair(b1, b2)) => {
                x.same_plot(domain, a1, b1) && y.same_plot(domain, a2, b2)
            }
            (SmoothSet::Tower { levels, .. }, PlotWitness::TowerSequence(xs), PlotWitness::TowerSequence(ys)) => {
                xs.len() == ys.len() && levels.iter().zip(xs.iter().zip(ys)).all(|(l, (x, y))| l.same_plot(domain, x, y))
            }
            (SmoothSet::Quotient { relation, .. }, PlotWitness::QuotientLift(x), PlotWitness::QuotientLift(y)) => {
                let (x, y) = (x.expanded(), y.expanded());
                x == y || relation.related(domain, &x, &y)
            }
            _ => a == b || a.expanded() == b.expanded(),
        }
    }

    /// `X(ψ∘φ)(w) = X(φ)(X(ψ)(w))` for `φ : U → V`, `ψ : V → W`, `w ∈ X(W)`.
    pub fn check_functoriality(&self, phi: &SmoothMap, psi: &SmoothMap, w: &PlotWitness) -> Result<bool, SmoothSetError> {
        let composite = phi.then(psi)?;
        let direct = self.restrict(&composite, w)?;
        let stepwise = self.restrict(phi, &self.restrict(psi, w)?)?;
        Ok(self.same_plot(&phi.source, &direct, &stepwise))
    }

    /// Numeric values of a plot at a point of its domain, for reporting.
    fn values(&self, w: &PlotWitness, p: &[f64]) -> Option<Vec<f64>> {
        let eval_all = |cs: &[Expr], q: &[f64]| cs.iter().map(|c| eval_at(c, q)).collect::<Option<Vec<_>>>();
        match (self, w) {
            (SmoothSet::Representable(_), PlotWitness::Map(c)) => eval_all(c, p),
            (SmoothSet::Product(a, b), PlotWitness::Pair(wa, wb)) => {
                let mut v = a.values(wa, p)?;
                v.extend(b.values(wb, p)?);
                Some(v)
            }
            (SmoothSet::Exponential { source, .. }, PlotWitness::ExponentialMap(c))
            | (SmoothSet::Sections { window: source, .. }, PlotWitness::SectionFamily(c)) => {
                let mut out = Vec::new();
                for m in source.samples(4) {
                    let q: Vec<f64> = p.iter().chain(&m).copied().collect();
                    out.extend(eval_all(c, &q)?);
                }
                Some(out)
            }
            (SmoothSet::Forms(_), PlotWitness::Form(f)) => {
                let mut out = Vec::new();
                for idx in subsets(f.dim(), f.degree()) {
                    out.push(eval_at(&f.coefficient(&idx), p)?);
                }
                Some(out)
            }
            (SmoothSet::Tower { levels, .. }, PlotWitness::TowerSequence(ws)) => {
                let mut out = Vec::new();
                for (l, w) in levels.iter().zip(ws) {
                    out.extend(l.values(w, p)?);
                }
                Some(out)
            }
            (SmoothSet::Quotient { cover, .. }, PlotWitness::QuotientLift(w)) => cover.values(w, p),
            _ => None,
        }
    }

    /// Glue plots given on the pieces of a cover into one plot on their union.
    ///
    /// Witnesses are elementary expressions, so agreement on an open overlap
    /// means equality of normal forms; the glued plot is the common witness.
    pub fn glue(&self, cover: &[PlotDomain], witnesses: &[PlotWitness]) -> Result<(PlotDomain, PlotWitness), GlueError> {
        if cover.len() != witnesses.len() {
            return Err(GlueError::Arity(cover.len(), witnesses.len()));
        }
        let Some(first) = cover.first() else { return Err(GlueError::EmptyCover) };
        let mut boxes = Vec::new();
        for (i, (piece, w)) in cover.iter().zip(witnesses).enumerate() {
            if piece.dim != first.dim {
                return Err(SmoothSetError::DimensionMismatch { expected: first.dim, got: piece.dim }.into());
            }
            self.check_plot(piece, w).map_err(|e| GlueError::NotAPlot(i, e.to_string()))?;
            boxes.extend(piece.boxes.iter().cloned());
        }
        let union = PlotDomain { dim: first.dim, boxes };
        for i in 0..cover.len() {
            for j in i + 1..cover.len() {
                let overlap = cover[i].intersection(&cover[j])?;
                if overlap.is_empty() || self.same_plot(&overlap, &witnesses[i], &witnesses[j]) {
                    continue;
                }
                let point = overlap.samples(PLOT_SAMPLES).into_iter().find(|p| {
                    match (self.values(&witnesses[i], p), self.values(&witnesses[j], p)) {
                        (Some(a), Some(b)) => a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())),
                        _ => false,
                    }
                });
                return Err(GlueError::Incompatible { i, j, point });
            }
        }
        let common = &witnesses[0];
        if witnesses.iter().all(|w| self.same_plot(&union, common, w)) {
            Ok((union, common.clone()))
        } else {
            Err(GlueError::Unsupported)
        }
    }

    /// A plot that exists on every domain: zero maps, zero forms, and so on.
    pub fn zero_plot(&self, domain: &PlotDomain) -> PlotWitness {
        match self {
            SmoothSet::Representable(n) => PlotWitness::Map(vec![Expr::zero(); *n]),
            SmoothSet::Product(a, b) => PlotWitness::pair(a.zero_plot(domain), b.zero_plot(domain)),
            SmoothSet::Exponential { target, .. } => {
                let point = target.samples(1).into_iter().next().unwrap_or_default();
                PlotWitness::ExponentialMap(point.iter().map(|y| constant_near(*y)).collect())
            }
            SmoothSet::Sections { sig, .. } => PlotWitness::SectionFamily(vec![Expr::zero(); sig.field_names().len()]),
            SmoothSet::Forms(p) => PlotWitness::Form(DeRhamForm::zero(domain.dim, *p)),
            SmoothSet::Tower { levels, .. } => PlotWitness::TowerSequence(levels.iter().map(|l| l.zero_plot(domain)).collect()),
            SmoothSet::Quotient { cover, .. } => PlotWitness::QuotientLift(Box::new(cover.zero_plot(domain))),
        }
    }

    pub fn points(&self) -> PointsReport {
        match self {
            SmoothSet::Representable(n) => PointsReport {
                points: PointSet::Predicate(format!("R^{n}: constant maps into R^{n}")),
                concreteness: Concreteness::Concrete,
            },
            SmoothSet::Product(a, b) => {
                let (pa, pb) = (a.points(), b.points());
                let points = match (&pa.points, &pb.points) {
                    (PointSet::Finite(xs), PointSet::Finite(ys)) => PointSet::Finite(
                        xs.iter().flat_map(|x| ys.iter().map(move |y| PlotWitness::pair(x.clone(), y.clone()))).collect(),
                    ),
                    _ => PointSet::Predicate(format!("pairs of points of the {} and {} factors", a.kind(), b.kind())),
                };
                let concreteness = match (pa.concreteness, pb.concreteness) {
                    (Concreteness::Concrete, Concreteness::Concrete) => Concreteness::Concrete,
                    (Concreteness::NonConcrete { domain, witness, same_points_as }, _) => Concreteness::NonConcrete {
                        witness: PlotWitness::pair(witness, b.zero_plot(&domain)),
                        same_points_as: PlotWitness::pair(same_points_as, b.zero_plot(&domain)),
                        domain,
                    },
                    (_, Concreteness::NonConcrete { domain, witness, same_points_as }) => Concreteness::NonConcrete {
                        witness: PlotWitness::pair(a.zero_plot(&domain), witness),
                        same_points_as: PlotWitness::pair(a.zero_plot(&domain), same_points_as),
                        domain,
                    },
                };
                PointsReport { points, concreteness }
            }
            SmoothSet::Exponential { .. } => PointsReport {
                points: PointSet::Predicate("smooth maps from the source domain into the target domain".into()),
                concreteness: Concreteness::Concrete,
            },
            SmoothSet::Sections { .. } => PointsReport {
                points: PointSet::Predicate("sections over the window".into()),
                concreteness: Concreteness::Concrete,
            },
            SmoothSet::Forms(0) => PointsReport {
                points: PointSet::Predicate("R: 0-forms on a point are numbers".into()),
                concreteness: Concreteness::Concrete,
            },
            SmoothSet::Forms(p) => {
                let domain = PlotDomain::euclidean(*p);
                let volume = DeRhamForm::monomial(*p, (0..*p).collect(), Expr::one()).expect("indices in range");
                PointsReport {
                    points: PointSet::Finite(vec![PlotWitness::Form(DeRhamForm::zero(0, *p))]),
                    concreteness: Concreteness::NonConcrete {
                        same_points_as: PlotWitness::Form(DeRhamForm::zero(*p, *p)),
                        witness: PlotWitness::Form(volume),
                        domain,
                    },
                }
            }
            SmoothSet::Tower { levels, .. } => {
                let all_concrete = levels.iter().all(|l| l.points().concreteness == Concreteness::Concrete);
                let concreteness = if all_concrete {
                    Concreteness::Concrete
                } else {
                    // a constant tower of a non-concrete level carries its witness
                    match levels[0].points().concreteness {
                        Concreteness::NonConcrete { domain, witness, same_points_as }
                            if levels.iter().all(|l| l.kind() == levels[0].kind()) =>
                        {
                            Concreteness::NonConcrete {
                                witness: PlotWitness::TowerSequence(vec![witness; levels.len()]),
                                same_points_as: PlotWitness::TowerSequence(vec![same_points_as; levels.len()]),
                                domain,
                            }
                        }
                        other => other,
                    }
                };
                PointsReport { points: PointSet::Predicate("compatible sequences of level points".into()), concreteness }
            }
            SmoothSet::Quotient { cover, relation } => PointsReport {
                points: PointSet::Predicate(format!("points of the {} object modulo {}", cover.kind(), relation.name())),
                concreteness: cover.points().concreteness,
            },
        }
    }

    pub fn is_point(&self, w: &PlotWitness) -> bool {
        self.is_plot(&PlotDomain::point(), w)
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            SmoothSet::Representable(n) => json!({ "representable": n }),
            SmoothSet::Product(a, b) => json!({ "product": [a.to_json(), b.to_json()] }),
            SmoothSet::Exponential { source, target } => json!({ "exponential": { "source": source.to_json(), "target": target.to_json() } }),
            SmoothSet::Sections { sig, window } => json!({ "sections": { "base": sig.base_names(), "fields": sig.field_names(), "window": window.to_json() } }),
            SmoothSet::Forms(p) => json!({ "forms": p }),
            SmoothSet::Tower { levels, .. } => json!({ "tower": levels.iter().map(SmoothSet::to_json).collect::<Vec<_>>() }),
            SmoothSet::Quotient { cover, relation } => json!({ "quotient": { "of": cover.to_json(), "relation": relation.name() } }),
        }
    }
}

fn constant_near(y: f64) -> Expr {
    let r = Rational::from_float(y).unwrap_or_default();
    Expr::constant(r)
}

fn witness_kind(w: &PlotWitness) -> &'static str {
    match w {
        PlotWitness::Map(_) => "map",
        PlotWitness::Pair(..) => "pair",
        PlotWitness::ExponentialMap(_) => "exponential-map",
        PlotWitness::SectionFamily(_) => "section-family",
        PlotWitness::Form(_) => "form",
        PlotWitness::TowerSequence(_) => "tower",
        PlotWitness::QuotientLift(_) => "lift",
    }
}

/// Increasing `k`-subsets of `0..n`.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// The finite-order jet tower `J^0π ← J^1π ← … ← J^depth π` of a trivial
/// bundle. Level `k` is `R^{m + N_k}` with coordinates the base followed by
/// the jet coordinates of order `≤ k`; projections truncate.
pub fn jet_tower(sig: &BundleSignature, depth: u32) -> SmoothSet {
    let m = sig.base_dim();
    let width = |k: u32| m + sig.jet_coordinates(k).len();
    let levels = (0..=depth).map(|k| SmoothSet::Representable(width(k))).collect();
    let projections = (0..depth).map(|k| TowerMap::Truncate(width(k))).collect();
    SmoothSet::Tower { levels, projections }
}

/// The plot `x ↦ (j^0φ(x), …, j^depth φ(x))` of the jet tower over the base,
/// for a section with components in the base coordinates.
pub fn prolongation_plot(sig: &BundleSignature, section: &[Expr], depth: u32) -> PlotWitness {
    let m = sig.base_dim();
    let levels = (0..=depth)
        .map(|k| {
            let mut comps: Vec<Expr> = (0..m).map(Expr::base).collect();
            for jet in sig.jet_coordinates(k) {
                let mut d = section[jet.field].clone();
                for (mu, &c) in jet.index.counts().iter().enumerate() {
                    for _ in 0..c {
                        d = d.partial(&Var::Base(mu));
                    }
                }
                comps.push(d);
            }
            PlotWitness::Map(comps)
        })
        .collect();
    PlotWitness::TowerSequence(levels)
}

/// Read a level-`k` jet-tower plot at a rational point as a [`JetPoint`].
pub fn tower_level_point(sig: &BundleSignature, level: &PlotWitness, order: u32, at: &[Rational]) -> Option<JetPoint> {
    let PlotWitness::Map(comps) = level else { return None };
    let value = |e: &Expr| {
        e.eval_rational(&|v| match v {
            Var::Base(i) => at.get(*i).cloned(),
            Var::Jet(_) => None,
        })
        .ok()
    };
    let m = sig.base_dim();
    let base = comps[..m].iter().map(value).collect::<Option<Vec<_>>>()?;
    let jets = sig.jet_coordinates(order);
    if comps.len() != m + jets.len() {
        return None;
    }
    let coords = jets.into_iter().zip(&comps[m..]).map(|(j, e)| Some((j, value(e)?))).collect::<Option<_>>()?;
    Some(JetPoint { base, coords, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_expression;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn e(s: &str, dim: usize) -> Expr {
        parse_expression(s, &BundleSignature::numbered_chart(dim)).unwrap()
    }

    fn unit_interval() -> PlotDomain {
        PlotDomain::interval(r(0, 1), r(1, 1)).unwrap()
    }

    #[test]
    fn representable_examples() {
        let x = SmoothSet::representable(1);
        assert!(x.is_plot(&unit_interval(), &PlotWitness::Map(vec![e("x1^2", 1)])));
        let line = PlotDomain::euclidean(1);
        let double = SmoothMap::new(line.clone(), line.clone(), vec![e("2*x1", 1)]).unwrap();
        let restricted = x.restrict(&double, &PlotWitness::Map(vec![e("x1^2", 1)])).unwrap();
        assert_eq!(restricted, PlotWitness::Map(vec![e("4*x1^2", 1)]));
        let p = PlotWitness::Map(vec![Expr::int(3), Expr::ratio(1, 2)]);
        assert!(SmoothSet::representable(2).is_point(&p));
        assert!(!SmoothSet::representable(2).is_point(&PlotWitness::Map(vec![e("x1", 1), Expr::zero()])));
    }

    #[test]
    fn smooth_maps_check_their_range() {
        let unit = unit_interval();
        assert!(matches!(
            SmoothMap::new(unit.clone(), unit.clone(), vec![e("2*x1", 1)]),
            Err(SmoothSetError::OutOfRange(_))
        ));
        assert!(SmoothMap::new(unit.clone(), unit.clone(), vec![e("x1^2", 1)]).is_ok());
        assert!(matches!(
            SmoothMap::new(PlotDomain::euclidean(1), PlotDomain::euclidean(1), vec![e("x1^-1", 1)]),
            Err(SmoothSetError::NotSmooth(_)) | Ok(_)
        ));
    }

    #[test]
    fn exponential_and_sections_restrict_on_the_parameter() {
        let line = PlotDomain::euclidean(1);
        let exp = SmoothSet::exponential(line.clone(), line.clone());
        let w = PlotWitness::ExponentialMap(vec![e("x1*x2", 2)]);
        assert!(exp.is_plot(&line, &w));
        let shift = SmoothMap::new(line.clone(), line.clone(), vec![e("x1 + 1", 1)]).unwrap();
        assert_eq!(exp.restrict(&shift, &w).unwrap(), PlotWitness::ExponentialMap(vec![e("x1*x2 + x2", 2)]));

        let sig = BundleSignature::new(&["x"], &["u"], &[]).unwrap();
        let sections = SmoothSet::sections_sheaf(sig, line.clone()).unwrap();
        let f = PlotWitness::SectionFamily(vec![e("x1 + x2", 2)]);
        assert!(sections.is_plot(&line, &f));
        let square = SmoothMap::new(line.clone(), line.clone(), vec![e("x1^2", 1)]).unwrap();
        assert_eq!(sections.restrict(&square, &f).unwrap(), PlotWitness::SectionFamily(vec![e("x1^2 + x2", 2)]));
        assert!(sections.is_point(&PlotWitness::SectionFamily(vec![e("x1^3", 1)])));
    }

    #[test]
    fn forms_pull_back() {
        let forms = SmoothSet::forms_sheaf(1);
        let line = PlotDomain::euclidean(1);
        let w = PlotWitness::Form(DeRhamForm::monomial(1, vec![0], e("sin(x1)", 1)).unwrap());
        assert!(forms.is_plot(&line, &w));
        let square = SmoothMap::new(line.clone(), line.clone(), vec![e("x1^2", 1)]).unwrap();
        let pulled = forms.restrict(&square, &w).unwrap();
        let expected = DeRhamForm::monomial(1, vec![0], e("2*x1*sin(x1^2)", 1)).unwrap();
        assert_eq!(pulled, PlotWitness::Form(expected));
    }

    #[test]
    fn functoriality_example() {
        let line = PlotDomain::euclidean(1);
        let phi = SmoothMap::new(line.clone(), line.clone(), vec![e("x1^2", 1)]).unwrap();
        let psi = SmoothMap::new(line.clone(), line.clone(), vec![e("x1 + 1", 1)]).unwrap();
        let x = SmoothSet::representable(1);
        let w = PlotWitness::Map(vec![e("x1^3", 1)]);
        assert!(x.check_functoriality(&phi, &psi, &w).unwrap());
        let composite = x.restrict(&phi.then(&psi).unwrap(), &w).unwrap();
        assert_eq!(composite, PlotWitness::Map(vec![e("(x1^2 + 1)^3", 1)]));
        let id = SmoothMap::identity(line);
        assert!(x.check_functoriality(&id, &id, &w).unwrap());
    }

    #[test]
    fn gluing_examples() {
        let x = SmoothSet::representable(1);
        let cover = [PlotDomain::interval(r(0, 1), r(6, 5)).unwrap(), PlotDomain::interval(r(4, 5), r(2, 1)).unwrap()];
        let sq = PlotWitness::Map(vec![e("x1^2", 1)]);
        let (union, glued) = x.glue(&cover, &[sq.clone(), sq.clone()]).unwrap();
        assert_eq!(glued, sq);
        for piece in &cover {
            let incl = SmoothMap::inclusion(piece.clone(), union.clone()).unwrap();
            assert_eq!(x.restrict(&incl, &glued).unwrap(), sq);
        }
        let cube = PlotWitness::Map(vec![e("x1^3", 1)]);
        match x.glue(&cover, &[sq, cube]) {
            Err(GlueError::Incompatible { i: 0, j: 1, point: Some(p) }) => assert!(p[0] > 0.8 && p[0] < 1.2),
            other => panic!("{other:?}"),
        }

        let forms = SmoothSet::forms_sheaf(1);
        let w = PlotWitness::Form(DeRhamForm::monomial(1, vec![0], e("x1*exp(x1)", 1)).unwrap());
        assert!(forms.glue(&cover, &[w.clone(), w]).is_ok());

        let apart = [PlotDomain::interval(r(0, 1), r(1, 1)).unwrap(), PlotDomain::interval(r(2, 1), r(3, 1)).unwrap()];
        let a = PlotWitness::Map(vec![e("x1", 1)]);
        let b = PlotWitness::Map(vec![e("x1 + 1", 1)]);
        assert_eq!(SmoothSet::representable(1).glue(&apart, &[a, b]), Err(GlueError::Unsupported));
    }

    #[test]
    fn points_and_concreteness() {
        let report = SmoothSet::forms_sheaf(2).points();
        match (&report.points, &report.concreteness) {
            (PointSet::Finite(ps), Concreteness::NonConcrete { domain, witness, same_points_as }) => {
                assert_eq!(ps.len(), 1);
                let forms = SmoothSet::forms_sheaf(2);
                assert!(forms.is_plot(domain, witness));
                assert_ne!(witness, same_points_as);
                // both plots have the same underlying map: every point goes to the unique point
                let pt = SmoothSet::forms_sheaf(2);
                for p in domain.samples(3) {
                    let consts: Vec<Expr> = p.iter().map(|y| constant_near(*y)).collect();
                    let at = SmoothMap { source: PlotDomain::point(), target: domain.clone(), components: consts };
                    assert_eq!(pt.restrict(&at, witness).unwrap(), pt.restrict(&at, same_points_as).unwrap());
                }
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(SmoothSet::representable(3).points().concreteness, Concreteness::Concrete);
        let prod = SmoothSet::product(SmoothSet::representable(1), SmoothSet::representable(2));
        assert_eq!(prod.points().concreteness, Concreteness::Concrete);
    }

    #[test]
    fn jet_tower_plots() {
        let sig = BundleSignature::new(&["x"], &["u"], &[]).unwrap();
        let tower = jet_tower(&sig, 3);
        let line = PlotDomain::euclidean(1);
        let plot = prolongation_plot(&sig, &[e("x1^3 + x1", 1)], 3);
        assert!(tower.is_plot(&line, &plot));
        let PlotWitness::TowerSequence(mut levels) = plot else { unreachable!() };
        levels[2] = PlotWitness::Map(vec![e("x1", 1), e("x1^3 + x1", 1), e("3*x1^2 + 1", 1), e("x1", 1)]);
        assert!(!tower.is_plot(&line, &PlotWitness::TowerSequence(levels)));

        let constant = SmoothSet::tower_limit(vec![SmoothSet::representable(2); 3], vec![TowerMap::Identity; 2]).unwrap();
        let w = PlotWitness::Map(vec![e("x1", 1), e("x1^2", 1)]);
        assert!(constant.is_plot(&line, &PlotWitness::TowerSequence(vec![w.clone(); 3])));
    }

    #[test]
    fn quotients_use_the_relation() {
        // R modulo integer translation, tested on constant lifts
        let relation = Relation::new("integer shifts", |_, a, b| match (a, b) {
            (PlotWitness::Map(x), PlotWitness::Map(y)) => {
                let d = &x[0] - &y[0];
                d.as_constant().is_some_and(|c| c.is_integer())
            }
            _ => false,
        });
        let circle = SmoothSet::quotient(SmoothSet::representable(1), relation);
        let a = PlotWitness::QuotientLift(Box::new(PlotWitness::Map(vec![e("x1", 1)])));
        let b = PlotWitness::QuotientLift(Box::new(PlotWitness::Map(vec![e("x1 + 2", 1)])));
        let line = PlotDomain::euclidean(1);
        assert!(circle.is_plot(&line, &a));
        assert!(circle.same_plot(&line, &a, &b));
        assert_eq!(circle.points().concreteness, Concreteness::Concrete);
    }
}
