//! Paths, their composition and reversal, and parallel transport of a matrix
//! connection along them.
//!
//! Transport solves `g'(s) = -A(γ(s))(γ'(s)) g(s)`, `g(0) = 1`, with classical
//! RK4. With composition running the second argument first,
//! `holonomy(compose(γ, γ')) = holonomy(γ) · holonomy(γ')`.

use nalgebra::{Complex, DMatrix};
use serde_json::json;
use thiserror::Error;

use crate::smoothset::PlotDomain;
use crate::symexpr::{parse_expression, BundleSignature, Expr, ParseError, Var};

pub type C64 = Complex<f64>;

pub const MIN_STEPS: usize = 16;
pub const ENDPOINT_TOLERANCE: f64 = 1e-9;
pub const ANTI_HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

/// Half-width of the flat collars used by sitting instants.
const COLLAR: f64 = 0.1;
const CONNECTION_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HolonomyError {
    #[error("path endpoints do not match: {0:?} vs {1:?}")]
    EndpointMismatch(Vec<f64>, Vec<f64>),
    #[error("at least {MIN_STEPS} steps are required, got {0}")]
    TooFewSteps(usize),
    #[error("non-finite value during transport at s = {0}")]
    NonFinite(f64),
    #[error("path leaves the connection window at s = {0}")]
    LeavesWindow(f64),
    #[error("path has dimension {got}, connection has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix entries must form a {0}x{0} matrix")]
    MatrixShape(usize),
    #[error("connection is not anti-Hermitian (or not traceless) at {0:?}")]
    NotInAlgebra(Vec<f64>),
    #[error("group element drifted from unitarity by {0:e}")]
    UnitarityLost(f64),
    #[error("reparametrization is not monotone or does not fix the endpoints")]
    NonMonotone,
    #[error("path component uses coordinates other than the parameter s")]
    ForeignVariable,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A piecewise-smooth path `[0, 1] → R^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Path {
    /// Components in the parameter `s` (`Var::Base(0)`); with `sitting`, the
    /// parameter is reshaped to be constant near both ends.
    Smooth { components: Vec<Expr>, velocity: Vec<Expr>, sitting: bool },
    /// `compose(γ, γ')`: `γ'(2s)` on `[0, ½]`, then `γ(2s - 1)`.
    Concat(Box<Path>, Box<Path>),
    /// `γ(1 - s)`.
    Reverse(Box<Path>),
    /// `γ(ρ(s))` for monotone `ρ` fixing the endpoints; carries `ρ'`.
    Reparam(Box<Path>, Expr, Expr),
}

fn eval_s(e: &Expr, s: f64) -> f64 {
    e.eval(&|v| if *v == Var::Base(0) { Some(s) } else { None }, &|_| None).unwrap_or(f64::NAN)
}

fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn flat_prime(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        flat(t) / (t * t)
    }
}

/// Smooth step, identically 0 on `[0, COLLAR]` and 1 on `[1 - COLLAR, 1]`.
fn sitting(s: f64) -> (f64, f64) {
    let scale = 1.0 - 2.0 * COLLAR;
    let t = (s - COLLAR) / scale;
    let (a, b) = (flat(t), flat(1.0 - t));
    if a + b == 0.0 {
        return (if t < 0.5 { 0.0 } else { 1.0 }, 0.0);
    }
    let value = a / (a + b);
    let slope = (flat_prime(t) * b + a * flat_prime(1.0 - t)) / ((a + b) * (a + b)) / scale;
    (value, slope)
}

impl Path {
    pub fn smooth(components: Vec<Expr>) -> Result<Self, HolonomyError> {
        Path::build(components, false)
    }

    pub fn with_sitting_instants(components: Vec<Expr>) -> Result<Self, HolonomyError> {
        Path::build(components, true)
    }

    fn build(components: Vec<Expr>, sitting: bool) -> Result<Self, HolonomyError> {
        if components.iter().any(|c| c.vars().iter().any(|v| *v != Var::Base(0)) || !c.params().is_empty()) {
            return Err(HolonomyError::ForeignVariable);
        }
        let velocity = components.iter().map(|c| c.partial(&Var::Base(0))).collect();
        Ok(Path::Smooth { components, velocity, sitting })
    }

    /// The straight segment from `a` to `b`.
    pub fn segment(a: &[Expr], b: &[Expr], sitting: bool) -> Result<Self, HolonomyError> {
        let s = Expr::base(0);
        let components = a.iter().zip(b).map(|(p, q)| p + &(&(q - p) * &s)).collect();
        Path::build(components, sitting)
    }

    /// Parse components written in the parameter `s`.
    pub fn parse(components: &[&str], sitting: bool) -> Result<Self, HolonomyError> {
        let chart = path_chart();
        let exprs = components.iter().map(|c| parse_expression(c, &chart)).collect::<Result<Vec<_>, _>>()?;
        Path::build(exprs, sitting)
    }

    pub fn dim(&self) -> usize {
        match self {
            Path::Smooth { components, .. } => components.len(),
            Path::Concat(a, _) | Path::Reverse(a) | Path::Reparam(a, ..) => a.dim(),
        }
    }

    /// Position and velocity at `s`.
    pub fn at(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            Path::Smooth { components, velocity, sitting: sits } => {
                let (t, dt) = if *sits { sitting(s) } else { (s, 1.0) };
                let pos = components.iter().map(|c| eval_s(c, t)).collect();
                let vel = velocity.iter().map(|c| eval_s(c, t) * dt).collect();
                (pos, vel)
            }
            Path::Concat(later, first) => {
                let (p, v) = if s < 0.5 { first.at(2.0 * s) } else { later.at(2.0 * s - 1.0) };
                (p, v.into_iter().map(|x| 2.0 * x).collect())
            }
            Path::Reverse(inner) => {
                let (p, v) = inner.at(1.0 - s);
                (p, v.into_iter().map(|x| -x).collect())
            }
            Path::Reparam(inner, rho, drho) => {
                let r = eval_s(rho, s);
                let dr = eval_s(drho, s);
                let (p, v) = inner.at(r);
                (p, v.into_iter().map(|x| x * dr).collect())
            }
        }
    }

    pub fn start(&self) -> Vec<f64> {
        self.at(0.0).0
    }

    pub fn end(&self) -> Vec<f64> {
        self.at(1.0).0
    }

    pub fn to_json(&self) -> serde_json::Value {
        let chart = path_chart();
        match self {
            Path::Smooth { components, sitting, .. } => json!({
                "components": components.iter().map(|c| c.to_text(&chart)).collect::<Vec<_>>(),
                "sitting": sitting,
            }),
            Path::Concat(a, b) => json!({ "compose": [a.to_json(), b.to_json()] }),
            Path::Reverse(a) => json!({ "reverse": a.to_json() }),
            Path::Reparam(a, rho, _) => json!({ "reparametrize": a.to_json(), "by": rho.to_text(&chart) }),
        }
    }
}

/// The chart with the single path parameter `s`.
pub fn path_chart() -> BundleSignature {
    BundleSignature::base_chart(&["s"]).expect("valid name")
}

/// `γ ∘ γ'`: traverse `γ'` first, then `γ`. Requires `γ(0) = γ'(1)`.
pub fn compose(gamma: &Path, gamma_prime: &Path) -> Result<Path, HolonomyError> {
    let (a, b) = (gamma.start(), gamma_prime.end());
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| (x - y).abs() > ENDPOINT_TOLERANCE) {
        return Err(HolonomyError::EndpointMismatch(a, b));
    }
    Ok(Path::Concat(Box::new(gamma.clone()), Box::new(gamma_prime.clone())))
}

/// `γ†(s) = γ(1 - s)`.
pub fn reverse(gamma: &Path) -> Path {
    match gamma {
        Path::Reverse(inner) => (**inner).clone(),
        other => Path::Reverse(Box::new(other.clone())),
    }
}

/// `γ ∘ ρ` after checking that `ρ` is monotone and fixes 0 and 1.
pub fn reparametrize(gamma: &Path, rho: &Expr) -> Result<Path, HolonomyError> {
    if rho.vars().iter().any(|v| *v != Var::Base(0)) {
        return Err(HolonomyError::ForeignVariable);
    }
    let drho = rho.partial(&Var::Base(0));
    let fixes = (eval_s(rho, 0.0)).abs() < 1e-12 && (eval_s(rho, 1.0) - 1.0).abs() < 1e-12;
    let monotone = (0..=1024).all(|k| eval_s(&drho, k as f64 / 1024.0) >= -1e-12);
    if !fixes || !monotone {
        return Err(HolonomyError::NonMonotone);
    }
    Ok(Path::Reparam(Box::new(gamma.clone()), rho.clone(), drho))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    U1,
    SU2,
    GL(usize),
}

impl Group {
    pub fn size(&self) -> usize {
        match self {
            Group::U1 => 1,
            Group::SU2 => 2,
            Group::GL(k) => *k,
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Group::GL(_))
    }

    pub fn name(&self) -> String {
        match self {
            Group::U1 => "U1".into(),
            Group::SU2 => "SU2".into(),
            Group::GL(k) => format!("GL{k}"),
        }
    }

    pub fn from_name(name: &str) -> Option<Group> {
        match name {
            "U1" => Some(Group::U1),
            "SU2" => Some(Group::SU2),
            _ => name.strip_prefix("GL").and_then(|k| k.parse().ok()).filter(|k| *k > 0).map(Group::GL),
        }
    }
}

/// A `k × k` complex matrix of expressions, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixExpr {
    size: usize,
    re: Vec<Expr>,
    im: Vec<Expr>,
}

impl MatrixExpr {
    pub fn new(size: usize, re: Vec<Expr>, im: Vec<Expr>) -> Result<Self, HolonomyError> {
        if re.len() != size * size || im.len() != size * size {
            return Err(HolonomyError::MatrixShape(size));
        }
        Ok(MatrixExpr { size, re, im })
    }

    pub fn zero(size: usize) -> Self {
        MatrixExpr { size, re: vec![Expr::zero(); size * size], im: vec![Expr::zero(); size * size] }
    }

    /// Parse `a, b; c, d` (rows split by `;`) for the real and imaginary parts.
    pub fn parse(size: usize, re: &str, im: &str, chart: &BundleSignature) -> Result<Self, HolonomyError> {
        let entries = |text: &str| -> Result<Vec<Expr>, HolonomyError> {
            let rows: Vec<&str> = text.split(';').collect();
            if rows.len() != size {
                return Err(HolonomyError::MatrixShape(size));
            }
            let mut out = Vec::with_capacity(size * size);
            for row in rows {
                let cells: Vec<&str> = row.split(',').collect();
                if cells.len() != size {
                    return Err(HolonomyError::MatrixShape(size));
                }
                for cell in cells {
                    out.push(parse_expression(cell.trim(), chart)?);
                }
            }
            Ok(out)
        };
        MatrixExpr::new(size, entries(re)?, entries(im)?)
    }

    fn eval(&self, p: &[f64]) -> DMatrix<C64> {
        let at = |e: &Expr| {
            e.eval(&|v| if let Var::Base(i) = v { p.get(*i).copied() } else { None }, &|_| None).unwrap_or(f64::NAN)
        };
        DMatrix::from_fn(self.size, self.size, |i, j| {
            let k = i * self.size + j;
            C64::new(at(&self.re[k]), at(&self.im[k]))
        })
    }

    fn uses_only(&self, dim: usize) -> bool {
        self.re.iter().chain(&self.im).all(|e| {
            e.params().is_empty() && e.vars().iter().all(|v| matches!(v, Var::Base(i) if *i < dim))
        })
    }
}

/// A Lie-algebra valued 1-form `A = A_μ dx^μ` on a window of `R^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionForm {
    group: Group,
    window: PlotDomain,
    components: Vec<MatrixExpr>,
}

impl ConnectionForm {
    /// Checks the algebra condition at sample points of the window.
    pub fn new(group: Group, window: PlotDomain, components: Vec<MatrixExpr>) -> Result<Self, HolonomyError> {
        if components.len() != window.dim() {
            return Err(HolonomyError::DimensionMismatch { expected: window.dim(), got: components.len() });
        }
        let k = group.size();
        for c in &components {
            if c.size != k {
                return Err(HolonomyError::MatrixShape(k));
            }
            if !c.uses_only(window.dim()) {
                return Err(HolonomyError::ForeignVariable);
            }
        }
        let conn = ConnectionForm { group, window, components };
        if group.is_unitary() {
            for p in conn.window.samples(CONNECTION_SAMPLES) {
                for c in &conn.components {
                    let m = c.eval(&p);
                    let skew = (&m + m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let trace = if group == Group::SU2 { m.trace().norm() } else { 0.0 };
                    if !(skew <= ANTI_HERMITIAN_TOLERANCE && trace <= ANTI_HERMITIAN_TOLERANCE) {
                        return Err(HolonomyError::NotInAlgebra(p));
                    }
                }
            }
        }
        Ok(conn)
    }

    /// `A = 0`.
    pub fn flat(group: Group, window: PlotDomain) -> Self {
        let components = vec![MatrixExpr::zero(group.size()); window.dim()];
        ConnectionForm { group, window, components }
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `A_p(v) = Σ_μ A_μ(p) v^μ`.
    pub fn contract(&self, p: &[f64], v: &[f64]) -> DMatrix<C64> {
        let k = self.group.size();
        let mut out = DMatrix::zeros(k, k);
        for (c, vi) in self.components.iter().zip(v) {
            if *vi != 0.0 {
                out += c.eval(p) * C64::new(*vi, 0.0);
            }
        }
        out
    }
}

/// A matrix group element.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub group: Group,
    pub matrix: DMatrix<C64>,
}

impl GroupElement {
    pub fn identity(group: Group) -> Self {
        GroupElement { group, matrix: DMatrix::identity(group.size(), group.size()) }
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { group: self.group, matrix: &self.matrix * &other.matrix }
    }

    pub fn inverse(&self) -> Option<GroupElement> {
        self.matrix.clone().try_inverse().map(|m| GroupElement { group: self.group, matrix: m })
    }

    /// Largest entrywise modulus of the difference.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |g†g - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let k = self.matrix.nrows();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = self
            .matrix
            .row_iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        json!({ "group": self.group.name(), "matrix": rows })
    }
}

/// Parallel transport along `γ` with `steps` RK4 steps.
pub fn holonomy(a: &ConnectionForm, gamma: &Path, steps: usize) -> Result<GroupElement, HolonomyError> {
    if steps < MIN_STEPS {
        return Err(HolonomyError::TooFewSteps(steps));
    }
    if gamma.dim() != a.dim() {
        return Err(HolonomyError::DimensionMismatch { expected: a.dim(), got: gamma.dim() });
    }
    let generator = |s: f64| -> Result<DMatrix<C64>, HolonomyError> {
        let (p, v) = gamma.at(s);
        if p.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(HolonomyError::NonFinite(s));
        }
        if !a.window.contains(&p) {
            return Err(HolonomyError::LeavesWindow(s));
        }
        let m = -a.contract(&p, &v);
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HolonomyError::NonFinite(s));
        }
        Ok(m)
    };
    let h = 1.0 / steps as f64;
    let hc = C64::new(h, 0.0);
    let half = C64::new(0.5, 0.0);
    let sixth = C64::new(h / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let mut g = GroupElement::identity(a.group).matrix;
    let mut m0 = generator(0.0)?;
    for n in 0..steps {
        let s = n as f64 * h;
        let mid = generator(s + 0.5 * h)?;
        let m1 = generator(s + h)?;
        let k1 = &m0 * &g;
        let k2 = &mid * (&g + &k1 * (hc * half));
        let k3 = &mid * (&g + &k2 * (hc * half));
        let k4 = &m1 * (&g + &k3 * hc);
        g += (k1 + k2 * two + k3 * two + k4) * sixth;
        if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HolonomyError::NonFinite(s + h));
        }
        m0 = m1;
    }
    let out = GroupElement { group: a.group, matrix: g };
    if a.group.is_unitary() {
        let defect = out.unitarity_defect();
        if defect > UNITARITY_TOLERANCE {
            return Err(HolonomyError::UnitarityLost(defect));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThinReport {
    pub reference: GroupElement,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

impl ThinReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "holonomy": self.reference.to_json(), "deviations": self.deviations, "max_deviation": self.max_deviation })
    }
}

/// Compare `holonomy(γ ∘ ρ)` with `holonomy(γ)` for each reparametrization.
pub fn thin_invariance_probe(
    a: &ConnectionForm,
    gamma: &Path,
    reparametrizations: &[Expr],
    steps: usize,
) -> Result<ThinReport, HolonomyError> {
    let reference = holonomy(a, gamma, steps)?;
    let mut deviations = Vec::with_capacity(reparametrizations.len());
    for rho in reparametrizations {
        let moved = holonomy(a, &reparametrize(gamma, rho)?, steps)?;
        deviations.push(moved.distance(&reference));
    }
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    Ok(ThinReport { reference, deviations, max_deviation })
}
