use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::signature::{JetVar, MultiIndex, Var};

pub type Rational = BigRational;

/// Powers of sums with exponents in this range are expanded.
pub const MAX_EXPANDED_POWER: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            _ => None,
        }
    }
}

/// An indivisible factor of a monomial.
///
/// `Sum` holds a primitive sum (at least two terms, first coefficient 1) that
/// only ever appears with an exponent outside `1..=MAX_EXPANDED_POWER`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Param(Arc<str>),
    Var(Var),
    Func(Func, Expr),
    Sum(Expr),
}

/// Product of atoms with nonzero integer exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of exponents.
    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(_, k)| *k as i64).sum()
    }

    fn merged(&self, other: &Monomial) -> Vec<(Atom, i32)> {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let k = a[i].1 + b[j].1;
                    if k != 0 {
                        out.push((a[i].0.clone(), k));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("division by zero")]
pub struct DivisionByZero;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value assigned to {0}")]
    MissingAssignment(String),
    #[error("no value assigned to parameter `{0}`")]
    MissingParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expression has no exact rational value: {0}")]
    NotRational(String),
}

/// A symbolic expression in canonical normal form: a sorted sum of monomials
/// with nonzero exact rational coefficients.
///
/// Every constructor and arithmetic operation returns a normal form, so
/// structural equality is the equality test.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: Arc<Vec<(Monomial, Rational)>>,
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::constant(Rational::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(rat(n))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Expr::constant(Rational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn constant(c: Rational) -> Self {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { terms: Arc::new(vec![(Monomial::one(), c)]) }
    }

    pub fn var(v: Var) -> Self {
        Expr::atom(Atom::Var(v))
    }

    pub fn base(mu: usize) -> Self {
        Expr::var(Var::Base(mu))
    }

    pub fn jet(field: usize, index: MultiIndex) -> Self {
        Expr::var(Var::Jet(JetVar::new(field, index)))
    }

    pub fn param(name: &str) -> Self {
        Expr::atom(Atom::Param(Arc::from(name)))
    }

    fn atom(a: Atom) -> Self {
        Expr { terms: Arc::new(vec![(Monomial(vec![(a, 1)]), Rational::one())]) }
    }

    /// Apply an elementary function, folding `sin 0`, `cos 0`, `exp 0`, `log 1`.
    pub fn apply(f: Func, arg: Expr) -> Self {
        if arg.is_zero() {
            match f {
                Func::Sin => return Expr::zero(),
                Func::Cos | Func::Exp => return Expr::one(),
                Func::Log => {}
            }
        }
        if f == Func::Log && arg.is_one() {
            return Expr::zero();
        }
        Expr::atom(Atom::Func(f, arg))
    }

    pub fn sin(&self) -> Self {
        Expr::apply(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        Expr::apply(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Self {
        Expr::apply(Func::Exp, self.clone())
    }

    pub fn log(&self) -> Self {
        Expr::apply(Func::Log, self.clone())
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The rational value of a constant expression.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    fn from_map(map: BTreeMap<Monomial, Rational>) -> Self {
        Expr { terms: Arc::new(map.into_iter().filter(|(_, c)| !c.is_zero()).collect()) }
    }

    /// Build a normal form from a raw product of atoms, expanding any sum
    /// atom whose exponent fell into the expanded range.
    fn settle(factors: Vec<(Atom, i32)>, coeff: Rational) -> Expr {
        let mut pending = Vec::new();
        let mut kept = Vec::with_capacity(factors.len());
        for (atom, k) in factors {
            match atom {
                Atom::Sum(s) if (1..=MAX_EXPANDED_POWER).contains(&k) => pending.push((s, k)),
                other => kept.push((other, k)),
            }
        }
        let mut out = Expr { terms: Arc::new(vec![(Monomial(kept), coeff)]) };
        for (s, k) in pending {
            for _ in 0..k {
                out = &out * &s;
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { terms: Arc::new(self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect()) }
    }

    /// Nonnegative integer power.
    pub fn pow(&self, k: u32) -> Expr {
        self.powi(k as i32).expect("nonnegative powers never divide")
    }

    /// Integer power; negative exponents of zero fail.
    pub fn powi(&self, k: i32) -> Result<Expr, DivisionByZero> {
        if k == 0 {
            return Ok(Expr::one());
        }
        match self.terms.as_slice() {
            [] if k > 0 => Ok(Expr::zero()),
            [] => Err(DivisionByZero),
            [(m, c)] => {
                let factors = m.0.iter().map(|(a, e)| (a.clone(), e * k)).collect();
                Ok(Expr::settle(factors, num_traits::pow::Pow::pow(c, k)))
            }
            _ if (1..=MAX_EXPANDED_POWER).contains(&k) => {
                let mut out = self.clone();
                for _ in 1..k {
                    out = &out * self;
                }
                Ok(out)
            }
            terms => {
                let lead = terms[0].1.clone();
                let primitive = self.scale(&lead.recip());
                Ok(Expr {
                    terms: Arc::new(vec![(
                        Monomial(vec![(Atom::Sum(primitive), k)]),
                        num_traits::pow::Pow::pow(&lead, k),
                    )]),
                })
            }
        }
    }

    pub fn recip(&self) -> Result<Expr, DivisionByZero> {
        self.powi(-1)
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, DivisionByZero> {
        Ok(self * &other.recip()?)
    }

    /// Visit every atom, including atoms nested in function arguments and sums.
    pub fn for_each_atom(&self, f: &mut impl FnMut(&Atom)) {
        for (m, _) in self.terms.iter() {
            for (a, _) in &m.0 {
                f(a);
                match a {
                    Atom::Func(_, inner) | Atom::Sum(inner) => inner.for_each_atom(f),
                    _ => {}
                }
            }
        }
    }

    /// Every coordinate occurring anywhere in the expression.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Var(v) = a {
                out.insert(v.clone());
            }
        });
        out
    }

    pub fn jet_vars(&self) -> BTreeSet<JetVar> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Jet(j) => Some(j),
                Var::Base(_) => None,
            })
            .collect()
    }

    pub fn params(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Param(p) = a {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn depends_on(&self, v: &Var) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |a| {
            if matches!(a, Atom::Var(w) if w == v) {
                found = true;
            }
        });
        found
    }

    /// Highest derivative order `|I|` of any jet coordinate; 0 if none.
    pub fn order(&self) -> u32 {
        self.jet_vars().iter().map(JetVar::order).max().unwrap_or(0)
    }

    /// True when the expression is a polynomial (no functions, no negative
    /// powers) in every coordinate and parameter.
    pub fn is_polynomial(&self) -> bool {
        self.terms.iter().all(|(m, _)| {
            m.0.iter().all(|(a, k)| {
                *k > 0
                    && match a {
                        Atom::Func(..) => false,
                        Atom::Sum(s) => s.is_polynomial(),
                        _ => true,
                    }
            })
        })
    }

    /// Expand every positive power of a sum regardless of the exponent cap.
    ///
    /// The result is a sum of monomials whose only sum atoms carry negative
    /// exponents.
    pub fn expand_all(&self) -> Expr {
        let mut acc = BTreeMap::new();
        for (m, c) in self.terms.iter() {
            let mut term = Expr::constant(c.clone());
            for (a, k) in &m.0 {
                let factor = match a {
                    Atom::Sum(s) if *k > 0 => {
                        let inner = s.expand_all();
                        let mut p = Expr::one();
                        for _ in 0..*k {
                            p = &p * &inner;
                        }
                        p
                    }
                    _ => Expr { terms: Arc::new(vec![(Monomial(vec![(a.clone(), *k)]), Rational::one())]) },
                };
                term = &term * &factor;
            }
            add_into(&mut acc, &term);
        }
        Expr::from_map(acc)
    }

    /// Formal partial derivative with respect to one coordinate; all jet
    /// coordinates are independent.
    pub fn partial(&self, v: &Var) -> Expr {
        let mut acc = BTreeMap::new();
        for (m, c) in self.terms.iter() {
            for (i, (atom, k)) in m.0.iter().enumerate() {
                let inner = atom_partial(atom, v);
                if inner.is_zero() {
                    continue;
                }
                let mut rest: Vec<(Atom, i32)> = m.0.clone();
                if *k == 1 {
                    rest.remove(i);
                } else {
                    rest[i].1 = k - 1;
                }
                let outer = Expr::settle(rest, c * rat(*k as i64));
                add_into(&mut acc, &(&outer * &inner));
            }
        }
        Expr::from_map(acc)
    }

    /// Replace coordinates by expressions; unmapped coordinates are kept.
    pub fn substitute(&self, f: &mut dyn FnMut(&Var) -> Option<Expr>) -> Result<Expr, DivisionByZero> {
        let mut acc = BTreeMap::new();
        for (m, c) in self.terms.iter() {
            let mut term = Expr::constant(c.clone());
            for (a, k) in &m.0 {
                let base = match a {
                    Atom::Var(v) => match f(v) {
                        Some(e) => e,
                        None => Expr::atom(a.clone()),
                    },
                    Atom::Param(_) => Expr::atom(a.clone()),
                    Atom::Func(func, arg) => Expr::apply(*func, arg.substitute(f)?),
                    Atom::Sum(s) => s.substitute(f)?,
                };
                term = &term * &base.powi(*k)?;
            }
            add_into(&mut acc, &term);
        }
        Ok(Expr::from_map(acc))
    }

    /// Replace named parameters by expressions.
    pub fn substitute_params(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Result<Expr, DivisionByZero> {
        let mut acc = BTreeMap::new();
        for (m, c) in self.terms.iter() {
            let mut term = Expr::constant(c.clone());
            for (a, k) in &m.0 {
                let base = match a {
                    Atom::Param(p) => f(p).unwrap_or_else(|| Expr::atom(a.clone())),
                    Atom::Var(_) => Expr::atom(a.clone()),
                    Atom::Func(func, arg) => Expr::apply(*func, arg.substitute_params(f)?),
                    Atom::Sum(s) => s.substitute_params(f)?,
                };
                term = &term * &base.powi(*k)?;
            }
            add_into(&mut acc, &term);
        }
        Ok(Expr::from_map(acc))
    }

    /// Floating-point evaluation.
    pub fn eval(
        &self,
        vars: &dyn Fn(&Var) -> Option<f64>,
        params: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<f64, EvalError> {
        let mut total = 0.0;
        for (m, c) in self.terms.iter() {
            let mut term = c.to_f64().unwrap_or(f64::NAN);
            for (a, k) in &m.0 {
                let x = match a {
                    Atom::Var(v) => vars(v).ok_or_else(|| EvalError::MissingAssignment(format!("{v:?}")))?,
                    Atom::Param(p) => params(p).ok_or_else(|| EvalError::MissingParameter(p.to_string()))?,
                    Atom::Sum(s) => s.eval(vars, params)?,
                    Atom::Func(f, arg) => {
                        let y = arg.eval(vars, params)?;
                        match f {
                            Func::Sin => y.sin(),
                            Func::Cos => y.cos(),
                            Func::Exp => y.exp(),
                            Func::Log if y > 0.0 => y.ln(),
                            Func::Log => return Err(EvalError::Domain(format!("log of non-positive value {y}"))),
                        }
                    }
                };
                if *k < 0 && x == 0.0 {
                    return Err(EvalError::Domain("negative power of zero".into()));
                }
                term *= x.powi(*k);
            }
            total += term;
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(EvalError::Domain("non-finite result".into()))
        }
    }

    /// Exact evaluation for expressions without functions or parameters.
    pub fn eval_rational(&self, vars: &dyn Fn(&Var) -> Option<Rational>) -> Result<Rational, EvalError> {
        let mut total = Rational::zero();
        for (m, c) in self.terms.iter() {
            let mut term = c.clone();
            for (a, k) in &m.0 {
                let x = match a {
                    Atom::Var(v) => vars(v).ok_or_else(|| EvalError::MissingAssignment(format!("{v:?}")))?,
                    Atom::Sum(s) => s.eval_rational(vars)?,
                    Atom::Param(p) => return Err(EvalError::NotRational(format!("parameter `{p}`"))),
                    Atom::Func(f, _) => return Err(EvalError::NotRational(format!("function `{}`", f.name()))),
                };
                if *k < 0 && x.is_zero() {
                    return Err(EvalError::Domain("negative power of zero".into()));
                }
                term *= num_traits::pow::Pow::pow(&x, *k);
            }
            total += term;
        }
        Ok(total)
    }

    /// Group terms by total degree in the jet coordinates. `None` unless the
    /// expression is a Laurent polynomial in them with nonnegative powers.
    pub fn degree_in_jets(&self) -> Option<BTreeMap<u32, Expr>> {
        let mut out: BTreeMap<u32, BTreeMap<Monomial, Rational>> = BTreeMap::new();
        for (m, c) in self.terms.iter() {
            let mut degree = 0u32;
            for (a, k) in &m.0 {
                match a {
                    Atom::Var(Var::Jet(_)) if *k > 0 => degree += *k as u32,
                    Atom::Var(Var::Jet(_)) => return None,
                    Atom::Func(_, inner) | Atom::Sum(inner) if !inner.jet_vars().is_empty() => return None,
                    _ => {}
                }
            }
            *out.entry(degree).or_default().entry(m.clone()).or_insert_with(Rational::zero) += c;
        }
        Some(out.into_iter().map(|(d, map)| (d, Expr::from_map(map))).filter(|(_, e)| !e.is_zero()).collect())
    }

    /// Collect terms by the exponent of `v` where `v` appears as a plain
    /// factor. Returns `None` if `v` also appears inside a function or sum.
    pub fn coefficients_in(&self, v: &Var) -> Option<BTreeMap<i32, Expr>> {
        let mut out: BTreeMap<i32, BTreeMap<Monomial, Rational>> = BTreeMap::new();
        for (m, c) in self.terms.iter() {
            let mut k_v = 0;
            let mut rest = Vec::with_capacity(m.0.len());
            for (a, k) in &m.0 {
                match a {
                    Atom::Var(w) if w == v => k_v = *k,
                    Atom::Func(_, inner) | Atom::Sum(inner) if inner.depends_on(v) => return None,
                    _ => rest.push((a.clone(), *k)),
                }
            }
            *out.entry(k_v).or_default().entry(Monomial(rest)).or_insert_with(Rational::zero) += c;
        }
        Some(out.into_iter().map(|(d, map)| (d, Expr::from_map(map))).collect())
    }
}

fn add_into(acc: &mut BTreeMap<Monomial, Rational>, e: &Expr) {
    for (m, c) in e.terms.iter() {
        match acc.get_mut(m) {
            Some(existing) => *existing += c,
            None => {
                acc.insert(m.clone(), c.clone());
            }
        }
    }
}

fn atom_partial(atom: &Atom, v: &Var) -> Expr {
    match atom {
        Atom::Param(_) => Expr::zero(),
        Atom::Var(w) => {
            if w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Sum(s) => s.partial(v),
        Atom::Func(f, arg) => {
            let inner = arg.partial(v);
            if inner.is_zero() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Sin => arg.cos(),
                Func::Cos => -arg.sin(),
                Func::Exp => arg.exp(),
                Func::Log => arg.recip().expect("argument with nonzero derivative is nonzero"),
            };
            &outer * &inner
        }
    }
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b) = (&*self.terms, &*other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = &a[i].1 + &b[j].1;
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr { terms: Arc::new(out) }
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut acc = BTreeMap::new();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                let merged = ma.merged(mb);
                let coeff = ca * cb;
                let needs_expansion = merged
                    .iter()
                    .any(|(a, k)| matches!(a, Atom::Sum(_)) && (1..=MAX_EXPANDED_POWER).contains(k));
                if needs_expansion {
                    add_into(&mut acc, &Expr::settle(merged, coeff));
                } else {
                    *acc.entry(Monomial(merged)).or_insert_with(Rational::zero) += coeff;
                }
            }
        }
        Expr::from_map(acc)
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, other: &Expr) -> Expr {
        self + &(-other)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: Arc::new(self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect()) }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, other: Expr) -> Expr {
                (&self).$method(&other)
            }
        }
        impl<'a> $tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $method(self, other: &Expr) -> Expr {
                (&self).$method(other)
            }
        }
        impl<'a> $tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $method(self, other: Expr) -> Expr {
                self.$method(&other)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let mut acc = BTreeMap::new();
        for e in iter {
            add_into(&mut acc, &e);
        }
        Expr::from_map(acc)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

/// `true` iff the rational is a (possibly negative) integer.
pub(crate) fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}
