//! Un-normalized expression trees and the `normalize` map into [`Expr`].

use super::expr::{Atom, DivisionByZero, Expr, Func, Rational};
use super::signature::Var;

/// An arbitrary expression tree, not yet in normal form.
#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    Num(Rational),
    Param(String),
    Var(Var),
    Add(Vec<Tree>),
    Mul(Vec<Tree>),
    Neg(Box<Tree>),
    Div(Box<Tree>, Box<Tree>),
    Pow(Box<Tree>, i32),
    Func(Func, Box<Tree>),
}

/// Bring a tree into canonical normal form.
///
/// Fails only when the tree divides by something that normalizes to zero.
pub fn normalize(t: &Tree) -> Result<Expr, DivisionByZero> {
    Ok(match t {
        Tree::Num(r) => Expr::constant(r.clone()),
        Tree::Param(p) => Expr::param(p),
        Tree::Var(v) => Expr::var(v.clone()),
        Tree::Add(xs) => xs.iter().map(normalize).collect::<Result<Vec<_>, _>>()?.into_iter().sum(),
        Tree::Mul(xs) => {
            let mut acc = Expr::one();
            for x in xs {
                acc = &acc * &normalize(x)?;
            }
            acc
        }
        Tree::Neg(x) => -normalize(x)?,
        Tree::Div(a, b) => normalize(a)?.checked_div(&normalize(b)?)?,
        Tree::Pow(b, k) => normalize(b)?.powi(*k)?,
        Tree::Func(f, x) => Expr::apply(*f, normalize(x)?),
    })
}

impl Expr {
    /// The normal form as a plain tree; `normalize(&e.to_tree()) == e`.
    pub fn to_tree(&self) -> Tree {
        Tree::Add(
            self.terms()
                .iter()
                .map(|(m, c)| {
                    let mut factors = vec![Tree::Num(c.clone())];
                    for (a, k) in m.factors() {
                        let base = match a {
                            Atom::Param(p) => Tree::Param(p.to_string()),
                            Atom::Var(v) => Tree::Var(v.clone()),
                            Atom::Func(f, arg) => Tree::Func(*f, Box::new(arg.to_tree())),
                            Atom::Sum(s) => s.to_tree(),
                        };
                        factors.push(Tree::Pow(Box::new(base), *k));
                    }
                    Tree::Mul(factors)
                })
                .collect(),
        )
    }
}
