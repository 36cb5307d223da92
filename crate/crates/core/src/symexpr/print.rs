//! Plain-text and LaTeX rendering of normal forms.
//!
//! The plain-text form is accepted by the parser and re-parses to the same
//! normal form.

use std::cmp::Reverse;
use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::expr::{Atom, Expr, Monomial, Rational};
use super::signature::{BundleSignature, Var};

/// Terms in display order: highest degree first, then canonical order.
pub(crate) fn display_order(e: &Expr) -> Vec<&(Monomial, Rational)> {
    let mut terms: Vec<_> = e.terms().iter().collect();
    terms.sort_by_key(|(m, _)| (Reverse(m.degree()), m));
    terms
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    sig: &'a BundleSignature,
}

impl Expr {
    pub fn display<'a>(&'a self, sig: &'a BundleSignature) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, sig }
    }

    pub fn to_text(&self, sig: &BundleSignature) -> String {
        self.display(sig).to_string()
    }

    pub fn to_latex(&self, sig: &BundleSignature) -> String {
        let mut out = String::new();
        write_latex(&mut out, self, sig).expect("writing to a String");
        out
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_text(f, self.expr, self.sig)
    }
}

fn write_rational(out: &mut impl Write, r: &Rational) -> fmt::Result {
    if r.denom().is_one() {
        write!(out, "{}", r.numer())
    } else {
        write!(out, "{}/{}", r.numer(), r.denom())
    }
}

fn write_text(out: &mut impl Write, e: &Expr, sig: &BundleSignature) -> fmt::Result {
    let terms = display_order(e);
    if terms.is_empty() {
        return out.write_str("0");
    }
    for (i, (m, c)) in terms.into_iter().enumerate() {
        let negative = c.is_negative();
        match (i, negative) {
            (0, true) => out.write_str("-")?,
            (0, false) => {}
            (_, true) => out.write_str(" - ")?,
            (_, false) => out.write_str(" + ")?,
        }
        let mag = c.abs();
        if m.is_one() {
            write_rational(out, &mag)?;
            continue;
        }
        if !mag.is_one() {
            write_rational(out, &mag)?;
            out.write_str("*")?;
        }
        for (j, (atom, k)) in m.factors().iter().enumerate() {
            if j > 0 {
                out.write_str("*")?;
            }
            write_atom_text(out, atom, sig)?;
            if *k != 1 {
                write!(out, "^{k}")?;
            }
        }
    }
    Ok(())
}

fn write_atom_text(out: &mut impl Write, atom: &Atom, sig: &BundleSignature) -> fmt::Result {
    match atom {
        Atom::Param(p) => out.write_str(p),
        Atom::Var(v) => out.write_str(&sig.var_name(v)),
        Atom::Func(f, arg) => {
            write!(out, "{}(", f.name())?;
            write_text(out, arg, sig)?;
            out.write_str(")")
        }
        Atom::Sum(s) => {
            out.write_str("(")?;
            write_text(out, s, sig)?;
            out.write_str(")")
        }
    }
}

fn latex_var(v: &Var, sig: &BundleSignature) -> String {
    match v {
        Var::Base(mu) => sig.base_names()[*mu].clone(),
        Var::Jet(j) => {
            let field = &sig.field_names()[j.field];
            if j.index.is_zero() {
                field.clone()
            } else {
                let name = sig.jet_name(j);
                let sub = &name[field.len() + 1..];
                format!("{field}_{{{sub}}}")
            }
        }
    }
}

fn write_latex(out: &mut impl Write, e: &Expr, sig: &BundleSignature) -> fmt::Result {
    let terms = display_order(e);
    if terms.is_empty() {
        return out.write_str("0");
    }
    for (i, (m, c)) in terms.into_iter().enumerate() {
        let negative = c.is_negative();
        match (i, negative) {
            (0, true) => out.write_str("-")?,
            (0, false) => {}
            (_, true) => out.write_str(" - ")?,
            (_, false) => out.write_str(" + ")?,
        }
        let mag = c.abs();
        if !mag.is_one() || m.is_one() {
            if mag.denom().is_one() {
                write!(out, "{}", mag.numer())?;
            } else {
                write!(out, "\\frac{{{}}}{{{}}}", mag.numer(), mag.denom())?;
            }
            if !m.is_one() {
                out.write_str(" ")?;
            }
        }
        for (j, (atom, k)) in m.factors().iter().enumerate() {
            if j > 0 {
                out.write_str(" ")?;
            }
            let needs_group = *k != 1 && matches!(atom, Atom::Var(Var::Jet(jv)) if !jv.index.is_zero());
            if needs_group {
                out.write_str("{")?;
            }
            match atom {
                Atom::Param(p) => out.write_str(p)?,
                Atom::Var(v) => out.write_str(&latex_var(v, sig))?,
                Atom::Func(f, arg) => {
                    write!(out, "\\{}\\left(", f.name())?;
                    write_latex(out, arg, sig)?;
                    out.write_str("\\right)")?;
                }
                Atom::Sum(s) => {
                    out.write_str("\\left(")?;
                    write_latex(out, s, sig)?;
                    out.write_str("\\right)")?;
                }
            }
            if needs_group {
                out.write_str("}")?;
            }
            if *k != 1 {
                write!(out, "^{{{k}}}")?;
            }
        }
    }
    Ok(())
}
