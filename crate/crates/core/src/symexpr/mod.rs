//! Canonical symbolic expressions over jet-bundle coordinates.

mod expr;
mod parse;
mod print;
mod signature;
mod tree;

use std::collections::BTreeMap;

pub use expr::{Atom, DivisionByZero, EvalError, Expr, Func, Monomial, Rational, MAX_EXPANDED_POWER};
pub use parse::{parse_expression, ParseError, ParseErrorKind};
pub use print::ExprDisplay;
pub use signature::{BundleSignature, JetVar, MultiIndex, SignatureError, Var};
pub use tree::{normalize, Tree};


/// Evaluate with explicit coordinate and parameter maps.
pub fn evaluate(e: &Expr, assignment: &BTreeMap<Var, f64>, params: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    e.eval(&|v| assignment.get(v).copied(), &|p| params.get(p).copied())
}

/// Evaluate with coordinates given by name (`x`, `u_xt`).
pub fn evaluate_named(
    e: &Expr,
    sig: &BundleSignature,
    assignment: &BTreeMap<String, f64>,
    params: &BTreeMap<String, f64>,
) -> Result<f64, EvalError> {
    e.eval(&|v| assignment.get(&sig.var_name(v)).copied(), &|p| params.get(p).copied())
        .map_err(|err| match err {
            EvalError::MissingAssignment(_) => {
                let missing = e.vars().into_iter().map(|v| sig.var_name(&v)).find(|n| !assignment.contains_key(n));
                EvalError::MissingAssignment(missing.unwrap_or_default())
            }
            other => other,
        })
}

/// Partial derivative with respect to a named coordinate.
pub fn partial_named(e: &Expr, sig: &BundleSignature, coordinate: &str) -> Result<Expr, SignatureError> {
    Ok(e.partial(&sig.parse_coordinate(coordinate)?))
}
