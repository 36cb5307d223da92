#![allow(dead_code)]

use proptest::prelude::*;
use varjet::bicomplex::{BigradedForm, Generator};
use varjet::symexpr::{BundleSignature, Expr, Var};

pub fn sig_x() -> BundleSignature {
    BundleSignature::new(&["x"], &["u"], &[]).unwrap()
}

pub fn sig_tx() -> BundleSignature {
    BundleSignature::new(&["t", "x"], &["u"], &[]).unwrap()
}

pub fn sig_xy_uv() -> BundleSignature {
    BundleSignature::new(&["x", "y"], &["u", "v"], &[]).unwrap()
}

pub fn atoms(sig: &BundleSignature, order: u32, with_base: bool) -> Vec<Expr> {
    let mut out: Vec<Expr> = sig.jet_coordinates(order).into_iter().map(|j| Expr::var(Var::Jet(j))).collect();
    if with_base {
        out.extend((0..sig.base_dim()).map(Expr::base));
    }
    out
}

fn coefficient() -> impl Strategy<Value = Expr> {
    (prop_oneof![-3i64..=-1, 1i64..=3], 1i64..=2).prop_map(|(p, q)| Expr::ratio(p, q))
}

/// Polynomials with up to four terms of degree `≤ max_degree` in `atoms`.
pub fn polynomial(atoms: Vec<Expr>, max_degree: usize) -> impl Strategy<Value = Expr> {
    let n = atoms.len();
    prop::collection::vec((coefficient(), prop::collection::vec(0..n, 0..=max_degree)), 1..=4).prop_map(move |terms| {
        terms.into_iter().fold(Expr::zero(), |acc, (c, idx)| {
            let m = idx.iter().fold(c, |m, &i| &m * &atoms[i]);
            &acc + &m
        })
    })
}

pub fn jet_polynomial(sig: &BundleSignature, order: u32, max_degree: usize) -> impl Strategy<Value = Expr> {
    polynomial(atoms(sig, order, true), max_degree)
}

/// Bigraded forms of bidegree `(s, r)` with up to three terms.
pub fn form(sig: &BundleSignature, s: usize, r: usize, order: u32) -> impl Strategy<Value = BigradedForm> {
    let m = sig.base_dim();
    let jets = sig.jet_coordinates(order);
    let nj = jets.len();
    let term = (
        Just((0..m).collect::<Vec<_>>()).prop_shuffle(),
        prop::sample::subsequence((0..nj).collect::<Vec<_>>(), s.min(nj)),
        jet_polynomial(sig, order, 2),
    );
    prop::collection::vec(term, 1..=3).prop_map(move |terms| {
        terms.into_iter().fold(BigradedForm::zero(m, s, r), |acc, (dirs, picked, coeff)| {
            if r > m || s > nj {
                return acc;
            }
            let mut gens: Vec<Generator> = dirs[..r].iter().map(|&mu| Generator::Dx(mu)).collect();
            gens.extend(picked.iter().map(|&i| Generator::Theta(jets[i].clone())));
            acc.add(&BigradedForm::monomial(m, gens, coeff).unwrap()).unwrap()
        })
    })
}

/// Polynomial maps `R^dim → R^n` in `Base(0..dim)`.
pub fn polynomial_map(dim: usize, n: usize, max_degree: usize) -> impl Strategy<Value = Vec<Expr>> {
    let atoms: Vec<Expr> = (0..dim).map(Expr::base).collect();
    prop::collection::vec(polynomial(atoms, max_degree), n)
}
