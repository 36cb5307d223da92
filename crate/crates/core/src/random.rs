//! Seeded generators for randomized checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bicomplex::{BigradedForm, Generator};
use crate::symexpr::{BundleSignature, Expr, JetVar, Var};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Random polynomials, forms and maps from a fixed seed.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn unit(&mut self) -> f64 {
        self.rng.gen()
    }

    /// A nonzero coefficient from `±{1, 2, 3, 1/2, 3/2}`.
    pub fn coefficient(&mut self) -> Expr {
        let (p, q) = *[(1, 1), (2, 1), (3, 1), (1, 2), (3, 2)].choose(&mut self.rng).expect("nonempty");
        let sign = if self.rng.gen_bool(0.5) { 1 } else { -1 };
        Expr::ratio(sign * p, q)
    }

    /// A polynomial with `terms` random monomials of degree `≤ max_degree`
    /// built from the given atoms.
    pub fn polynomial(&mut self, atoms: &[Expr], max_degree: u32, terms: usize) -> Expr {
        let mut out = Expr::zero();
        for _ in 0..terms {
            let degree = self.rng.gen_range(0..=max_degree);
            let mut m = self.coefficient();
            for _ in 0..degree {
                if let Some(a) = atoms.choose(&mut self.rng) {
                    m = &m * a;
                }
            }
            out = &out + &m;
        }
        out
    }

    /// Jet coordinates of order `≤ max_order` as expressions.
    pub fn jet_atoms(sig: &BundleSignature, max_order: u32) -> Vec<Expr> {
        sig.jet_coordinates(max_order).into_iter().map(|j| Expr::var(Var::Jet(j))).collect()
    }

    /// Base coordinates `Base(offset..offset + dim)`.
    pub fn base_atoms(offset: usize, dim: usize) -> Vec<Expr> {
        (offset..offset + dim).map(Expr::base).collect()
    }

    /// A polynomial in jet coordinates, optionally also in base coordinates.
    pub fn jet_polynomial(&mut self, sig: &BundleSignature, max_order: u32, max_degree: u32, with_base: bool) -> Expr {
        let mut atoms = Sampler::jet_atoms(sig, max_order);
        if with_base {
            atoms.extend(Sampler::base_atoms(0, sig.base_dim()));
        }
        let terms = self.rng.gen_range(1..=4);
        self.polynomial(&atoms, max_degree, terms)
    }

    /// Like [`Sampler::jet_polynomial`], but guaranteed to involve a jet
    /// coordinate of exactly `order`.
    pub fn jet_polynomial_of_order(&mut self, sig: &BundleSignature, order: u32, max_degree: u32, with_base: bool) -> Expr {
        let tops: Vec<JetVar> = sig.jet_coordinates(order).into_iter().filter(|j| j.order() == order).collect();
        let top = Expr::var(Var::Jet(tops.choose(&mut self.rng).expect("nonempty").clone()));
        let rest = self.jet_polynomial(sig, order, max_degree.saturating_sub(1).max(1), with_base);
        let lead = &self.coefficient() * &top.pow(self.rng.gen_range(1..=max_degree.max(1)));
        &lead + &rest
    }

    /// A random bigraded form of bidegree `(s, r)` with coefficients of order
    /// `≤ order` and contact generators of order `≤ order`.
    pub fn form(&mut self, sig: &BundleSignature, s: usize, r: usize, order: u32) -> BigradedForm {
        let m = sig.base_dim();
        let jets = sig.jet_coordinates(order);
        let mut out = BigradedForm::zero(m, s, r);
        if r > m || s > jets.len() {
            return out;
        }
        let terms = self.rng.gen_range(1..=3);
        for _ in 0..terms {
            let mut dirs: Vec<usize> = (0..m).collect();
            dirs.shuffle(&mut self.rng);
            let mut gens: Vec<Generator> = dirs[..r].iter().map(|&mu| Generator::Dx(mu)).collect();
            let picked: Vec<JetVar> = jets.choose_multiple(&mut self.rng, s).cloned().collect();
            gens.extend(picked.into_iter().map(Generator::Theta));
            let coeff = self.jet_polynomial(sig, order, 2, true);
            let term = BigradedForm::monomial(m, gens, coeff).expect("generators in range");
            out = out.add(&term).expect("same bidegree");
        }
        out
    }

    /// Polynomial components in `Base(0..dim)`, degree `≤ max_degree`.
    pub fn polynomial_map(&mut self, dim: usize, components: usize, max_degree: u32) -> Vec<Expr> {
        let atoms = Sampler::base_atoms(0, dim);
        (0..components)
            .map(|_| {
                let terms = self.rng.gen_range(1..=3);
                self.polynomial(&atoms, max_degree, terms)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_reproducible() {
        let sig = BundleSignature::new(&["t", "x"], &["u"], &[]).unwrap();
        let a = Sampler::new(7).jet_polynomial(&sig, 2, 3, true);
        let b = Sampler::new(7).jet_polynomial(&sig, 2, 3, true);
        assert_eq!(a, b);
        let f = Sampler::new(3).form(&sig, 2, 1, 2);
        assert_eq!(f.bidegree(), (2, 1));
        let top = Sampler::new(11).jet_polynomial_of_order(&sig, 2, 3, false);
        assert_eq!(top.order(), 2);
    }
}
