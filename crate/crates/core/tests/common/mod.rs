#![allow(dead_code)]

use std::sync::Arc;

use nambu_core::coeffs::{int, Monomial};
use nambu_core::exterior::{Kind, MultiIndex, Tensor};
use nambu_core::{Chart, MultiPoly, Rational, RationalFunction};
use proptest::prelude::*;

pub fn chart(names: &[&str]) -> Arc<Chart> {
    Chart::new(names.iter().copied(), std::iter::empty::<&str>()).unwrap()
}

pub fn idx(v: &[usize]) -> MultiIndex {
    MultiIndex::new(v).unwrap()
}

pub fn poly(nv: usize, max_terms: usize, max_exp: u16) -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((prop::collection::vec(0..=max_exp, nv), -3i64..=3), 0..=max_terms).prop_map(move |ts| {
        MultiPoly::from_terms(nv, ts.into_iter().map(|(e, c)| (Monomial::from_exponents(&e), int(c))))
    })
}

/// Rational function with a denominator `1 + q` for a small polynomial `q`
/// without constant term, so the denominator is never zero.
pub fn ratfun(nv: usize) -> impl Strategy<Value = RationalFunction> {
    (poly(nv, 3, 2), poly(nv, 2, 1), any::<bool>()).prop_map(move |(n, d, plain)| {
        if plain {
            return RationalFunction::from_poly(n);
        }
        let d = MultiPoly::from_terms(nv, d.terms().filter(|(m, _)| !m.is_one()).map(|(m, c)| (m.clone(), c.clone())));
        let d = &MultiPoly::one(nv) + &d;
        RationalFunction::new(n, d).unwrap()
    })
}

/// Polynomial over a single linear denominator `1 + k*x_i`.
pub fn light_ratfun(nv: usize) -> impl Strategy<Value = RationalFunction> {
    (poly(nv, 3, 2), 0..nv, -2i64..=2).prop_map(move |(n, i, k)| {
        let d = &MultiPoly::one(nv) + &MultiPoly::var(i, nv).scale(&int(k));
        RationalFunction::new(n, d).unwrap()
    })
}

pub fn polyfun(nv: usize) -> impl Strategy<Value = RationalFunction> {
    poly(nv, 3, 2).prop_map(RationalFunction::from_poly)
}

/// Random homogeneous tensor of the given degree on `chart` with at most
/// three terms.
pub fn tensor<K: Kind>(chart: Arc<Chart>, degree: usize, polynomial: bool) -> impl Strategy<Value = Tensor<K>> {
    let nv = chart.nvars();
    let basis = MultiIndex::all(chart.dim(), degree);
    let coeff = if polynomial { polyfun(nv).boxed() } else { light_ratfun(nv).boxed() };
    prop::collection::vec((0..basis.len().max(1), coeff), 0..=3).prop_map(move |ts| {
        let terms: Vec<(MultiIndex, RationalFunction)> = ts.into_iter().filter(|_| !basis.is_empty()).map(|(i, c)| (basis[i].clone(), c)).collect();
        Tensor::from_terms(&chart, degree, terms)
    })
}

pub fn point(nv: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-9i64..=9, 1i64..=9), nv).prop_map(|v| v.into_iter().map(|(n, d)| Rational::new(n.into(), d.into())).collect())
}

pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}
