//! Multivariate polynomial GCD over the rationals.
//!
//! The heuristic integer-evaluation GCD is tried first: evaluate one
//! variable at a large integer, recurse, and lift the result back by its
//! ξ-adic expansion, accepting it only if it divides both inputs. When the
//! heuristic gives up, a recursive content/primitive-part decomposition with a
//! primitive pseudo-remainder sequence takes over.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::poly::{Monomial, MultiPoly};
use super::Rational;

const HEURISTIC_ATTEMPTS: usize = 6;
const HEURISTIC_MAX_BITS: u64 = 400_000;

/// Monic greatest common divisor. `gcd(0, 0) = 0`.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let n = a.nvars();
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one(n);
    }
    if a == b {
        return a.monic();
    }
    if b.total_degree() <= a.total_degree() && a.exact_div(b).is_some() {
        return b.monic();
    }
    if a.total_degree() <= b.total_degree() && b.exact_div(a).is_some() {
        return a.monic();
    }

    let ua = a.used_vars();
    let ub = b.used_vars();
    let vars: Vec<usize> = (0..n).filter(|&i| ua[i] || ub[i]).collect();
    let (ia, ib) = (IntPoly::from_poly(&a.integer_normalized()), IntPoly::from_poly(&b.integer_normalized()));
    if let Some(g) = heuristic(&ia, &ib, &vars) {
        return g.to_poly().monic();
    }
    prs_gcd(a, b)
}

/// Recursive gcd through contents and primitive remainder sequences in the
/// variable of least degree. Inputs are nonzero and non-constant.
fn prs_gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let ua = a.used_vars();
    let ub = b.used_vars();
    let v = (0..a.nvars())
        .filter(|&i| ua[i] || ub[i])
        .min_by_key(|&i| a.degree_in(i).max(b.degree_in(i)))
        .expect("non-constant polynomial uses a variable");
    match (ua[v], ub[v]) {
        (true, false) => gcd_against_coefficients(a, v, b),
        (false, true) => gcd_against_coefficients(b, v, a),
        _ => {
            let ca = content(a, v);
            let cb = content(b, v);
            let pa = a.exact_div(&ca).expect("content divides");
            let pb = b.exact_div(&cb).expect("content divides");
            let c = gcd(&ca, &cb);
            let g = primitive_prs(pa, pb, v);
            (&c * &g).monic()
        }
    }
}

/// `gcd(a, b)` where `b` does not involve `v`: fold `b` against the
/// coefficients of `a` in `v`.
fn gcd_against_coefficients(a: &MultiPoly, v: usize, b: &MultiPoly) -> MultiPoly {
    let mut g = b.clone();
    for c in a.coefficients_in(v).iter().filter(|c| !c.is_zero()) {
        g = gcd(&g, c);
        if g.is_constant() {
            return MultiPoly::one(a.nvars());
        }
    }
    g.monic()
}

/// Content of `a` viewed as a polynomial in `v`: the monic GCD of its
/// coefficients.
pub fn content(a: &MultiPoly, v: usize) -> MultiPoly {
    let mut g = MultiPoly::zero(a.nvars());
    for c in a.coefficients_in(v).iter().filter(|c| !c.is_zero()) {
        g = gcd(&g, c);
        if g.is_constant() {
            return MultiPoly::one(a.nvars());
        }
    }
    g
}

pub fn primitive_part(a: &MultiPoly, v: usize) -> MultiPoly {
    if a.is_zero() {
        return a.clone();
    }
    let c = content(a, v);
    a.exact_div(&c).expect("content divides").integer_normalized()
}

/// Pseudo-remainder of `a` by `b` in `v`, without the trailing power of the
/// leading coefficient (callers take primitive parts anyway).
fn pseudo_remainder(a: &MultiPoly, b: &MultiPoly, v: usize) -> MultiPoly {
    let db = b.degree_in(v);
    let lcb = b.leading_coefficient_in(v);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lcr = r.leading_coefficient_in(v);
        let lhs = &r * &lcb;
        let rhs = &(&lcr * b).shift_in(v, dr - db);
        r = &lhs - rhs;
    }
    r
}

fn primitive_prs(a: MultiPoly, b: MultiPoly, v: usize) -> MultiPoly {
    let (mut r0, mut r1) = if a.degree_in(v) >= b.degree_in(v) { (a, b) } else { (b, a) };
    r0 = r0.integer_normalized();
    r1 = r1.integer_normalized();
    loop {
        let r = pseudo_remainder(&r0, &r1, v);
        if r.is_zero() {
            return primitive_part(&r1, v);
        }
        if r.degree_in(v) == 0 {
            return MultiPoly::one(r1.nvars());
        }
        r0 = r1;
        r1 = primitive_part(&r, v);
    }
}

/// Integer polynomial used by the heuristic; keeps big integers out of
/// rational normalisation.
#[derive(Clone, PartialEq)]
struct IntPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl IntPoly {
    /// `p` must have integer coefficients.
    fn from_poly(p: &MultiPoly) -> Self {
        let terms = p.terms().map(|(m, c)| (m.clone(), c.to_integer())).collect();
        IntPoly { nvars: p.nvars(), terms }
    }

    fn to_poly(&self) -> MultiPoly {
        MultiPoly::from_terms(self.nvars, self.terms.iter().map(|(m, c)| (m.clone(), Rational::from_integer(c.clone()))))
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    fn norm(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_default()
    }

    fn degree_in(&self, v: usize) -> u16 {
        self.terms.keys().map(|m| m.exponents()[v]).max().unwrap_or(0)
    }

    fn div_scalar(&self, c: &BigInt) -> Self {
        IntPoly { nvars: self.nvars, terms: self.terms.iter().map(|(m, x)| (m.clone(), x / c)).collect() }
    }

    fn scale(&self, c: &BigInt) -> Self {
        IntPoly { nvars: self.nvars, terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    fn add_term(terms: &mut BTreeMap<Monomial, BigInt>, m: Monomial, c: BigInt) {
        match terms.entry(m) {
            Entry::Vacant(e) => {
                if !c.is_zero() {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Substitutes the integer `xi` for variable `v`.
    fn evaluate_at(&self, v: usize, xi: &BigInt) -> Self {
        let mut powers = vec![BigInt::one()];
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut e = m.exponents().to_vec();
            let k = std::mem::take(&mut e[v]) as usize;
            while powers.len() <= k {
                let next = powers.last().unwrap() * xi;
                powers.push(next);
            }
            Self::add_term(&mut terms, Monomial::from_exponents(&e), c * &powers[k]);
        }
        IntPoly { nvars: self.nvars, terms }
    }

    /// Reads the coefficients as ξ-adic digits in variable `v`.
    fn lift(&self, v: usize, xi: &BigInt) -> Self {
        let mut terms = BTreeMap::new();
        let mut rest: Vec<(Vec<u16>, BigInt)> = self.terms.iter().map(|(m, c)| (m.exponents().to_vec(), c.clone())).collect();
        let mut k: u16 = 0;
        while !rest.is_empty() {
            for (e, c) in &mut rest {
                let digit = symmetric_mod(c, xi);
                *c = (&*c - &digit) / xi;
                if !digit.is_zero() {
                    let mut me = e.clone();
                    me[v] = k;
                    terms.insert(Monomial::from_exponents(&me), digit);
                }
            }
            rest.retain(|(_, c)| !c.is_zero());
            k += 1;
        }
        IntPoly { nvars: self.nvars, terms }
    }

    /// Primitive part with a positive leading coefficient.
    fn normalized(&self) -> Self {
        let mut c = self.content();
        if self.terms.values().next_back().is_some_and(|l| l.is_negative()) {
            c = -c;
        }
        self.div_scalar(&c)
    }

    /// Exact division over the integers.
    fn divides(&self, a: &IntPoly) -> bool {
        let Some((lm, lc)) = self.terms.iter().next_back() else { return false };
        let mut rem = a.terms.clone();
        while let Some((rm, rc)) = rem.iter().next_back() {
            if !lm.divides(rm) {
                return false;
            }
            let (q, r) = rc.div_rem(lc);
            if !r.is_zero() {
                return false;
            }
            let qm = rm.div(lm);
            for (m, c) in &self.terms {
                Self::add_term(&mut rem, m.mul(&qm), -(c * &q));
            }
        }
        true
    }
}

fn symmetric_mod(c: &BigInt, xi: &BigInt) -> BigInt {
    let r = c.mod_floor(xi);
    if &r * 2 > *xi {
        r - xi
    } else {
        r
    }
}

/// GCD of integer polynomials including the integer content, or `None` when
/// the evaluation points run out or grow too large.
fn heuristic(a: &IntPoly, b: &IntPoly, vars: &[usize]) -> Option<IntPoly> {
    let (ca, cb) = (a.content(), b.content());
    let c = ca.gcd(&cb);
    let Some((&v, rest)) = vars.split_last() else {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::one(a.nvars), c);
        return Some(IntPoly { nvars: a.nvars, terms });
    };
    let a = a.div_scalar(&ca);
    let b = b.div_scalar(&cb);
    let degree = u64::from(a.degree_in(v).max(b.degree_in(v)));
    if degree == 0 {
        return heuristic(&a, &b, rest).map(|g| g.scale(&c));
    }
    let mut xi: BigInt = a.norm().min(b.norm()) * 2 + 29;
    for _ in 0..HEURISTIC_ATTEMPTS {
        if xi.bits() * degree > HEURISTIC_MAX_BITS {
            return None;
        }
        let (ea, eb) = (a.evaluate_at(v, &xi), b.evaluate_at(v, &xi));
        if !ea.is_zero() && !eb.is_zero() {
            if let Some(gamma) = heuristic(&ea, &eb, rest) {
                let g = gamma.lift(v, &xi).normalized();
                if g.divides(&a) && g.divides(&b) {
                    return Some(g.scale(&c));
                }
            }
        }
        xi = xi * 73794 / 27011;
    }
    None
}
