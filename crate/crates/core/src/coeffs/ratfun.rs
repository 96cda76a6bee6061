use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::MultiPoly;
use super::Rational;
use crate::error::{Error, Result};

/// A quotient of polynomials in canonical form.
///
/// Invariants: the denominator is nonzero and monic in graded-lex order, and
/// numerator and denominator share no non-constant factor. Zero is `0/1`.
/// With these, two rational functions are equal iff their fields are equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RationalFunction {
    num: MultiPoly,
    den: MultiPoly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Exact arithmetic with an explicit operator; division by zero is an error.
pub fn arith(a: &RationalFunction, b: &RationalFunction, op: ArithOp) -> Result<RationalFunction> {
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::Mul => Ok(a * b),
        ArithOp::Div => a.checked_div(b),
    }
}

impl RationalFunction {
    pub fn zero(nvars: usize) -> Self {
        RationalFunction { num: MultiPoly::zero(nvars), den: MultiPoly::one(nvars) }
    }

    pub fn one(nvars: usize) -> Self {
        RationalFunction { num: MultiPoly::one(nvars), den: MultiPoly::one(nvars) }
    }

    pub fn constant(c: Rational, nvars: usize) -> Self {
        Self::from_poly(MultiPoly::constant(c, nvars))
    }

    pub fn from_int(k: i64, nvars: usize) -> Self {
        Self::constant(Rational::from_integer(k.into()), nvars)
    }

    pub fn var(i: usize, nvars: usize) -> Self {
        Self::from_poly(MultiPoly::var(i, nvars))
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        let n = p.nvars();
        RationalFunction { num: p, den: MultiPoly::one(n) }
    }

    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(num, den))
    }

    fn canonical(num: MultiPoly, den: MultiPoly) -> Self {
        debug_assert!(!den.is_zero());
        let n = num.nvars();
        if num.is_zero() {
            return Self::zero(n);
        }
        if let Some(c) = den.constant_value() {
            return RationalFunction { num: num.scale(&c.recip()), den: MultiPoly::one(n) };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.exact_div(&g).expect("gcd divides"), den.exact_div(&g).expect("gcd divides"))
        };
        Self::normalized(num, den)
    }

    /// Makes the denominator monic; the caller guarantees coprimality.
    fn normalized(num: MultiPoly, den: MultiPoly) -> Self {
        let lc = den.leading_coefficient();
        if lc.is_one() {
            RationalFunction { num, den }
        } else {
            let inv = lc.recip();
            RationalFunction { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn numer(&self) -> &MultiPoly {
        &self.num
    }

    pub fn denom(&self) -> &MultiPoly {
        &self.den
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.den.is_one() && self.num.is_constant()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn depends_on(&self, v: usize) -> bool {
        self.num.uses_var(v) || self.den.uses_var(v)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars());
        }
        RationalFunction { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.inv()?)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::canonical(self.den.clone(), self.num.clone()))
    }

    pub fn pow(&self, e: u32) -> Self {
        // Powers of coprime polynomials stay coprime.
        let num = self.num.pow(e);
        let den = self.den.pow(e);
        RationalFunction { num, den }
    }

    /// Exact partial derivative with respect to ring variable `v`.
    pub fn partial(&self, v: usize) -> Self {
        if !self.depends_on(v) {
            return Self::zero(self.nvars());
        }
        if self.den.is_one() {
            return Self::from_poly(self.num.partial(v));
        }
        let dn = self.num.partial(v);
        let dd = self.den.partial(v);
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        Self::canonical(num, &self.den * &self.den)
    }

    pub fn evaluate(&self, point: &[Rational]) -> Result<Rational> {
        let d = self.den.evaluate(point);
        if d.is_zero() {
            return Err(Error::PoleAtPoint);
        }
        Ok(self.num.evaluate(point) / d)
    }

    /// Substitutes `images[i]` for variable `i`; the result lives in the ring
    /// of the images. Fails if the denominator becomes identically zero.
    pub fn compose(&self, images: &[RationalFunction], target_nvars: usize) -> Result<Self> {
        let num = compose_poly(&self.num, images, target_nvars);
        let den = compose_poly(&self.den, images, target_nvars);
        num.checked_div(&den)
    }

    /// Moves into another ring by renaming variables (see [`MultiPoly::remap`]).
    pub fn remap(&self, map: &[Option<usize>], target_nvars: usize) -> Self {
        RationalFunction {
            num: self.num.remap(map, target_nvars),
            den: self.den.remap(map, target_nvars),
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.den.is_one() {
            return self.num.render(names);
        }
        let n = self.num.render(names);
        let d = self.den.render(names);
        let n = if self.num.is_atomic() { n } else { format!("({n})") };
        let d = if self.den.is_atomic() { d } else { format!("({d})") };
        format!("{n}/{d}")
    }

    /// Rendering suitable as the left operand of `*`.
    pub fn render_factor(&self, names: &[String]) -> String {
        let s = self.render(names);
        if (self.den.is_one() && self.num.is_monomial_term()) || (!self.den.is_one() && self.num.is_atomic()) {
            s
        } else {
            format!("({s})")
        }
    }
}

fn compose_poly(p: &MultiPoly, images: &[RationalFunction], target_nvars: usize) -> RationalFunction {
    if images.iter().all(|r| r.is_polynomial()) {
        let polys: Vec<MultiPoly> = images.iter().map(|r| r.num.clone()).collect();
        return RationalFunction::from_poly(p.compose(&polys, target_nvars));
    }
    let mut acc = RationalFunction::zero(target_nvars);
    for (m, c) in p.terms() {
        let mut t = RationalFunction::constant(c.clone(), target_nvars);
        for (v, &e) in m.exponents().iter().enumerate() {
            if e > 0 {
                t = &t * &images[v].pow(e as u32);
            }
        }
        acc = &acc + &t;
    }
    acc
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let num = &self.num + &rhs.num;
            if self.den.is_one() {
                return RationalFunction::from_poly(num);
            }
            return RationalFunction::canonical(num, self.den.clone());
        }
        let g = gcd(&self.den, &rhs.den);
        let a = self.den.exact_div(&g).expect("gcd divides");
        let b = rhs.den.exact_div(&g).expect("gcd divides");
        let num = &(&self.num * &b) + &(&rhs.num * &a);
        if num.is_zero() {
            return RationalFunction::zero(self.nvars());
        }
        // With reduced inputs, `num` is coprime to `a` and `b`, so any
        // cancellation comes from `g` alone.
        let h = gcd(&num, &g);
        let (num, g) = if h.is_constant() {
            (num, g)
        } else {
            (num.exact_div(&h).expect("gcd divides"), g.exact_div(&h).expect("gcd divides"))
        };
        RationalFunction::normalized(num, &(&a * &b) * &g)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero(self.nvars());
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RationalFunction::from_poly(&self.num * &rhs.num);
        }
        // Cross-cancel; both inputs are already reduced.
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let n1 = self.num.exact_div(&g1).expect("gcd divides");
        let d2 = rhs.den.exact_div(&g1).expect("gcd divides");
        let n2 = rhs.num.exact_div(&g2).expect("gcd divides");
        let d1 = self.den.exact_div(&g2).expect("gcd divides");
        RationalFunction::normalized(&n1 * &n2, &d1 * &d2)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalFunction {
            type Output = RationalFunction;
            fn $m(self, rhs: RationalFunction) -> RationalFunction {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RationalFunction> for RationalFunction {
            type Output = RationalFunction;
            fn $m(self, rhs: &RationalFunction) -> RationalFunction {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars()).map(|i| format!("x{}", i + 1)).collect();
        f.write_str(&self.render(&names))
    }
}
