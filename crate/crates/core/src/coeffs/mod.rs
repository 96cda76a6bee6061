//! Exact scalar arithmetic: rationals, sparse multivariate polynomials and
//! canonical rational functions.

mod gcd;
mod poly;
mod ratfun;

pub use gcd::{content, gcd, primitive_part};
pub use poly::{Monomial, MultiPoly};
pub use ratfun::{arith, ArithOp, RationalFunction};

/// Arbitrary-precision rational number, always in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}
