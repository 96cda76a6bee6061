//! Expression trees, their canonical text and their evaluation on a chart.

use std::fmt;
use std::sync::Arc;

use nambu_core::{Chart, Form, Multivector, Rational, RationalFunction};
use num_traits::{Signed, ToPrimitive};

use crate::error::{ErrorKind, EvalError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Power between scalars, wedge between tensors.
    Hat,
}

impl BinOp {
    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Hat => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Hat => "^",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(String),
    Name(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

const NEG_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Int(_) | Expr::Name(_) => ATOM_PREC,
            Expr::Neg(_) => NEG_PREC,
            Expr::Bin(op, ..) => op.prec(),
        }
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn starts_with_minus(&self) -> bool {
        match self {
            Expr::Neg(_) => true,
            Expr::Bin(_, l, _) => l.starts_with_minus(),
            _ => false,
        }
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(s) | Expr::Name(s) => f.write_str(s),
            Expr::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, e.prec() < NEG_PREC)
            }
            Expr::Bin(op, l, r) => {
                let p = op.prec();
                // `^` groups to the right, everything else to the left.
                let right_assoc = *op == BinOp::Hat;
                wrap(f, l, l.prec() < p || (right_assoc && l.prec() == p))?;
                f.write_str(op.symbol())?;
                wrap(f, r, r.prec() < p || (!right_assoc && r.prec() == p))
            }
        }
    }
}

/// A scalar, a multivector or a form.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(RationalFunction),
    Vector(Multivector),
    Form(Form),
}

impl Value {
    pub fn describe(&self) -> String {
        match self {
            Value::Scalar(_) => "function".into(),
            Value::Vector(v) => format!("{}-vector", v.degree()),
            Value::Form(w) => format!("{}-form", w.degree()),
        }
    }

    pub fn render(&self, chart: &Chart) -> String {
        match self {
            Value::Scalar(f) => f.render(&chart.var_names()),
            Value::Vector(v) => v.render(),
            Value::Form(w) => w.render(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Scalar(f) => f.is_zero(),
            Value::Vector(v) => v.is_zero(),
            Value::Form(w) => w.is_zero(),
        }
    }
}

/// Name lookup for evaluation: chart variables always resolve first, then
/// `named`, then `D<coord>` / `d<coord>`.
pub struct Scope<'a> {
    pub chart: &'a Arc<Chart>,
    pub named: &'a dyn Fn(&str) -> Option<Value>,
}

impl<'a> Scope<'a> {
    pub fn bare(chart: &'a Arc<Chart>) -> Self {
        Scope { chart, named: &|_| None }
    }
}

const MAX_EXPONENT: i64 = 256;

fn degree_error(msg: String) -> EvalError {
    EvalError::new(ErrorKind::Degree, msg)
}

fn zero_division() -> EvalError {
    EvalError::new(ErrorKind::Syntax, "division by zero")
}

pub fn eval(e: &Expr, scope: &Scope<'_>, warnings: &mut Vec<String>) -> Result<Value, EvalError> {
    let chart = scope.chart;
    Ok(match e {
        Expr::Int(s) => {
            let q: Rational = s.parse().map_err(|_| EvalError::new(ErrorKind::Syntax, format!("bad integer `{s}`")))?;
            Value::Scalar(RationalFunction::constant(q, chart.nvars()))
        }
        Expr::Name(name) => resolve(name, scope)?,
        Expr::Neg(inner) => match eval(inner, scope, warnings)? {
            Value::Scalar(f) => Value::Scalar(-f),
            Value::Vector(v) => Value::Vector(-v),
            Value::Form(w) => Value::Form(-w),
        },
        Expr::Bin(op, l, r) => {
            let a = eval(l, scope, warnings)?;
            let b = eval(r, scope, warnings)?;
            binary(*op, a, b, chart, warnings)?
        }
    })
}

fn resolve(name: &str, scope: &Scope<'_>) -> Result<Value, EvalError> {
    let chart = scope.chart;
    if let Some(i) = chart.var_index(name) {
        return Ok(Value::Scalar(RationalFunction::var(i, chart.nvars())));
    }
    if let Some(v) = (scope.named)(name) {
        return Ok(v);
    }
    if let Some(rest) = name.strip_prefix('D') {
        if let Some(i) = chart.coord_index(rest) {
            return Ok(Value::Vector(Multivector::coordinate(chart, i)));
        }
    }
    if let Some(rest) = name.strip_prefix('d') {
        if let Some(i) = chart.coord_index(rest) {
            return Ok(Value::Form(Form::coordinate(chart, i)));
        }
    }
    let mut err = EvalError::new(ErrorKind::UnknownName, format!("unknown name `{name}`"));
    err.name = Some(name.to_string());
    Err(err)
}

fn binary(op: BinOp, a: Value, b: Value, chart: &Arc<Chart>, warnings: &mut Vec<String>) -> Result<Value, EvalError> {
    use Value::*;
    match op {
        BinOp::Add | BinOp::Sub => {
            let b = if op == BinOp::Sub {
                binary(BinOp::Mul, Scalar(RationalFunction::from_int(-1, chart.nvars())), b, chart, warnings)?
            } else {
                b
            };
            match (a, b) {
                (Scalar(x), Scalar(y)) => Ok(Scalar(&x + &y)),
                (Vector(x), Vector(y)) if x.degree() == y.degree() => Ok(Vector(&x + &y)),
                (Form(x), Form(y)) if x.degree() == y.degree() => Ok(Form(&x + &y)),
                (Scalar(z), t) | (t, Scalar(z)) if z.is_zero() => Ok(t),
                (x, y) => Err(degree_error(format!("cannot add a {} and a {}", x.describe(), y.describe()))),
            }
        }
        BinOp::Mul => match (a, b) {
            (Scalar(x), Scalar(y)) => Ok(Scalar(&x * &y)),
            (Scalar(x), Vector(v)) | (Vector(v), Scalar(x)) => Ok(Vector(v.scale(&x))),
            (Scalar(x), Form(w)) | (Form(w), Scalar(x)) => Ok(Form(w.scale(&x))),
            (x, y) => Err(degree_error(format!("cannot multiply a {} by a {}; use `^` for wedge products", x.describe(), y.describe()))),
        },
        BinOp::Div => {
            let Scalar(y) = b else {
                return Err(degree_error(format!("cannot divide by a {}", b.describe())));
            };
            let inv = y.inv().map_err(|_| zero_division())?;
            binary(BinOp::Mul, a, Scalar(inv), chart, warnings)
        }
        BinOp::Hat => match (a, b) {
            (Scalar(x), Scalar(y)) => power(&x, &y).map(Scalar),
            (Vector(x), Vector(y)) => {
                let w = x.wedge(&y).map_err(|e| degree_error(e.to_string()))?;
                note_vanishing(&x, &y, &w, warnings);
                Ok(Vector(w))
            }
            (Form(x), Form(y)) => {
                let w = x.wedge(&y).map_err(|e| degree_error(e.to_string()))?;
                note_vanishing(&x, &y, &w, warnings);
                Ok(Form(w))
            }
            (x, y) => Err(degree_error(format!("cannot wedge a {} with a {}; use `*` for scalar multiples", x.describe(), y.describe()))),
        },
    }
}

fn note_vanishing<K: nambu_core::exterior::Kind>(
    x: &nambu_core::exterior::Tensor<K>,
    y: &nambu_core::exterior::Tensor<K>,
    w: &nambu_core::exterior::Tensor<K>,
    warnings: &mut Vec<String>,
) {
    if w.is_zero() && !x.is_zero() && !y.is_zero() {
        warnings.push(format!("`{x}` ^ `{y}` is zero (repeated index)"));
    }
}

fn power(base: &RationalFunction, exp: &RationalFunction) -> Result<RationalFunction, EvalError> {
    let bad = || EvalError::new(ErrorKind::Syntax, "exponent must be an integer constant");
    let e = exp.constant_value().ok_or_else(bad)?;
    if !e.is_integer() {
        return Err(bad());
    }
    let e = e.to_integer().to_i64().filter(|e| e.abs() <= MAX_EXPONENT).ok_or_else(|| {
        EvalError::new(ErrorKind::Syntax, format!("exponent exceeds {MAX_EXPONENT} in absolute value"))
    })?;
    if e.is_negative() {
        Ok(base.inv().map_err(|_| zero_division())?.pow(e.unsigned_abs() as u32))
    } else {
        Ok(base.pow(e as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(s: &str) -> Box<Expr> {
        Box::new(Expr::Name(s.into()))
    }

    #[test]
    fn rendering_keeps_grouping() {
        let e = Expr::Bin(BinOp::Sub, x("a"), Box::new(Expr::Bin(BinOp::Sub, x("b"), x("c"))));
        assert_eq!(e.to_string(), "a - (b - c)");
        let e = Expr::Bin(BinOp::Hat, Box::new(Expr::Bin(BinOp::Hat, x("a"), x("b"))), x("c"));
        assert_eq!(e.to_string(), "(a^b)^c");
        let e = Expr::Bin(BinOp::Hat, x("a"), Box::new(Expr::Neg(Box::new(Expr::Int("1".into())))));
        assert_eq!(e.to_string(), "a^(-1)");
        let e = Expr::Neg(Box::new(Expr::Bin(BinOp::Mul, x("a"), x("b"))));
        assert_eq!(e.to_string(), "-(a*b)");
    }

    #[test]
    fn evaluation() {
        let c = Chart::new(["x", "y", "z"], ["c"]).unwrap();
        let scope = Scope::bare(&c);
        let mut warnings = Vec::new();
        let e = Expr::bin(BinOp::Hat, Expr::Name("x".into()), Expr::Neg(Box::new(Expr::Int("2".into()))));
        let v = eval(&e, &scope, &mut warnings).unwrap();
        assert_eq!(v.render(&c), "1/x^2");
        let e = Expr::bin(BinOp::Hat, Expr::Name("Dx".into()), Expr::Name("Dx".into()));
        assert!(eval(&e, &scope, &mut warnings).unwrap().is_zero());
        assert_eq!(warnings.len(), 1);
        let e = Expr::bin(BinOp::Add, Expr::Name("Dx".into()), Expr::Name("dx".into()));
        assert_eq!(eval(&e, &scope, &mut warnings).unwrap_err().kind, ErrorKind::Degree);
        let e = Expr::Name("Dc".into());
        assert_eq!(eval(&e, &scope, &mut warnings).unwrap_err().kind, ErrorKind::UnknownName);
    }
}
