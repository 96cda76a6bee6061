//! Recursive-descent statements over a Pratt expression parser.
//!
//! Declarations are evaluated while parsing, so degree and chart errors
//! carry the position of the offending expression. Command arguments are
//! kept as expressions and checked eagerly when their subject lives on the
//! session chart; objects bound with `as` are only known at run time.

use std::collections::BTreeMap;
use std::sync::Arc;

use nambu_core::calculus::AffineMap;
use nambu_core::reduction::{affine_parts, SharpTarget, Subbundle, Submanifold};
use nambu_core::{Chart, Form, Multivector, NambuStructure};

use crate::error::{ErrorKind, ParseError};
use crate::expr::{eval, BinOp, Expr, Scope, Value};
use crate::lexer::{tokenize, Pos, Tok, Token};
use crate::session::{Command, Decl, Expect, FrameSpec, Identity, MapSpec, Object, Problem, Session, Stmt};

/// Words that end an argument list and therefore cannot name anything.
pub const RESERVED: &[&str] = &[
    "on", "by", "with", "via", "bound", "expect", "as", "points", "order", "degree", "force", "span", "target", "frame", "error",
];

pub fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
}

pub fn parse(src: &str) -> Result<Session, ParseError> {
    let mut p = Parser::new(tokenize(src)?);
    while p.peek().tok != Tok::Eof {
        p.statement()?;
    }
    let eof = p.peek().pos;
    let chart = p.ensure_chart(eof)?;
    Ok(Session { chart, decls: p.decls, commands: p.commands, command_pos: p.command_pos, warnings: p.warnings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Function,
    Form,
    Nambu,
    Submanifold,
    Bundle,
    Map,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Function => "function",
            Kind::Form => "form",
            Kind::Nambu => "nambu structure",
            Kind::Submanifold => "submanifold",
            Kind::Bundle => "bundle",
            Kind::Map => "map",
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    coords: Option<Vec<String>>,
    params: Vec<String>,
    chart: Option<Arc<Chart>>,
    decls: Vec<Decl>,
    /// Kind of every object name, and whether it is declared (as opposed to
    /// bound by a command at run time).
    names: BTreeMap<String, (Kind, bool)>,
    commands: Vec<Stmt>,
    command_pos: Vec<Pos>,
    warnings: Vec<(Pos, String)>,
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(ErrorKind::Syntax, pos, msg)
}

fn degree(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(ErrorKind::Degree, pos, msg)
}

fn chart_err(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(ErrorKind::Chart, pos, msg)
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser {
            toks,
            i: 0,
            coords: None,
            params: Vec::new(),
            chart: None,
            decls: Vec::new(),
            names: BTreeMap::new(),
            commands: Vec::new(),
            command_pos: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.i]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if t.tok != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_sym(&mut self, c: char) -> Result<Pos, ParseError> {
        let t = self.bump();
        if t.tok == Tok::Sym(c) {
            Ok(t.pos)
        } else {
            Err(syntax(t.pos, format!("expected `{c}`, found {}", t.tok)))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(()),
            other => Err(syntax(t.pos, format!("expected `{kw}`, found {other}"))),
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(syntax(t.pos, format!("expected a name, found {other}"))),
        }
    }

    /// An identifier glued to adjacent `-`/`+` and further identifiers, as
    /// in `check-fi` or `TN+D`.
    fn word(&mut self) -> Result<(String, Pos), ParseError> {
        let first = self.bump();
        let Tok::Ident(mut s) = first.tok else {
            return Err(syntax(first.pos, format!("expected a word, found {}", first.tok)));
        };
        let mut end = first.end;
        loop {
            let (a, b) = (&self.toks[self.i], self.toks.get(self.i + 1));
            let glue = matches!(a.tok, Tok::Sym('-') | Tok::Sym('+')) && a.start == end;
            match b {
                Some(Token { tok: Tok::Ident(next), start, end: e, .. }) if glue && *start == a.end => {
                    s.push(if a.tok == Tok::Sym('-') { '-' } else { '+' });
                    s.push_str(next);
                    end = *e;
                    self.i += 2;
                }
                _ => break,
            }
        }
        Ok((s, first.pos))
    }

    fn number(&mut self) -> Result<usize, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Int(s) => s.parse().map_err(|_| syntax(t.pos, format!("number `{s}` is too large"))),
            other => Err(syntax(t.pos, format!("expected a number, found {other}"))),
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<(Expr, Pos), ParseError> {
        let pos = self.peek().pos;
        Ok((self.expr_bp(0)?, pos))
    }

    fn expr_bp(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let t = self.bump();
        let mut lhs = match t.tok {
            Tok::Int(s) => Expr::Int(s),
            Tok::Ident(s) if is_reserved(&s) => return Err(syntax(t.pos, format!("expected an expression, found keyword `{s}`"))),
            Tok::Ident(s) => Expr::Name(s),
            Tok::Sym('(') => {
                let e = self.expr_bp(0)?;
                self.expect_sym(')')?;
                e
            }
            Tok::Sym('-') => Expr::Neg(Box::new(self.expr_bp(25)?)),
            other => return Err(syntax(t.pos, format!("expected an expression, found {other}"))),
        };
        loop {
            let (op, l, r) = match self.peek().tok {
                Tok::Sym('+') => (BinOp::Add, 10, 11),
                Tok::Sym('-') => (BinOp::Sub, 10, 11),
                Tok::Sym('*') => (BinOp::Mul, 20, 21),
                Tok::Sym('/') => (BinOp::Div, 20, 21),
                Tok::Sym('^') => (BinOp::Hat, 31, 30),
                _ => break,
            };
            if l < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr_bp(r)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    /// Juxtaposed or comma-separated expressions up to a keyword or `;`.
    fn expr_list(&mut self) -> Result<Vec<(Expr, Pos)>, ParseError> {
        let mut out = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Sym(';') | Tok::Eof => break,
                Tok::Ident(s) if is_reserved(s) => break,
                _ => {}
            }
            out.push(self.expr()?);
            if self.at_sym(',') {
                self.bump();
            }
        }
        Ok(out)
    }

    // ---- chart and names ----

    fn ensure_chart(&mut self, pos: Pos) -> Result<Arc<Chart>, ParseError> {
        if let Some(c) = &self.chart {
            return Ok(c.clone());
        }
        let coords = self.coords.clone().ok_or_else(|| chart_err(pos, "no chart declared; start with `chart <coordinates>;`"))?;
        let chart = Chart::new(coords, self.params.clone()).map_err(|e| chart_err(pos, e.to_string()))?;
        self.chart = Some(chart.clone());
        Ok(chart)
    }

    fn is_variable(&self, name: &str) -> bool {
        self.coords.as_ref().is_some_and(|c| c.iter().any(|x| x == name)) || self.params.iter().any(|x| x == name)
    }

    fn shadows_basis(&self, name: &str) -> bool {
        let coords = self.coords.as_deref().unwrap_or(&[]);
        [name.strip_prefix('D'), name.strip_prefix('d')].into_iter().flatten().any(|rest| coords.iter().any(|c| c == rest))
    }

    fn fresh(&self, name: &str, pos: Pos) -> Result<(), ParseError> {
        if is_reserved(name) {
            return Err(syntax(pos, format!("`{name}` is a keyword")));
        }
        if self.is_variable(name) {
            return Err(syntax(pos, format!("`{name}` is already a chart variable")));
        }
        if self.names.contains_key(name) {
            return Err(syntax(pos, format!("`{name}` is already defined")));
        }
        if self.shadows_basis(name) {
            return Err(syntax(pos, format!("`{name}` would shadow a coordinate basis element")));
        }
        Ok(())
    }

    /// An object reference of the wanted kind; returns its name and whether
    /// it is a declaration on the session chart.
    fn object(&mut self, want: Kind) -> Result<(String, bool), ParseError> {
        let (name, pos) = self.ident()?;
        match self.names.get(&name) {
            Some(&(k, declared)) if k == want => Ok((name, declared)),
            Some(&(k, _)) => Err(ParseError::new(ErrorKind::UnknownName, pos, format!("`{name}` is a {}, expected a {}", k.name(), want.name()))),
            None => Err(ParseError::new(ErrorKind::UnknownName, pos, format!("no {} named `{name}`", want.name()))),
        }
    }

    fn nambu_order(&self, name: &str) -> usize {
        match self.decls.iter().find(|d| d.name == name).map(|d| &d.object) {
            Some(Object::Nambu(p)) => p.order(),
            _ => 0,
        }
    }

    /// Position of the first occurrence of `name` between `from` and the
    /// current token.
    fn name_pos(&self, name: Option<&str>, from: Pos) -> Pos {
        let Some(name) = name else { return from };
        self.toks[..self.i]
            .iter()
            .filter(|t| (t.pos.line, t.pos.col) >= (from.line, from.col))
            .find(|t| matches!(&t.tok, Tok::Ident(s) if s == name))
            .map_or(from, |t| t.pos)
    }

    fn eval_here(&mut self, e: &Expr, pos: Pos) -> Result<Value, ParseError> {
        let chart = self.ensure_chart(pos)?;
        let decls = &self.decls;
        let lookup = |n: &str| {
            decls.iter().find(|d| d.name == n).and_then(|d| match &d.object {
                Object::Function(f) => Some(Value::Scalar(f.clone())),
                Object::Form(w) => Some(Value::Form(w.clone())),
                _ => None,
            })
        };
        let mut warnings = Vec::new();
        let v = eval(e, &Scope { chart: &chart, named: &lookup }, &mut warnings).map_err(|err| {
            let at = self.name_pos(err.name.as_deref(), pos);
            err.at(at)
        })?;
        self.warnings.extend(warnings.into_iter().map(|w| (pos, w)));
        Ok(v)
    }

    fn scalar_here(&mut self, e: &Expr, pos: Pos) -> Result<nambu_core::RationalFunction, ParseError> {
        match self.eval_here(e, pos)? {
            Value::Scalar(f) => Ok(f),
            v => Err(degree(pos, format!("expected a function, found a {}", v.describe()))),
        }
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<(), ParseError> {
        let (head, pos) = self.word()?;
        match head.as_str() {
            "chart" => self.chart_decl(pos)?,
            "param" => self.param_decl(pos)?,
            "fn" | "form" | "nambu" | "submanifold" | "bundle" | "map" => {
                self.ensure_chart(pos)?;
                let decl = match head.as_str() {
                    "fn" => self.fn_decl()?,
                    "form" => self.form_decl()?,
                    "nambu" => self.nambu_decl()?,
                    "submanifold" => self.submanifold_decl()?,
                    "bundle" => self.bundle_decl()?,
                    _ => self.map_decl()?,
                };
                let kind = match decl.object {
                    Object::Function(_) => Kind::Function,
                    Object::Form(_) => Kind::Form,
                    Object::Nambu(_) => Kind::Nambu,
                    Object::Submanifold(_) => Kind::Submanifold,
                    Object::Bundle { .. } => Kind::Bundle,
                    Object::Map(_) => Kind::Map,
                };
                self.names.insert(decl.name.clone(), (kind, true));
                self.decls.push(decl);
            }
            _ => {
                let stmt = self.command(&head, pos)?;
                self.commands.push(stmt);
                self.command_pos.push(pos);
                return Ok(());
            }
        }
        self.expect_sym(';')?;
        Ok(())
    }

    fn chart_decl(&mut self, pos: Pos) -> Result<(), ParseError> {
        if self.coords.is_some() {
            return Err(chart_err(pos, "the chart is already declared"));
        }
        let mut coords: Vec<String> = Vec::new();
        while !self.at_sym(';') {
            let (c, cpos) = self.ident()?;
            if is_reserved(&c) {
                return Err(chart_err(cpos, format!("`{c}` is a keyword")));
            }
            if coords.contains(&c) {
                return Err(chart_err(cpos, format!("coordinate `{c}` appears twice")));
            }
            coords.push(c);
        }
        if coords.is_empty() {
            return Err(chart_err(pos, "a chart needs at least one coordinate"));
        }
        self.coords = Some(coords.clone());
        for c in &coords {
            if self.shadows_basis(c) {
                return Err(chart_err(pos, format!("coordinate `{c}` collides with a basis element")));
            }
        }
        Ok(())
    }

    fn param_decl(&mut self, pos: Pos) -> Result<(), ParseError> {
        if self.coords.is_none() {
            return Err(chart_err(pos, "declare the chart before its parameters"));
        }
        if self.chart.is_some() {
            return Err(chart_err(pos, "parameters must precede all other declarations"));
        }
        while !self.at_sym(';') {
            let (c, cpos) = self.ident()?;
            if is_reserved(&c) || self.is_variable(&c) || self.shadows_basis(&c) {
                return Err(chart_err(cpos, format!("`{c}` cannot name a parameter")));
            }
            self.params.push(c);
        }
        Ok(())
    }

    fn new_name(&mut self) -> Result<String, ParseError> {
        let (name, pos) = self.ident()?;
        self.fresh(&name, pos)?;
        Ok(name)
    }

    fn fn_decl(&mut self) -> Result<Decl, ParseError> {
        let name = self.new_name()?;
        self.expect_sym('=')?;
        let (e, pos) = self.expr()?;
        let f = self.scalar_here(&e, pos)?;
        Ok(Decl { name, object: Object::Function(f) })
    }

    fn form_decl(&mut self) -> Result<Decl, ParseError> {
        let name = self.new_name()?;
        let declared = if self.at_kw("degree") {
            self.bump();
            Some(self.number()?)
        } else {
            None
        };
        self.expect_sym('=')?;
        let (e, pos) = self.expr()?;
        let chart = self.ensure_chart(pos)?;
        let form = match (self.eval_here(&e, pos)?, declared) {
            (Value::Form(w), None) => w,
            (Value::Form(w), Some(k)) if w.degree() == k => w,
            (Value::Scalar(f), Some(k)) if f.is_zero() => Form::zero(&chart, k),
            (v, Some(k)) => return Err(degree(pos, format!("declared degree {k} but the expression is a {}", v.describe()))),
            (v, None) => return Err(degree(pos, format!("expected a form, found a {}", v.describe()))),
        };
        Ok(Decl { name, object: Object::Form(form) })
    }

    fn nambu_decl(&mut self) -> Result<Decl, ParseError> {
        let name = self.new_name()?;
        self.expect_kw("order")?;
        let n = self.number()?;
        self.expect_sym('=')?;
        let (e, pos) = self.expr()?;
        let chart = self.ensure_chart(pos)?;
        let tensor = match self.eval_here(&e, pos)? {
            Value::Vector(v) if v.degree() == n => v,
            Value::Scalar(f) if f.is_zero() => Multivector::zero(&chart, n),
            v => return Err(degree(pos, format!("declared order {n} but the expression is a {}", v.describe()))),
        };
        let p = NambuStructure::new(tensor).map_err(|e| degree(pos, e.to_string()))?;
        Ok(Decl { name, object: Object::Nambu(p) })
    }

    fn submanifold_decl(&mut self) -> Result<Decl, ParseError> {
        let name = self.new_name()?;
        let pos = self.expect_sym(':')?;
        let mut fs = Vec::new();
        loop {
            let (l, lpos) = self.expr()?;
            self.expect_sym('=')?;
            let (r, rpos) = self.expr()?;
            let l = self.scalar_here(&l, lpos)?;
            let r = self.scalar_here(&r, rpos)?;
            fs.push(&l - &r);
            if !self.at_sym(',') {
                break;
            }
            self.bump();
        }
        let chart = self.ensure_chart(pos)?;
        let s = Submanifold::from_functions(&chart, &fs).map_err(|e| chart_err(pos, format!("{e} (constraints must be affine and independent)")))?;
        Ok(Decl { name, object: Object::Submanifold(s) })
    }

    fn vector_list(&mut self) -> Result<Vec<(Expr, Pos)>, ParseError> {
        self.expect_kw("span")?;
        self.expect_sym('(')?;
        let mut out = Vec::new();
        while !self.at_sym(')') {
            out.push(self.expr()?);
            if !self.at_sym(',') {
                break;
            }
            self.bump();
        }
        self.expect_sym(')')?;
        Ok(out)
    }

    fn vector_here(&mut self, e: &Expr, pos: Pos) -> Result<Multivector, ParseError> {
        match self.eval_here(e, pos)? {
            Value::Vector(v) if v.degree() == 1 => Ok(v),
            v => Err(degree(pos, format!("expected a vector field, found a {}", v.describe()))),
        }
    }

    fn bundle_decl(&mut self) -> Result<Decl, ParseError> {
        let name = self.new_name()?;
        let pos = self.expect_sym('=')?;
        let exprs = self.vector_list()?;
        let mut vs = Vec::new();
        for (e, p) in &exprs {
            vs.push(self.vector_here(e, *p)?);
        }
        let on = if self.at_kw("on") {
            self.bump();
            Some(self.object(Kind::Submanifold)?.0)
        } else {
            None
        };
        let chart = self.ensure_chart(pos)?;
        let bundle = if vs.is_empty() { Ok(Subbundle::zero(&chart)) } else { Subbundle::from_vectors(&chart, &vs) };
        let bundle = bundle.map_err(|e| chart_err(pos, format!("{e} (spanning vectors must be constant and independent)")))?;
        Ok(Decl { name, object: Object::Bundle { bundle, on } })
    }

    fn map_decl(&mut self) -> Result<Decl, ParseError> {
        let name = self.new_name()?;
        self.expect_sym(':')?;
        let (replaced, rpos) = self.ident()?;
        let t = self.bump();
        if t.tok != Tok::Arrow {
            return Err(syntax(t.pos, format!("expected `->`, found {}", t.tok)));
        }
        let (new_name, npos) = self.ident()?;
        self.expect_sym('=')?;
        let (e, pos) = self.expr()?;
        let chart = self.ensure_chart(pos)?;
        let k = chart.coord_index(&replaced).ok_or_else(|| chart_err(rpos, format!("`{replaced}` is not a coordinate")))?;
        if is_reserved(&new_name) || (new_name != replaced && self.is_variable(&new_name)) {
            return Err(chart_err(npos, format!("`{new_name}` cannot name a new coordinate")));
        }
        let image = self.scalar_here(&e, pos)?;
        let (linear, constant) = affine_parts(&chart, &image).ok_or_else(|| chart_err(pos, "the new coordinate must be affine in the coordinates"))?;
        let map = AffineMap::replace_coordinate(chart.dim(), k, &linear, constant).map_err(|_| chart_err(pos, format!("the map is singular: the image must involve `{replaced}`")))?;
        let mut coords = chart.coords().to_vec();
        coords[k] = new_name.clone();
        let target = chart.with_coords(coords).map_err(|e| chart_err(npos, e.to_string()))?;
        Ok(Decl { name, object: Object::Map(MapSpec { replaced, new_name, image, map, target }) })
    }

    // ---- commands ----

    fn problem(&mut self) -> Result<(Problem, bool), ParseError> {
        let (p, declared) = self.object(Kind::Nambu)?;
        self.expect_kw("on")?;
        let n = self.object(Kind::Submanifold)?.0;
        self.expect_kw("by")?;
        let e = self.object(Kind::Bundle)?.0;
        let d = if self.at_kw("with") {
            self.bump();
            let (dn, dpos) = self.ident()?;
            if dn != "D" {
                return Err(syntax(dpos, "expected `with D = <bundle>`"));
            }
            self.expect_sym('=')?;
            Some(self.object(Kind::Bundle)?.0)
        } else {
            None
        };
        let via = if self.at_kw("via") {
            self.bump();
            Some(self.object(Kind::Map)?.0)
        } else {
            None
        };
        Ok((Problem { p, n, e, d, via }, declared))
    }

    fn scalar_args(&mut self, subject: &str, declared: bool, want: Option<usize>, at: Pos) -> Result<Vec<Expr>, ParseError> {
        let args = self.expr_list()?;
        if declared {
            for (e, pos) in &args {
                self.scalar_here(e, *pos)?;
            }
            if let Some(k) = want {
                if args.len() != k {
                    return Err(degree(at, format!("`{subject}` has order {} and needs {k} arguments here, got {}", self.nambu_order(subject), args.len())));
                }
            }
        }
        Ok(args.into_iter().map(|(e, _)| e).collect())
    }

    fn points(&mut self) -> Result<usize, ParseError> {
        self.expect_kw("points")?;
        self.number()
    }

    fn command(&mut self, head: &str, pos: Pos) -> Result<Stmt, ParseError> {
        let command = match head {
            "check-fi" => Command::CheckFi(self.object(Kind::Nambu)?.0),
            "graph-closed" => Command::GraphClosed(self.object(Kind::Nambu)?.0),
            "decomposable" => Command::Decomposable(self.object(Kind::Nambu)?.0),
            "bracket" => {
                let (p, declared) = self.object(Kind::Nambu)?;
                let n = self.nambu_order(&p);
                Command::Bracket(p.clone(), self.scalar_args(&p, declared, Some(n), pos)?)
            }
            "hamiltonian" => {
                let (p, declared) = self.object(Kind::Nambu)?;
                let n = self.nambu_order(&p);
                Command::Hamiltonian(p.clone(), self.scalar_args(&p, declared, Some(n.saturating_sub(1)), pos)?)
            }
            "sharp" => {
                let (p, declared) = self.object(Kind::Nambu)?;
                let (e, epos) = self.expr()?;
                if declared {
                    let n = self.nambu_order(&p);
                    match self.eval_here(&e, epos)? {
                        Value::Form(w) if w.degree() + 1 == n => {}
                        v => return Err(degree(epos, format!("`{p}` has order {n} and needs a {}-form, found a {}", n - 1, v.describe()))),
                    }
                }
                Command::Sharp(p, e)
            }
            "subordinate" => {
                let (p, declared) = self.object(Kind::Nambu)?;
                self.expect_kw("by")?;
                Command::Subordinate(p.clone(), self.scalar_args(&p, declared, None, pos)?)
            }
            "ann1" => {
                let e = self.object(Kind::Bundle)?.0;
                self.expect_kw("order")?;
                Command::Ann1 { e, order: self.number()? }
            }
            "anntop" => {
                let n = self.object(Kind::Submanifold)?.0;
                self.expect_kw("order")?;
                Command::AnnTop { n, order: self.number()? }
            }
            "canonical-bundle" => {
                let p = self.object(Kind::Nambu)?.0;
                self.expect_kw("on")?;
                Command::CanonicalBundle { p, n: self.object(Kind::Submanifold)?.0 }
            }
            "in-ce" => {
                let (f, fpos) = self.expr()?;
                self.expect_kw("by")?;
                let (e, declared) = self.object(Kind::Bundle)?;
                if declared {
                    self.scalar_here(&f, fpos)?;
                }
                let n = if self.at_kw("on") {
                    self.bump();
                    Some(self.object(Kind::Submanifold)?.0)
                } else {
                    None
                };
                Command::InCe { f, e, n }
            }
            "sharp-range" => {
                let (problem, _) = self.problem()?;
                self.expect_kw("target")?;
                let (w, wpos) = self.word()?;
                let target = match w.as_str() {
                    "TN" => SharpTarget::Tangent,
                    "TN+D" => SharpTarget::TangentPlusD,
                    "TN+E" => SharpTarget::TangentPlusE,
                    _ => return Err(syntax(wpos, format!("unknown target `{w}`; use TN, TN+D or TN+E"))),
                };
                Command::SharpRange { problem, target }
            }
            "lie-criterion" => {
                let (problem, declared) = self.problem()?;
                self.expect_kw("frame")?;
                let frame = if self.at_kw("span") {
                    let vs = self.vector_list()?;
                    if declared {
                        for (e, p) in &vs {
                            self.vector_here(e, *p)?;
                        }
                    }
                    FrameSpec::Span(vs.into_iter().map(|(e, _)| e).collect())
                } else {
                    let (w, wpos) = self.word()?;
                    match w.as_str() {
                        "fibre" => FrameSpec::Fibre,
                        "distribution" => FrameSpec::Distribution,
                        _ => return Err(syntax(wpos, format!("unknown frame `{w}`; use fibre, distribution or span(...)"))),
                    }
                };
                Command::LieCriterion { problem, frame }
            }
            "reduce" => Command::Reduce(self.problem()?.0),
            "canonicity" => {
                let p = self.object(Kind::Nambu)?.0;
                self.expect_kw("by")?;
                let e = self.object(Kind::Bundle)?.0;
                let n = if self.at_kw("on") {
                    self.bump();
                    Some(self.object(Kind::Submanifold)?.0)
                } else {
                    None
                };
                self.expect_kw("bound")?;
                let bpos = self.peek().pos;
                let bound = u32::try_from(self.number()?).map_err(|_| syntax(bpos, "degree bound is too large"))?;
                Command::Canonicity { p, e, n, bound }
            }
            "gauge" | "leibniz-iso" | "characteristic" => {
                let p = self.object(Kind::Nambu)?.0;
                self.expect_kw("by")?;
                let b = self.object(Kind::Form)?.0;
                match head {
                    "gauge" => Command::Gauge { p, b },
                    "leibniz-iso" => Command::LeibnizIso { p, b },
                    _ => Command::Characteristic { p, b, points: self.points()? },
                }
            }
            "commute" => {
                let (problem, _) = self.problem()?;
                self.expect_kw("gauge")?;
                let b = self.object(Kind::Form)?.0;
                let force = self.at_kw("force");
                if force {
                    self.bump();
                }
                Command::Commute { problem, b, force }
            }
            "oracle" => {
                let (w, wpos) = self.word()?;
                let identity = match w.as_str() {
                    "fi" => Identity::Fi(self.object(Kind::Nambu)?.0),
                    "adjunction" => Identity::Adjunction(self.object(Kind::Nambu)?.0),
                    "hamiltonian" => Identity::Hamiltonian(self.object(Kind::Nambu)?.0),
                    "bracket" => {
                        let (p, declared) = self.object(Kind::Nambu)?;
                        let n = self.nambu_order(&p);
                        let args = self.scalar_args(&p, declared, Some(n), wpos)?;
                        Identity::Bracket(p, args)
                    }
                    "gauge-anchor" => {
                        let p = self.object(Kind::Nambu)?.0;
                        self.expect_kw("by")?;
                        Identity::GaugeAnchor { p, b: self.object(Kind::Form)?.0 }
                    }
                    "reduction" => Identity::Reduction(self.problem()?.0),
                    _ => {
                        return Err(syntax(wpos, format!("unknown identity `{w}`; use fi, adjunction, hamiltonian, bracket, gauge-anchor or reduction")))
                    }
                };
                Command::Oracle { identity, points: self.points()? }
            }
            _ => return Err(syntax(pos, format!("unknown statement `{head}`"))),
        };
        let mut expect = None;
        let mut bind = None;
        loop {
            if self.at_kw("expect") && expect.is_none() {
                self.bump();
                expect = Some(if command.yields_value() && !self.at_kw("error") {
                    Expect::Value(self.expr()?.0)
                } else {
                    Expect::Outcome(self.word()?.0)
                });
            } else if self.at_kw("as") && bind.is_none() {
                let apos = self.bump().pos;
                let kind = match command.binds() {
                    Some("bundle") => Kind::Bundle,
                    Some(_) => Kind::Nambu,
                    None => return Err(syntax(apos, "this command does not produce a named object")),
                };
                let name = self.new_name()?;
                self.names.insert(name.clone(), (kind, false));
                bind = Some(name);
            } else {
                break;
            }
        }
        self.expect_sym(';')?;
        Ok(Stmt { command, expect, bind })
    }
}
