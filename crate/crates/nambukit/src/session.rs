//! Parsed sessions: declarations, commands and their canonical text.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use nambu_core::calculus::AffineMap;
use nambu_core::reduction::{SharpTarget, Subbundle, Submanifold};
use nambu_core::{Chart, Form, NambuStructure, RationalFunction};

use crate::expr::Expr;
use crate::lexer::Pos;

/// A coordinate substitution `old -> new = image`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    pub replaced: String,
    pub new_name: String,
    /// Affine in the session coordinates.
    pub image: RationalFunction,
    pub map: AffineMap,
    pub target: Arc<Chart>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Object {
    Function(RationalFunction),
    Form(Form),
    Nambu(NambuStructure),
    Submanifold(Submanifold),
    Bundle { bundle: Subbundle, on: Option<String> },
    Map(MapSpec),
}

impl Object {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Object::Function(_) => "function",
            Object::Form(_) => "form",
            Object::Nambu(_) => "nambu structure",
            Object::Submanifold(_) => "submanifold",
            Object::Bundle { .. } => "bundle",
            Object::Map(_) => "map",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub name: String,
    pub object: Object,
}

/// `P on N by E [with D = D1] [via T]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub p: String,
    pub n: String,
    pub e: String,
    pub d: Option<String>,
    pub via: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameSpec {
    Fibre,
    Distribution,
    Span(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Identity {
    Fi(String),
    Adjunction(String),
    Hamiltonian(String),
    Bracket(String, Vec<Expr>),
    GaugeAnchor { p: String, b: String },
    Reduction(Problem),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    CheckFi(String),
    GraphClosed(String),
    Decomposable(String),
    Bracket(String, Vec<Expr>),
    Sharp(String, Expr),
    Hamiltonian(String, Vec<Expr>),
    Subordinate(String, Vec<Expr>),
    Ann1 { e: String, order: usize },
    AnnTop { n: String, order: usize },
    CanonicalBundle { p: String, n: String },
    InCe { f: Expr, e: String, n: Option<String> },
    SharpRange { problem: Problem, target: SharpTarget },
    LieCriterion { problem: Problem, frame: FrameSpec },
    Reduce(Problem),
    Canonicity { p: String, e: String, n: Option<String>, bound: u32 },
    Gauge { p: String, b: String },
    LeibnizIso { p: String, b: String },
    Characteristic { p: String, b: String, points: usize },
    Commute { problem: Problem, b: String, force: bool },
    Oracle { identity: Identity, points: usize },
}

impl Command {
    /// Commands whose `expect` clause takes an expression rather than an
    /// outcome word.
    pub fn yields_value(&self) -> bool {
        matches!(
            self,
            Command::Bracket(..) | Command::Sharp(..) | Command::Hamiltonian(..) | Command::Subordinate(..) | Command::Reduce(_) | Command::Gauge { .. }
        )
    }

    /// Kind of object registered by `as Name`, if the command supports it.
    pub fn binds(&self) -> Option<&'static str> {
        match self {
            Command::Subordinate(..) | Command::Reduce(_) | Command::Gauge { .. } => Some("nambu structure"),
            Command::CanonicalBundle { .. } => Some("bundle"),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expect {
    Outcome(String),
    Value(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub command: Command,
    pub expect: Option<Expect>,
    pub bind: Option<String>,
}

/// A checked session. Equality ignores source positions and warnings.
#[derive(Clone, Debug)]
pub struct Session {
    pub chart: Arc<Chart>,
    pub decls: Vec<Decl>,
    pub commands: Vec<Stmt>,
    pub command_pos: Vec<Pos>,
    pub warnings: Vec<(Pos, String)>,
}

impl PartialEq for Session {
    fn eq(&self, other: &Self) -> bool {
        self.chart == other.chart && self.decls == other.decls && self.commands == other.commands
    }
}

impl Session {
    pub fn object(&self, name: &str) -> Option<&Object> {
        self.decls.iter().find(|d| d.name == name).map(|d| &d.object)
    }

    /// Canonical source text; parsing it yields an equal session.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "chart {};", self.chart.coords().join(" "));
        if !self.chart.params().is_empty() {
            let _ = writeln!(out, "param {};", self.chart.params().join(" "));
        }
        for d in &self.decls {
            let _ = writeln!(out, "{}", render_decl(d, &self.chart));
        }
        for s in &self.commands {
            let _ = writeln!(out, "{s}");
        }
        out
    }
}

fn render_decl(d: &Decl, chart: &Chart) -> String {
    let names = chart.var_names();
    let name = &d.name;
    match &d.object {
        Object::Function(f) => format!("fn {name} = {};", f.render(&names)),
        Object::Form(w) if w.is_zero() => format!("form {name} degree {} = 0;", w.degree()),
        Object::Form(w) => format!("form {name} = {};", w.render()),
        Object::Nambu(p) => format!("nambu {name} order {} = {};", p.order(), p.tensor().render()),
        Object::Submanifold(s) => {
            let cs: Vec<String> = (0..s.codim()).map(|j| format!("{} = 0", s.constraint_function(j).render(&names))).collect();
            format!("submanifold {name} : {};", cs.join(", "))
        }
        Object::Bundle { bundle, on } => {
            let vs: Vec<String> = bundle.vectors().iter().map(|v| v.render()).collect();
            let on = on.as_ref().map(|n| format!(" on {n}")).unwrap_or_default();
            format!("bundle {name} = span({}){on};", vs.join(", "))
        }
        Object::Map(m) => format!("map {name} : {} -> {} = {};", m.replaced, m.new_name, m.image.render(&names)),
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Expr]) -> fmt::Result {
    for a in args {
        // A leading minus would merge with the previous argument.
        if a.starts_with_minus() {
            write!(f, " ({a})")?;
        } else {
            write!(f, " {a}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {} by {}", self.p, self.n, self.e)?;
        if let Some(d) = &self.d {
            write!(f, " with D = {d}")?;
        }
        if let Some(t) = &self.via {
            write!(f, " via {t}")?;
        }
        Ok(())
    }
}

pub fn target_word(t: SharpTarget) -> &'static str {
    match t {
        SharpTarget::Tangent => "TN",
        SharpTarget::TangentPlusD => "TN+D",
        SharpTarget::TangentPlusE => "TN+E",
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::CheckFi(p) => write!(f, "check-fi {p}"),
            Command::GraphClosed(p) => write!(f, "graph-closed {p}"),
            Command::Decomposable(p) => write!(f, "decomposable {p}"),
            Command::Bracket(p, args) => {
                write!(f, "bracket {p}")?;
                write_args(f, args)
            }
            Command::Sharp(p, eta) => {
                write!(f, "sharp {p}")?;
                write_args(f, std::slice::from_ref(eta))
            }
            Command::Hamiltonian(p, args) => {
                write!(f, "hamiltonian {p}")?;
                write_args(f, args)
            }
            Command::Subordinate(p, args) => {
                write!(f, "subordinate {p} by")?;
                write_args(f, args)
            }
            Command::Ann1 { e, order } => write!(f, "ann1 {e} order {order}"),
            Command::AnnTop { n, order } => write!(f, "anntop {n} order {order}"),
            Command::CanonicalBundle { p, n } => write!(f, "canonical-bundle {p} on {n}"),
            Command::InCe { f: func, e, n } => {
                f.write_str("in-ce")?;
                write_args(f, std::slice::from_ref(func))?;
                write!(f, " by {e}")?;
                if let Some(n) = n {
                    write!(f, " on {n}")?;
                }
                Ok(())
            }
            Command::SharpRange { problem, target } => write!(f, "sharp-range {problem} target {}", target_word(*target)),
            Command::LieCriterion { problem, frame } => {
                write!(f, "lie-criterion {problem} frame ")?;
                match frame {
                    FrameSpec::Fibre => f.write_str("fibre"),
                    FrameSpec::Distribution => f.write_str("distribution"),
                    FrameSpec::Span(vs) => {
                        let vs: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                        write!(f, "span({})", vs.join(", "))
                    }
                }
            }
            Command::Reduce(problem) => write!(f, "reduce {problem}"),
            Command::Canonicity { p, e, n, bound } => {
                write!(f, "canonicity {p} by {e}")?;
                if let Some(n) = n {
                    write!(f, " on {n}")?;
                }
                write!(f, " bound {bound}")
            }
            Command::Gauge { p, b } => write!(f, "gauge {p} by {b}"),
            Command::LeibnizIso { p, b } => write!(f, "leibniz-iso {p} by {b}"),
            Command::Characteristic { p, b, points } => write!(f, "characteristic {p} by {b} points {points}"),
            Command::Commute { problem, b, force } => {
                write!(f, "commute {problem} gauge {b}")?;
                if *force {
                    f.write_str(" force")?;
                }
                Ok(())
            }
            Command::Oracle { identity, points } => {
                f.write_str("oracle ")?;
                match identity {
                    Identity::Fi(p) => write!(f, "fi {p}")?,
                    Identity::Adjunction(p) => write!(f, "adjunction {p}")?,
                    Identity::Hamiltonian(p) => write!(f, "hamiltonian {p}")?,
                    Identity::Bracket(p, args) => {
                        write!(f, "bracket {p}")?;
                        write_args(f, args)?;
                    }
                    Identity::GaugeAnchor { p, b } => write!(f, "gauge-anchor {p} by {b}")?,
                    Identity::Reduction(problem) => write!(f, "reduction {problem}")?,
                }
                write!(f, " points {points}")
            }
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.command)?;
        match &self.expect {
            Some(Expect::Outcome(w)) => write!(f, " expect {w}")?,
            Some(Expect::Value(e)) => write!(f, " expect {e}")?,
            None => {}
        }
        if let Some(b) = &self.bind {
            write!(f, " as {b}")?;
        }
        f.write_str(";")
    }
}
