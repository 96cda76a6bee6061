//! Executes a parsed session and assembles its report.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nambu_core::exterior::{Kind, Tensor};
use nambu_core::gauge::{check_characteristic_match, check_leibniz_iso, gauge_reduce_commute, gauge_transform};
use nambu_core::reduction::{
    ann1, ann_top, canonical_bundle, check_lie_criterion, check_sharp_range, falsify_canonicity, in_ce, reduce, subordinate, Canonicity, Frame,
    ReductionProblem, Subbundle, Submanifold,
};
use nambu_core::{Chart, FiStatus, Form, Multivector, NambuStructure, RationalFunction};
use serde_json::{json, Value as Json};

use crate::expr::{eval, Expr, Scope, Value};
use crate::oracle::{self, Sampler, Sweep};
use crate::report::{Entry, Report, Verdict};
use crate::session::{target_word, Command, Expect, FrameSpec, Identity, MapSpec, Object, Problem, Session, Stmt};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Record wall-clock time per command; makes reports irreproducible.
    pub timing: bool,
}

/// Outcome words that count as a pass when no `expect` clause is given.
const POSITIVE: &[&str] = &["verified", "closed", "decomposable", "value", "true", "holds", "reduced", "canonical-up-to-bound", "transported", "match", "equal"];

struct Outcome {
    word: String,
    lines: Vec<String>,
    data: Json,
    /// Computed value and its chart, compared against `expect <expr>`.
    value: Option<(Value, Arc<Chart>)>,
    bound: Option<Object>,
}

impl Outcome {
    fn new(word: &str, lines: Vec<String>, data: Json) -> Self {
        Outcome { word: word.to_string(), lines, data, value: None, bound: None }
    }

    fn value(v: Value, chart: &Arc<Chart>) -> Self {
        let text = v.render(chart);
        Outcome { word: "value".into(), lines: vec![text.clone()], data: json!({ "value": text }), value: Some((v, chart.clone())), bound: None }
    }

    fn flag(ok: bool, yes: &str, no: &str, lines: Vec<String>, data: Json) -> Self {
        Outcome::new(if ok { yes } else { no }, lines, data)
    }
}

type Res<T> = Result<T, String>;

fn err(e: nambu_core::Error) -> String {
    e.to_string()
}

fn fn_text(chart: &Chart, f: &RationalFunction) -> String {
    f.render(&chart.var_names())
}

fn sweep_outcome(identity: &str, s: Sweep, engine_claim: bool) -> Outcome {
    let mut lines = vec![s.summary()];
    lines.extend(s.notices.iter().cloned());
    if !s.passed() && engine_claim {
        lines.push("mismatch against a symbolically verified identity: engine bug".into());
    }
    let data = json!({
        "identity": identity,
        "requested": s.requested,
        "checked": s.checked,
        "skipped": s.skipped,
        "mismatches": s.mismatches,
    });
    Outcome::flag(s.passed(), "match", "mismatch", lines, data)
}

struct Env {
    chart: Arc<Chart>,
    objects: BTreeMap<String, Object>,
    seed: u64,
}

impl Env {
    fn get(&self, name: &str) -> Res<&Object> {
        self.objects.get(name).ok_or_else(|| format!("`{name}` is unavailable because the command that binds it failed"))
    }

    fn nambu(&self, name: &str) -> Res<&NambuStructure> {
        match self.get(name)? {
            Object::Nambu(p) => Ok(p),
            o => Err(format!("`{name}` is a {}", o.kind_name())),
        }
    }

    fn form(&self, name: &str) -> Res<&Form> {
        match self.get(name)? {
            Object::Form(w) => Ok(w),
            o => Err(format!("`{name}` is a {}", o.kind_name())),
        }
    }

    fn submanifold(&self, name: &str) -> Res<&Submanifold> {
        match self.get(name)? {
            Object::Submanifold(s) => Ok(s),
            o => Err(format!("`{name}` is a {}", o.kind_name())),
        }
    }

    fn bundle(&self, name: &str) -> Res<&Subbundle> {
        match self.get(name)? {
            Object::Bundle { bundle, .. } => Ok(bundle),
            o => Err(format!("`{name}` is a {}", o.kind_name())),
        }
    }

    fn map(&self, name: &str) -> Res<&MapSpec> {
        match self.get(name)? {
            Object::Map(m) => Ok(m),
            o => Err(format!("`{name}` is a {}", o.kind_name())),
        }
    }

    /// Evaluates on `chart`; session functions are visible only on the
    /// session chart, forms only on their own chart.
    fn eval_in(&self, e: &Expr, chart: &Arc<Chart>) -> Res<Value> {
        let on_session = **chart == *self.chart;
        let lookup = |n: &str| match self.objects.get(n) {
            Some(Object::Function(f)) if on_session => Some(Value::Scalar(f.clone())),
            Some(Object::Form(w)) if w.chart() == chart => Some(Value::Form(w.clone())),
            _ => None,
        };
        eval(e, &Scope { chart, named: &lookup }, &mut Vec::new()).map_err(|e| e.to_string())
    }

    fn scalars_in(&self, args: &[Expr], chart: &Arc<Chart>) -> Res<Vec<RationalFunction>> {
        args.iter()
            .map(|a| match self.eval_in(a, chart)? {
                Value::Scalar(f) => Ok(f),
                v => Err(format!("`{a}` is a {}, expected a function", v.describe())),
            })
            .collect()
    }

    fn vectors_in(&self, args: &[Expr], chart: &Arc<Chart>) -> Res<Vec<Multivector>> {
        args.iter()
            .map(|a| match self.eval_in(a, chart)? {
                Value::Vector(v) if v.degree() == 1 => Ok(v),
                v => Err(format!("`{a}` is a {}, expected a vector field", v.describe())),
            })
            .collect()
    }

    fn problem(&self, pr: &Problem) -> Res<ReductionProblem> {
        let pi = self.nambu(&pr.p)?.clone();
        let mut prob = ReductionProblem::new(pi, self.submanifold(&pr.n)?.clone(), self.bundle(&pr.e)?.clone()).map_err(err)?;
        if let Some(d) = &pr.d {
            prob = prob.with_distribution(self.bundle(d)?.clone()).map_err(err)?;
        }
        if let Some(t) = &pr.via {
            let m = self.map(t)?;
            prob = prob.with_adapted_map(m.map.clone(), m.target.clone());
        }
        Ok(prob)
    }

    fn sampler(&self, index: u64) -> Sampler {
        Sampler::new(self.seed, index)
    }

    fn execute(&mut self, cmd: &Command, index: u64) -> Res<Outcome> {
        match cmd {
            Command::CheckFi(p) => {
                let pi = self.nambu(p)?;
                let chart = pi.chart().clone();
                Ok(match pi.check_fi() {
                    FiStatus::Verified => Outcome::new("verified", vec!["verified".into()], json!({})),
                    FiStatus::Refuted(w) => {
                        let g: Vec<String> = w.g.iter().map(|f| fn_text(&chart, f)).collect();
                        let f: Vec<String> = w.f.iter().map(|f| fn_text(&chart, f)).collect();
                        let residual = fn_text(&chart, &w.residual);
                        Outcome::new(
                            "refuted",
                            vec!["refuted".into(), format!("witness: g = ({}), f = ({})", g.join(", "), f.join(", ")), format!("residual: {residual}")],
                            json!({ "g": g, "f": f, "residual": residual }),
                        )
                    }
                })
            }
            Command::GraphClosed(p) => {
                let pi = self.nambu(p)?;
                let mut lines = Vec::new();
                let closed = pi.graph_closed();
                let mut data = json!({});
                if !closed {
                    if let Some((a, b)) = pi.graph_witness() {
                        lines.push(format!("witness: ({a}, {b})"));
                        data = json!({ "witness": [a.render(), b.render()] });
                    }
                }
                lines.insert(0, if closed { "closed" } else { "not closed" }.into());
                Ok(Outcome::flag(closed, "closed", "not-closed", lines, data))
            }
            Command::Decomposable(p) => {
                let pi = self.nambu(p)?;
                let d = pi.check_decomposable().map_err(err)?;
                let mut lines = vec![if d.decomposable { "decomposable" } else { "not decomposable" }.to_string()];
                if let Some((s, t, v)) = &d.failing {
                    lines.push(format!("failing relation: S = {s:?}, T = {t:?}, value {}", fn_text(pi.chart(), v)));
                }
                Ok(Outcome::flag(d.decomposable, "decomposable", "not-decomposable", lines, json!({})))
            }
            Command::Bracket(p, args) => {
                let pi = self.nambu(p)?;
                let fs = self.scalars_in(args, pi.chart())?;
                Ok(Outcome::value(Value::Scalar(pi.bracket(&fs).map_err(err)?), pi.chart()))
            }
            Command::Sharp(p, eta) => {
                let pi = self.nambu(p)?;
                let Value::Form(eta) = self.eval_in(eta, pi.chart())? else {
                    return Err("sharp needs a form".into());
                };
                Ok(Outcome::value(Value::Vector(pi.sharp(&eta).map_err(err)?), pi.chart()))
            }
            Command::Hamiltonian(p, args) => {
                let pi = self.nambu(p)?;
                let fs = self.scalars_in(args, pi.chart())?;
                Ok(Outcome::value(Value::Vector(pi.hamiltonian(&fs).map_err(err)?), pi.chart()))
            }
            Command::Subordinate(p, args) => {
                let pi = self.nambu(p)?;
                let fs = self.scalars_in(args, pi.chart())?;
                let s = subordinate(pi, &fs).map_err(err)?;
                let mut o = Outcome::value(Value::Vector(s.tensor().clone()), pi.chart());
                o.bound = Some(Object::Nambu(s));
                Ok(o)
            }
            Command::Ann1 { e, order } => {
                let forms = ann1(self.bundle(e)?, check_order(*order)?);
                Ok(form_list(&forms))
            }
            Command::AnnTop { n, order } => {
                let forms = ann_top(self.submanifold(n)?, check_order(*order)?);
                Ok(form_list(&forms))
            }
            Command::CanonicalBundle { p, n } => {
                let b = canonical_bundle(self.nambu(p)?, self.submanifold(n)?).map_err(err)?;
                let text = span_text(&b);
                let mut o = Outcome::new("value", vec![text.clone()], json!({ "value": text }));
                o.bound = Some(Object::Bundle { bundle: b, on: Some(n.clone()) });
                Ok(o)
            }
            Command::InCe { f, e, n } => {
                let bundle = self.bundle(e)?;
                let f = self.scalars_in(std::slice::from_ref(f), bundle.chart())?.remove(0);
                let n = n.as_ref().map(|n| self.submanifold(n)).transpose()?;
                let yes = in_ce(&f, bundle, n).map_err(err)?;
                let word = if yes { "true" } else { "false" };
                Ok(Outcome::new(word, vec![word.into()], json!({})))
            }
            Command::SharpRange { problem, target } => {
                let prob = self.problem(problem)?;
                let r = check_sharp_range(&prob, *target).map_err(err)?;
                let mut lines = vec![format!("{} in {}", if r.holds { "holds" } else { "fails" }, target_word(*target))];
                let mut data = json!({ "target": target_word(*target) });
                if let Some(w) = &r.witness {
                    lines.push(format!("witness: sharp({}) = {} on {}", w.form, w.image, problem.n));
                    data["witness"] = json!({ "form": w.form.render(), "image": w.image.render() });
                }
                Ok(Outcome::flag(r.holds, "holds", "fails", lines, data))
            }
            Command::LieCriterion { problem, frame } => {
                let prob = self.problem(problem)?;
                let frame = match frame {
                    FrameSpec::Fibre => Frame::Fibre,
                    FrameSpec::Distribution => Frame::Distribution,
                    FrameSpec::Span(vs) => Frame::Explicit(self.vectors_in(vs, prob.pi.chart())?),
                };
                let r = check_lie_criterion(&prob, &frame).map_err(err)?;
                let mut lines = vec![if r.holds { "holds" } else { "fails" }.to_string()];
                let mut data = json!({});
                if let Some(w) = &r.witness {
                    lines.push(format!("witness: L_({}) {} = {} on {}", w.vector, problem.p, w.derivative, problem.n));
                    data = json!({ "witness": { "vector": w.vector.render(), "derivative": w.derivative.render() } });
                }
                Ok(Outcome::flag(r.holds, "holds", "fails", lines, data))
            }
            Command::Reduce(problem) => {
                let prob = self.problem(problem)?;
                let r = reduce(&prob).map_err(err)?;
                let route = r.report.licensed_by.map(|r| r.to_string()).unwrap_or_else(|| "none".into());
                let qc = r.quotient_chart().clone();
                let lines = vec![format!("reduced: {}", r.render()), format!("licensed by: {route}"), format!("hypotheses: {}", r.report)];
                let data = json!({ "tensor": r.tensor.tensor().render(), "chart": qc.coords(), "route": route });
                Ok(Outcome {
                    word: "reduced".into(),
                    lines,
                    data,
                    value: Some((Value::Vector(r.tensor.tensor().clone()), qc)),
                    bound: Some(Object::Nambu(r.tensor)),
                })
            }
            Command::Canonicity { p, e, n, bound } => {
                let pi = self.nambu(p)?;
                let n = n.as_ref().map(|n| self.submanifold(n)).transpose()?;
                let c = falsify_canonicity(pi, self.bundle(e)?, n, *bound).map_err(err)?;
                Ok(match c {
                    Canonicity::UpToBound => {
                        Outcome::new("canonical-up-to-bound", vec![format!("no counterexample up to degree {bound}")], json!({ "bound": bound }))
                    }
                    Canonicity::Counterexample { functions, bracket } => {
                        let fs: Vec<String> = functions.iter().map(|f| fn_text(pi.chart(), f)).collect();
                        let b = fn_text(pi.chart(), &bracket);
                        Outcome::new(
                            "not-canonical",
                            vec![format!("counterexample: {{{}}} = {b}", fs.join(", "))],
                            json!({ "functions": fs, "bracket": b }),
                        )
                    }
                })
            }
            Command::Gauge { p, b } => {
                let pi = self.nambu(p)?;
                let data = gauge_transform(pi, self.form(b)?).map_err(err)?;
                let t = data.transported.clone().expect("transported");
                let mut o = Outcome::value(Value::Vector(t.tensor().clone()), pi.chart());
                o.word = "transported".into();
                o.lines = vec![format!("transported: {}", t.tensor())];
                let locus = data.vanishing_locus();
                if !locus.is_constant() {
                    let text = locus.render(&pi.chart().var_names());
                    o.lines.push(format!("vanishing locus: {text} = 0"));
                    o.data["locus"] = json!(text);
                }
                o.bound = Some(Object::Nambu(t));
                Ok(o)
            }
            Command::LeibnizIso { p, b } => {
                let r = check_leibniz_iso(self.nambu(p)?, self.form(b)?).map_err(err)?;
                let mut lines = vec![if r.holds { "holds" } else { "fails" }.to_string()];
                if let Some((a, bb, what)) = &r.witness {
                    lines.push(format!("witness: {what} on ({a}, {bb})"));
                }
                Ok(Outcome::flag(r.holds, "holds", "fails", lines, json!({})))
            }
            Command::Characteristic { p, b, points } => {
                let pi = self.nambu(p)?;
                let data = gauge_transform(pi, self.form(b)?).map_err(err)?;
                let t = data.transported.as_ref().expect("transported");
                let mut sampler = self.sampler(index);
                let pts: Vec<_> = (0..*points).map(|_| sampler.point(pi.chart().nvars())).collect();
                let m = check_characteristic_match(pi, t, &pts).map_err(err)?;
                let lines = vec![format!("{} of {} points used", m.points_used, points)];
                Ok(Outcome::flag(m.matched, "match", "mismatch", lines, json!({ "points_used": m.points_used })))
            }
            Command::Commute { problem, b, force } => {
                let prob = self.problem(problem)?;
                let c = gauge_reduce_commute(&prob, self.form(b)?, *force).map_err(err)?;
                let mut lines = vec![
                    format!("gauge then reduce: {}", c.gauge_then_reduce.render()),
                    format!("reduce then gauge: {}", c.reduce_then_gauge.tensor()),
                    format!("projected form: {}", c.projected_form),
                ];
                for h in &c.hypotheses {
                    let mut l = format!("{}: {}", h.name, if h.passed { "pass" } else { "fail" });
                    if let Some(w) = &h.witness {
                        l.push_str(&format!(" [{w}]"));
                    }
                    lines.push(l);
                }
                lines.push(format!("theorem applies: {}", c.theorem_applies));
                let data = json!({
                    "gauge_then_reduce": c.gauge_then_reduce.tensor.tensor().render(),
                    "reduce_then_gauge": c.reduce_then_gauge.tensor().render(),
                    "theorem_applies": c.theorem_applies,
                    "hypotheses": c.hypotheses.iter().map(|h| json!({ "name": h.name, "passed": h.passed })).collect::<Vec<_>>(),
                    "equal": c.equal,
                });
                Ok(Outcome::flag(c.equal, "equal", "differ", lines, data))
            }
            Command::Oracle { identity, points } => self.oracle(identity, *points, index),
        }
    }

    fn oracle(&self, identity: &Identity, points: usize, index: u64) -> Res<Outcome> {
        let mut s = self.sampler(index);
        let (name, sweep, claim) = match identity {
            Identity::Fi(p) => {
                let pi = self.nambu(p)?;
                let sweep = oracle::fi(pi, &mut s, points).map_err(err)?;
                // Only a symbolically verified structure makes a mismatch a bug.
                let claim = !sweep.passed() && pi.check_fi().is_verified();
                ("fi", sweep, claim)
            }
            Identity::Adjunction(p) => ("adjunction", oracle::adjunction(self.nambu(p)?, &mut s, points).map_err(err)?, true),
            Identity::Hamiltonian(p) => ("hamiltonian", oracle::hamiltonian(self.nambu(p)?, &mut s, points).map_err(err)?, true),
            Identity::Bracket(p, args) => {
                let pi = self.nambu(p)?;
                let fs = self.scalars_in(args, pi.chart())?;
                ("bracket", oracle::bracket(pi, &fs, &mut s, points).map_err(err)?, true)
            }
            Identity::GaugeAnchor { p, b } => ("gauge-anchor", oracle::gauge_anchor(self.nambu(p)?, self.form(b)?, &mut s, points).map_err(err)?, true),
            Identity::Reduction(problem) => ("reduction", oracle::reduction(&self.problem(problem)?, &mut s, points).map_err(err)?, true),
        };
        Ok(sweep_outcome(name, sweep, claim))
    }
}

fn check_order(order: usize) -> Res<usize> {
    if order < 2 {
        return Err(format!("order must be at least 2, got {order}"));
    }
    Ok(order)
}

fn form_list<K: Kind>(forms: &[Tensor<K>]) -> Outcome {
    let texts: Vec<String> = forms.iter().map(|f| f.render()).collect();
    let mut lines = vec![format!("{} basis elements", texts.len())];
    lines.extend(texts.iter().cloned());
    Outcome::new("value", lines, json!({ "count": texts.len(), "basis": texts }))
}

fn span_text(b: &Subbundle) -> String {
    let vs: Vec<String> = b.vectors().iter().map(|v| v.render()).collect();
    format!("span({})", vs.join(", "))
}

fn judge(stmt: &Stmt, env: &Env, result: Res<Outcome>) -> (Verdict, String, Vec<String>, Json, Option<Object>) {
    let o = match result {
        Ok(o) => o,
        Err(msg) => {
            let lines = vec![format!("error: {msg}")];
            let data = json!({ "error": msg });
            let v = if stmt.expect == Some(Expect::Outcome("error".into())) { Verdict::Pass } else { Verdict::Error };
            return (v, "error".into(), lines, data, None);
        }
    };
    let mut lines = o.lines;
    let verdict = match &stmt.expect {
        None => {
            if POSITIVE.contains(&o.word.as_str()) {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        Some(Expect::Outcome(w)) => {
            if *w == o.word {
                Verdict::Pass
            } else {
                lines.push(format!("expected {w}, got {}", o.word));
                Verdict::Fail
            }
        }
        Some(Expect::Value(e)) => match &o.value {
            None => {
                lines.push("this command has no value to compare".into());
                Verdict::Error
            }
            Some((v, chart)) => match env.eval_in(e, chart) {
                Ok(want) if want == *v || (want.is_zero() && v.is_zero()) => Verdict::Pass,
                Ok(want) => {
                    lines.push(format!("expected {}", want.render(chart)));
                    Verdict::Fail
                }
                Err(msg) => {
                    lines.push(format!("error: cannot evaluate the expectation: {msg}"));
                    Verdict::Error
                }
            },
        },
    };
    (verdict, o.word, lines, o.data, o.bound)
}

/// Runs every command in order. Failures are recorded and execution
/// continues; the report is deterministic unless timing is requested.
pub fn run(session: &Session, opts: &RunOptions) -> Report {
    let objects = session.decls.iter().map(|d| (d.name.clone(), d.object.clone())).collect();
    let mut env = Env { chart: session.chart.clone(), objects, seed: opts.seed };
    let mut entries = Vec::new();
    for (k, (stmt, pos)) in session.commands.iter().zip(&session.command_pos).enumerate() {
        let start = Instant::now();
        let result = env.execute(&stmt.command, k as u64);
        let (verdict, outcome, lines, data, bound) = judge(stmt, &env, result);
        if let (Some(name), Some(obj)) = (&stmt.bind, bound) {
            env.objects.insert(name.clone(), obj);
        }
        entries.push(Entry {
            line: pos.line,
            column: pos.col,
            command: stmt.to_string(),
            verdict,
            outcome,
            lines,
            data,
            millis: opts.timing.then(|| start.elapsed().as_millis()),
        });
    }
    let warnings = session.warnings.iter().map(|(p, w)| format!("{p}: {w}")).collect();
    Report { seed: opts.seed, warnings, entries }
}
