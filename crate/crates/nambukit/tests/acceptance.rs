//! End-to-end acceptance checks on the worked examples.
//!
//! Every criterion prints one `PASS` or `FAIL` line; the test fails if any
//! criterion fails or takes longer than five minutes.

use std::io::Write as _;
use std::time::{Duration, Instant};

use nambu_core::{MultiIndex, NambuStructure};
use nambukit::report::Entry;
use nambukit::session::Object;
use nambukit::{parse, run, Report, RunOptions, Session, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

const LIMIT: Duration = Duration::from_secs(300);
const SEED: u64 = 20;

const SESSIONS: [(&str, &str); 4] = [
    ("examples", include_str!("../sessions/examples.nk")),
    ("gauge", include_str!("../sessions/gauge.nk")),
    ("canonicity", include_str!("../sessions/canonicity.nk")),
    ("higher_order", include_str!("../sessions/higher_order.nk")),
];

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn session(src: &str) -> Result<(Session, Report), String> {
    let s = parse(src).map_err(|e| e.to_string())?;
    let r = run(&s, &RunOptions { seed: SEED, timing: false });
    Ok((s, r))
}

fn all_pass(r: &Report) -> Result<(), String> {
    match r.entries.iter().find(|e| e.verdict != Verdict::Pass) {
        None => Ok(()),
        Some(e) => Err(format!("line {}: {} -> {} {:?}", e.line, e.command, e.outcome, e.lines)),
    }
}

fn entry<'a>(r: &'a Report, prefix: &str) -> Result<&'a Entry, String> {
    r.entries.iter().find(|e| e.command.starts_with(prefix)).ok_or_else(|| format!("no entry for `{prefix}`"))
}

fn text(j: &Json, path: &[&str]) -> String {
    let mut v = j;
    for k in path {
        v = &v[*k];
    }
    v.as_str().unwrap_or_default().to_string()
}

fn nambu(s: &Session, name: &str) -> Result<NambuStructure, String> {
    match s.object(name) {
        // Fresh structure so cached verdicts are not reused.
        Some(Object::Nambu(p)) => NambuStructure::new(p.tensor().clone()).map_err(|e| e.to_string()),
        _ => Err(format!("{name} is not a nambu structure")),
    }
}

fn c1() -> Check {
    let (_, r) = session(
        "chart x y z w;
         nambu P order 3 = w*Dx^Dy^Dz;
         bracket P x y z expect w;
         bracket P y x z expect -w;",
    )?;
    all_pass(&r)?;
    Ok(format!("{{x, y, z}} = {}", entry(&r, "bracket P x")?.lines[0]))
}

fn c2() -> Check {
    let (_, r) = session(
        "chart x y z w;
         nambu P order 3 = w*Dx^Dy^Dz;
         submanifold N : w = 0;
         bundle E = span(Dw) on N;
         canonicity P by E bound 1 expect not-canonical;
         canonicity P by E on N bound 1 expect not-canonical;",
    )?;
    all_pass(&r)?;
    let d = &entry(&r, "canonicity P by E bound")?.data;
    ensure(d["functions"] == serde_json::json!(["x", "y", "z"]), format!("functions {}", d["functions"]))?;
    ensure(text(d, &["bracket"]) == "w", format!("bracket {}", d["bracket"]))?;

    // n = 3, k = 2.
    let (_, r5) = session(include_str!("../sessions/higher_order.nk"))?;
    all_pass(&r5)?;
    let d5 = &entry(&r5, "canonicity P by E on N")?.data;
    ensure(text(d5, &["bracket"]) == "x4", format!("R^5 bracket {}", d5["bracket"]))?;
    let red = entry(&r5, "reduce P on N2")?;
    ensure(text(&red.data, &["route"]) == "tangent-range", format!("R^5 route {}", red.data["route"]))?;
    Ok(format!("{{x, y, z}} = w outside C(M)_E; on R^5, N' reduces via {}", text(&red.data, &["route"])))
}

fn c3() -> Check {
    let (_, r) = session(
        "chart x y z w;
         nambu U order 3 = Dx^Dy^Dz;
         submanifold N : z = 0;
         bundle E = span(Dz) on N;
         sharp-range U on N by E target TN expect fails;
         sharp-range U on N by E with D = E target TN+D expect holds;",
    )?;
    all_pass(&r)?;
    let d = &entry(&r, "sharp-range U on N by E target TN")?.data;
    ensure(text(d, &["witness", "form"]) == "dx^dy", format!("witness {}", d["witness"]))?;
    ensure(text(d, &["witness", "image"]) == "Dz", format!("image {}", d["witness"]))?;
    Ok("TN fails at sharp(dx^dy) = Dz; TN+D holds".into())
}

fn c4() -> Check {
    let (_, r) = session(
        "chart x y z w;
         nambu U order 3 = Dx^Dy^Dz;
         nambu P order 3 = w*Dx^Dy^Dz;
         submanifold Nz : z = 0;
         submanifold N : w = x;
         bundle Ez = span(Dz) on Nz;
         bundle E = span(Dw) on N;
         lie-criterion U on Nz by Ez frame span(Dz) expect holds;
         lie-criterion P on N by E frame span(Dw) expect fails;",
    )?;
    all_pass(&r)?;
    let d = &entry(&r, "lie-criterion P")?.data;
    ensure(text(d, &["witness", "derivative"]) == "Dx^Dy^Dz", format!("derivative {}", d["witness"]))?;
    Ok("L_(Dz) U = 0; L_(Dw) P = Dx^Dy^Dz on {w = x}".into())
}

fn c5() -> Check {
    let (_, r) = session(
        "chart x y z w;
         nambu P order 3 = w*Dx^Dy^Dz;
         submanifold N : w = x;
         bundle E = span(Dw) on N;
         reduce P on N by E expect x*Dx^Dy^Dz as Q;
         check-fi Q expect verified;
         bracket Q x y z expect x;",
    )?;
    all_pass(&r)?;
    let d = &entry(&r, "reduce")?.data;
    ensure(d["chart"] == serde_json::json!(["x", "y", "z"]), format!("chart {}", d["chart"]))?;
    ensure(text(d, &["tensor"]) == "x*Dx^Dy^Dz", format!("tensor {}", d["tensor"]))?;
    Ok(format!("{} on ({}), fi verified", text(d, &["tensor"]), "x, y, z"))
}

/// Tensors on R^5 of order 3: constant ones drawn at random and a few
/// hand-picked non-constant ones.
fn battery() -> Vec<(String, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let names = ["x1", "x2", "x3", "x4", "x5"];
    let blades = MultiIndex::all(5, 3);
    let mut out = Vec::new();
    for _ in 0..24 {
        let terms = rng.gen_range(1..=3);
        let mut parts = Vec::new();
        for _ in 0..terms {
            let b = &blades[rng.gen_range(0..blades.len())];
            let c: i32 = [-2, -1, 1, 2, 3][rng.gen_range(0..5)];
            let wedge: Vec<String> = b.indices().map(|i| format!("D{}", names[i])).collect();
            parts.push(format!("({c})*{}", wedge.join("^")));
        }
        out.push((parts.join(" + "), true));
    }
    for t in [
        "x4*Dx1^Dx2^Dx3",
        "x1*x5*Dx2^Dx3^Dx4",
        "(x1 + x2)*Dx1^Dx2^Dx3 + Dx1^Dx2^Dx4",
        "x4*Dx1^Dx2^Dx3 + x1*Dx4^Dx5^Dx2",
        "x5*Dx1^Dx2^Dx3 + x4*Dx3^Dx4^Dx5",
        "1/(1 + x1^2)*Dx2^Dx3^Dx4",
    ] {
        out.push((t.to_string(), false));
    }
    out
}

fn c6() -> Check {
    let (s, _) = session("chart x y z w; nambu P order 3 = w*Dx^Dy^Dz;")?;
    let p = nambu(&s, "P")?;
    let t0 = Instant::now();
    ensure(p.check_fi().is_verified(), "w*Dx^Dy^Dz not verified")?;
    let t_fi = t0.elapsed();
    ensure(t_fi < Duration::from_secs(60), format!("verification took {t_fi:?}"))?;

    let (s6, r6) = session(
        "chart x1 x2 x3 x4 x5 x6;
         nambu S order 3 = Dx1^Dx2^Dx3 + Dx4^Dx5^Dx6;
         check-fi S expect refuted;
         oracle fi S points 50 expect mismatch;",
    )?;
    all_pass(&r6)?;
    let s = nambu(&s6, "S")?;
    let w = s.check_fi().witness().ok_or("no witness")?.clone();
    ensure(!w.residual.is_zero(), "zero residual")?;
    let again = s.fi_residual(&w.g, &w.f).map_err(|e| e.to_string())?;
    ensure(again == w.residual, "witness residual does not reproduce")?;

    let cases = battery();
    let (mut fi_true, mut constant) = (0, 0);
    for (k, (t, is_const)) in cases.iter().enumerate() {
        let (sb, _) = session(&format!("chart x1 x2 x3 x4 x5; nambu T order 3 = {t};"))?;
        let p = nambu(&sb, "T")?;
        let fi = p.check_fi().is_verified();
        fi_true += fi as usize;
        ensure(p.graph_closed() == fi, format!("case {k} `{t}`: fi {fi}, graph_closed {}", !fi))?;
        if *is_const {
            constant += 1;
            let dec = p.check_decomposable().map_err(|e| e.to_string())?.decomposable;
            ensure(dec == fi, format!("case {k} `{t}`: fi {fi}, decomposable {dec}"))?;
        }
    }
    ensure(fi_true > 0 && fi_true < cases.len(), format!("battery is one-sided ({fi_true} of {})", cases.len()))?;
    let g: Vec<String> = w.g.iter().map(|f| f.render(&s6.chart.var_names())).collect();
    let f: Vec<String> = w.f.iter().map(|f| f.render(&s6.chart.var_names())).collect();
    Ok(format!(
        "verified in {} ms; refuted with g = ({}), f = ({}), residual {}; battery {} tensors ({constant} constant, {fi_true} Nambu)",
        t_fi.as_millis(),
        g.join(", "),
        f.join(", "),
        w.residual.render(&s6.chart.var_names()),
        cases.len()
    ))
}

fn c7() -> Check {
    let (s, r) = session(
        "chart x y z;
         param c;
         nambu U order 3 = Dx^Dy^Dz;
         form Bc = c*dx^dy^dz;
         form Bx = x*dx^dy^dz;
         fn L = (x + 1)^3;
         gauge U by Bc expect 1/(1 + c)*Dx^Dy^Dz as Tc;
         gauge U by Bx expect 1/(1 + x)*Dx^Dy^Dz as Tx;
         check-fi Tc expect verified;
         check-fi Tx expect verified;",
    )?;
    all_pass(&r)?;
    // The determinant is (1 + x)^3, whose zero set is x = -1.
    let Some(Object::Function(l)) = s.object("L") else { return Err("L missing".into()) };
    let want = l.render(&s.chart.var_names());
    let got = text(&entry(&r, "gauge U by Bx")?.data, &["locus"]);
    ensure(got == want, format!("locus {got}, expected {want}"))?;
    Ok(format!("1/(c + 1)*Pi and 1/(x + 1)*Pi; locus {got} = 0"))
}

fn c8() -> Check {
    let (_, r) = session(
        "chart x y z;
         param c;
         nambu U order 3 = Dx^Dy^Dz;
         form Bc = c*dx^dy^dz;
         form Bx = x*dx^dy^dz;
         leibniz-iso U by Bc expect holds;
         leibniz-iso U by Bx expect holds;",
    )?;
    all_pass(&r)?;
    Ok("both gauge examples".into())
}

fn c9() -> Check {
    let (_, r) = session(
        "chart x y z w;
         param c;
         nambu P order 3 = w*Dx^Dy^Dz;
         submanifold N : w = x;
         bundle E = span(Dw) on N;
         form B = c*dx^dy^dz;
         commute P on N by E gauge B expect equal;",
    )?;
    all_pass(&r)?;
    let d = &entry(&r, "commute")?.data;
    let hyps = d["hypotheses"].as_array().ok_or("no hypotheses")?;
    ensure(!hyps.is_empty() && hyps.iter().all(|h| h["passed"] == true), format!("hypotheses {}", d["hypotheses"]))?;
    ensure(d["equal"] == true, "tensors differ")?;
    let (a, b) = (text(d, &["gauge_then_reduce"]), text(d, &["reduce_then_gauge"]));
    ensure(a == b, format!("{a} vs {b}"))?;
    Ok(format!("both orders give {a}"))
}

fn c10() -> Check {
    let mut identities = std::collections::BTreeSet::new();
    let mut sweeps = 0;
    for (name, src) in SESSIONS {
        let (_, r) = session(src).map_err(|e| format!("{name}: {e}"))?;
        all_pass(&r).map_err(|e| format!("{name}: {e}"))?;
        for e in r.entries.iter().filter(|e| e.command.starts_with("oracle ")) {
            let d = &e.data;
            ensure(d["mismatches"] == 0, format!("{name}: {} -> {d}", e.command))?;
            ensure(d["checked"] == 50, format!("{name}: {} checked {}", e.command, d["checked"]))?;
            identities.insert(text(d, &["identity"]));
            sweeps += 1;
        }
    }
    for want in ["fi", "bracket", "adjunction", "hamiltonian", "gauge-anchor", "reduction"] {
        ensure(identities.contains(want), format!("no `{want}` sweep"))?;
    }
    Ok(format!("{sweeps} sweeps of 50 points, 0 mismatches"))
}

fn c11() -> Check {
    let mut bytes = 0;
    for (name, src) in SESSIONS {
        let s = parse(src).map_err(|e| e.to_string())?;
        let opts = RunOptions { seed: SEED, timing: false };
        let (a, b) = (run(&s, &opts).to_json(), run(&s, &opts).to_json());
        ensure(a == b, format!("{name}: reports differ"))?;
        bytes += a.len();
    }
    Ok(format!("{bytes} bytes identical across two runs"))
}

/// Writes past the test harness capture so the lines show up in plain
/// `cargo test` output.
fn report(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("bracket of coordinates", c1),
        ("non-canonical bundles", c2),
        ("range of the sharp map", c3),
        ("Lie derivative criterion", c4),
        ("reduction onto {w = x}", c5),
        ("fundamental identity decision", c6),
        ("gauge closed forms", c7),
        ("Leibniz isomorphism", c8),
        ("gauge and reduction commute", c9),
        ("oracle concordance", c10),
        ("deterministic reports", c11),
    ];
    let mut failed = Vec::new();
    for (k, (title, f)) in criteria.iter().enumerate() {
        let n = k + 1;
        let t0 = Instant::now();
        let mut res = f();
        let dt = t0.elapsed();
        if res.is_ok() && dt > LIMIT {
            res = Err(format!("took {dt:?}"));
        }
        match res {
            Ok(msg) => report(format!("PASS criterion {n}: {title}: {msg} ({} ms)", dt.as_millis())),
            Err(msg) => {
                report(format!("FAIL criterion {n}: {title}: {msg}"));
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
