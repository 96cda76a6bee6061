//! Run reports as human text or versioned JSON.

use std::fmt::Write as _;

use serde_json::{json, Value as Json};

pub const SCHEMA: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub column: usize,
    /// Canonical text of the command.
    pub command: String,
    pub verdict: Verdict,
    /// Short outcome word such as `verified`, `refuted` or `value`.
    pub outcome: String,
    pub lines: Vec<String>,
    pub data: Json,
    pub millis: Option<u128>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub warnings: Vec<String>,
    pub entries: Vec<Entry>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict == Verdict::Pass)
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.entries.iter().filter(|e| e.verdict == v).count()
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<Json> = self
            .entries
            .iter()
            .map(|e| {
                let mut o = json!({
                    "line": e.line,
                    "column": e.column,
                    "command": e.command,
                    "verdict": e.verdict.as_str(),
                    "outcome": e.outcome,
                    "lines": e.lines,
                    "data": e.data,
                });
                if let Some(ms) = e.millis {
                    o["millis"] = json!(ms);
                }
                o
            })
            .collect();
        let doc = json!({
            "schema": SCHEMA,
            "seed": self.seed,
            "warnings": self.warnings,
            "entries": entries,
            "summary": {
                "pass": self.count(Verdict::Pass),
                "fail": self.count(Verdict::Fail),
                "error": self.count(Verdict::Error),
            },
        });
        serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for e in &self.entries {
            let _ = write!(out, "[{}] line {}: {}", e.verdict.as_str(), e.line, e.command);
            if let Some(ms) = e.millis {
                let _ = write!(out, "  ({ms} ms)");
            }
            out.push('\n');
            for l in &e.lines {
                let _ = writeln!(out, "    {l}");
            }
        }
        let _ = writeln!(
            out,
            "{} passed, {} failed, {} errors",
            self.count(Verdict::Pass),
            self.count(Verdict::Fail),
            self.count(Verdict::Error)
        );
        out
    }
}
