//! Machine- and human-readable reports.
//!
//! The text rendering is the JSON document flattened to `path = value`
//! lines, so the two agree field for field by construction.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analysis::Analysis;
use crate::simulator::SimulationReport;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    value: Value,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report data serialises")
}

impl Report {
    pub fn from_value(value: Value) -> Self {
        Report { value }
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    pub fn classification(model: &str, analysis: &Analysis) -> Self {
        let c = &analysis.result;
        let verdict_line = format!("{} [{} | {}]", c.verdict, c.criterion.id(), c.criterion.alias());
        let attempts: Vec<Value> = analysis
            .attempts
            .iter()
            .map(|a| {
                json!({
                    "criterion": a.criterion.id(),
                    "alias": a.criterion.alias(),
                    "input": a.input,
                    "verdict": a.verdict.to_string(),
                    "reason": a.reason,
                })
            })
            .collect();
        Report {
            value: json!({
                "verdict_line": verdict_line,
                "verdict": c.verdict.to_string(),
                "kind": "classification",
                "model": model,
                "criterion": c.criterion.id(),
                "alias": c.criterion.alias(),
                "input": analysis.input,
                "reason": c.reason,
                "notes": c.notes,
                "certificate": to_value(&c.certificate),
                "attempts": attempts,
            }),
        }
    }

    pub fn simulation(model: &str, sim: &SimulationReport) -> Self {
        Report { value: json!({ "kind": "simulation", "model": model, "simulation": to_value(sim) }) }
    }

    pub fn verdict(&self) -> Option<&str> {
        self.value.get("verdict").and_then(Value::as_str)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.value).expect("report serialises");
        s.push('\n');
        s
    }

    /// `(path, value)` pairs in document order; scalars use their JSON spelling
    /// except strings, which are unquoted.
    pub fn flatten(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        flatten_into(&self.value, String::new(), &mut out);
        out
    }

    /// Aligned `path  value` columns.
    pub fn to_text(&self) -> String {
        let rows = self.flatten();
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in rows {
            let pad = width - k.chars().count();
            s.push_str(&k);
            s.push_str(&" ".repeat(pad));
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }
}

fn flatten_into(v: &Value, path: String, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) if !m.is_empty() => {
            for (k, child) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten_into(child, p, out);
            }
        }
        Value::Array(a) if !a.is_empty() => {
            for (i, child) in a.iter().enumerate() {
                flatten_into(child, format!("{path}[{i}]"), out);
            }
        }
        Value::String(s) => out.push((path, s.replace('\n', "\\n"))),
        other => out.push((path, other.to_string())),
    }
}

/// Parses the text rendering back into `(path, value)` pairs.
pub fn parse_text(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.trim_end().to_string(), v.to_string())))
        .collect()
}

/// Table with a header row, columns padded to equal width.
pub fn aligned_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (c, cell) in r.iter().enumerate().take(cols) {
            width[c] = width[c].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (c, cell) in cells.iter().enumerate() {
            if c > 0 {
                s.push_str("  ");
            }
            s.push_str(cell);
            if c + 1 < cells.len() {
                s.push_str(&" ".repeat(width[c] - cell.chars().count()));
            }
        }
        s.push('\n');
        s
    };
    let mut s = line(header.to_vec());
    for r in rows {
        s.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    s
}

/// Merges extra top-level fields into an object report.
pub fn with_fields(mut report: Report, fields: Map<String, Value>) -> Report {
    if let Value::Object(m) = &mut report.value {
        m.extend(fields);
    }
    report
}
