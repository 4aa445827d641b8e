//! Report envelope and its three renderings.
//!
//! JSON and CSV are the machine formats; the human table is a summary.
//! Nothing here reads the clock unless `--timing` asked for it, so equal
//! configurations give byte-identical output.

use std::fmt::Write as _;

use mixsmooth_core::report::{InequalityReport, QuadratureInfo, SamplerInfo};
use mixsmooth_core::{Rectangle, Verdict};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u64 = 1;
pub const REPORT_COLUMNS: &str = include_str!("../../../schemas/report-v1.columns");
pub const COUNTEREXAMPLE_COLUMNS: &str = include_str!("../../../schemas/counterexample-v1.columns");

/// Column names of a versioned CSV contract, one per line.
pub fn columns(contract: &str) -> Vec<&str> {
    contract.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

/// JSON for a float. Non-finite values become the strings `inf`, `-inf`
/// and `nan` instead of null, so `p = ∞` survives the round trip.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn rect_json(r: &Rectangle) -> Value {
    json!({
        "lo": r.lo().iter().copied().map(num).collect::<Vec<_>>(),
        "hi": r.hi().iter().copied().map(num).collect::<Vec<_>>(),
    })
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() {
        format!("{x:.6e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub kind: &'static str,
    pub name: String,
    pub inputs: Map<String, Value>,
    pub value: Option<f64>,
    pub values: Vec<(&'static str, f64)>,
    pub margin: Option<f64>,
    pub verdict: Verdict,
    pub quadrature: Option<QuadratureInfo>,
    pub sampler: Option<SamplerInfo>,
    pub notes: Vec<String>,
}

impl Entry {
    pub fn new(kind: &'static str, name: impl Into<String>, verdict: Verdict) -> Self {
        Self {
            kind,
            name: name.into(),
            inputs: Map::new(),
            value: None,
            values: Vec::new(),
            margin: None,
            verdict,
            quadrature: None,
            sampler: None,
            notes: Vec::new(),
        }
    }

    pub fn input(mut self, key: &str, v: Value) -> Self {
        self.inputs.insert(key.into(), v);
        self
    }

    pub fn from_inequality(kind: &'static str, r: InequalityReport) -> Self {
        let mut e = Self::new(kind, r.name, r.verdict);
        e.value = Some(r.lhs_max);
        e.values = vec![("lhs_max", r.lhs_max), ("rhs", r.rhs)];
        if let Some(c) = r.constant {
            e.values.push(("constant", c));
        }
        e.values.push(("violations", r.violations as f64));
        e.values.push(("samples", r.samples as f64));
        e.margin = Some(r.margin);
        e.quadrature = r.quadrature;
        e.sampler = r.sampler;
        e.notes = r.notes;
        if r.lhs_max == 0.0 && r.rhs == 0.0 {
            e.notes.push("both sides vanish: zero margin".into());
        }
        e
    }

    pub fn to_json(&self) -> Value {
        let values: Map<String, Value> = self.values.iter().map(|(k, v)| ((*k).to_string(), num(*v))).collect();
        json!({
            "kind": self.kind,
            "name": self.name,
            "inputs": Value::Object(self.inputs.clone()),
            "value": opt_num(self.value),
            "values": Value::Object(values),
            "margin": opt_num(self.margin),
            "verdict": self.verdict.as_str(),
            "quadrature": self.quadrature.as_ref().map_or(Value::Null, |q| json!({
                "order": q.order,
                "cells": q.cells,
                "error_estimate": opt_num(q.error_estimate),
                "evaluations": q.evaluations,
                "converged": q.converged,
            })),
            "sampler": self.sampler.map_or(Value::Null, |s| json!({"seed": s.seed, "count": s.count})),
            "notes": self.notes,
        })
    }
}

/// Rows for the counterexample CSV; kept apart from the entries because
/// the CSV contract has its own columns.
pub type Table = Vec<Vec<f64>>;

#[derive(Debug, Clone)]
pub struct Envelope {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub entries: Vec<Entry>,
    pub wall_time: Option<f64>,
    pub table: Option<Table>,
}

impl Envelope {
    pub fn overall(&self) -> Verdict {
        Verdict::combine(self.entries.iter().map(|e| e.verdict))
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
        m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), Value::Object(self.config.clone()));
        if let Some(t) = self.wall_time {
            m.insert("wall_time".into(), json!(t));
        }
        m.insert("entries".into(), self.entries.iter().map(Entry::to_json).collect());
        m.insert("overall".into(), json!(self.overall().as_str()));
        Value::Object(m)
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("plain JSON values serialize");
        s.push('\n');
        s
    }

    /// The counterexample table when the command produced one, otherwise
    /// one row per entry.
    pub fn render_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(table) = &self.table {
            w.write_record(columns(COUNTEREXAMPLE_COLUMNS))?;
            for row in table {
                w.write_record(row.iter().map(|v| v.to_string()))?;
            }
        } else {
            w.write_record(columns(REPORT_COLUMNS))?;
            for e in &self.entries {
                let q = e.quadrature.as_ref();
                let cells = q.map(|q| q.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"));
                w.write_record([
                    e.kind.to_string(),
                    e.name.clone(),
                    e.value.map(|v| v.to_string()).unwrap_or_default(),
                    e.margin.map(|v| v.to_string()).unwrap_or_default(),
                    e.verdict.as_str().to_string(),
                    q.map(|q| q.order.to_string()).unwrap_or_default(),
                    cells.unwrap_or_default(),
                    q.and_then(|q| q.error_estimate)
                        .map(|v| v.to_string())
                        .unwrap_or_default(),
                    e.sampler.map(|s| s.seed.to_string()).unwrap_or_default(),
                    e.sampler.map(|s| s.count.to_string()).unwrap_or_default(),
                    e.notes.join("; "),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields"))
    }

    pub fn render_human(&self) -> String {
        let header = ["kind", "name", "value", "margin", "verdict"];
        let rows: Vec<[String; 5]> = self
            .entries
            .iter()
            .map(|e| {
                [
                    e.kind.to_string(),
                    e.name.clone(),
                    e.value.map_or("-".into(), fmt_num),
                    e.margin.map_or("-".into(), fmt_num),
                    e.verdict.as_str().to_string(),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for r in &rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: [&str; 5]| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                let pad = width[i] - c.chars().count();
                // numbers right-aligned, text left-aligned
                if i == 2 || i == 3 {
                    s.push_str(&" ".repeat(pad));
                    s.push_str(c);
                } else {
                    s.push_str(c);
                    s.push_str(&" ".repeat(pad));
                }
                if i < 4 {
                    s.push_str("  ");
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&mut out, header);
        let rule: usize = width.iter().sum::<usize>() + 8;
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for (e, r) in self.entries.iter().zip(&rows) {
            line(&mut out, [&r[0], &r[1], &r[2], &r[3], &r[4]]);
            for note in &e.notes {
                let _ = writeln!(out, "    note: {note}");
            }
        }
        if let Some(t) = self.wall_time {
            let _ = writeln!(out, "wall time: {t:.3} s");
        }
        let _ = writeln!(out, "overall: {}", self.overall());
        out
    }
}
