//! Machine-readable experiment reports.
//!
//! JSON output is canonical: insertion-ordered keys, two-space indentation and
//! every float written with 17 significant digits, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    experiment: String,
    config: Value,
    assertions: Vec<Assertion>,
    data: Map<String, Value>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.to_string(), config: Value::Null, assertions: Vec::new(), data: Map::new() }
    }

    pub fn with_config<C: Serialize>(mut self, config: &C) -> Result<Self> {
        self.config = serde_json::to_value(config)?;
        Ok(self)
    }

    /// `measured <= bound`.
    pub fn check_le(&mut self, name: &str, measured: f64, bound: f64) -> bool {
        self.push(name, measured, "<=", bound, measured <= bound)
    }

    /// `measured >= bound`.
    pub fn check_ge(&mut self, name: &str, measured: f64, bound: f64) -> bool {
        self.push(name, measured, ">=", bound, measured >= bound)
    }

    /// `measured < bound`.
    pub fn check_lt(&mut self, name: &str, measured: f64, bound: f64) -> bool {
        self.push(name, measured, "<", bound, measured < bound)
    }

    /// A yes/no property, recorded as `measured = 1` or `0` against bound `1`.
    pub fn check(&mut self, name: &str, holds: bool) -> bool {
        self.push(name, if holds { 1.0 } else { 0.0 }, "==", 1.0, holds)
    }

    fn push(&mut self, name: &str, measured: f64, relation: &'static str, bound: f64, pass: bool) -> bool {
        self.assertions.push(Assertion { name: name.to_string(), measured, relation, bound, pass });
        pass
    }

    pub fn record<V: Serialize>(&mut self, key: &str, value: &V) -> Result<()> {
        self.data.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn to_value(&self) -> Result<Value> {
        let mut root = Map::new();
        root.insert("schema".into(), Value::from(SCHEMA_VERSION));
        root.insert("experiment".into(), Value::from(self.experiment.clone()));
        root.insert("pass".into(), Value::from(self.pass()));
        root.insert("config".into(), self.config.clone());
        root.insert("assertions".into(), serde_json::to_value(&self.assertions)?);
        root.insert("data".into(), Value::Object(self.data.clone()));
        Ok(Value::Object(root))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(canonical_json(&self.to_value()?))
    }
}

/// Pretty-print with every non-integer number as `{:.16e}`; non-finite floats become `null`.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    let _ = write!(out, "{f:.16e}");
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

/// Observed order of one refinement step; `None` on the coarsest row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Order {
    Observed(f64),
    /// Error is exactly zero.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub error: f64,
    pub order: Option<Order>,
}

/// Rows `(dt, error, order)` with `order = log2(e_{k-1} / e_k) / log2(dt_{k-1} / dt_k)`.
pub fn convergence_table(levels: &[(f64, f64)]) -> Result<Vec<ConvergenceRow>> {
    if levels.len() < 3 {
        return Err(Error::Precondition(format!("convergence study needs at least 3 levels, got {}", levels.len())));
    }
    Ok(levels
        .iter()
        .enumerate()
        .map(|(k, &(dt, error))| {
            let order = if error == 0.0 {
                Some(Order::Exact)
            } else if k == 0 {
                None
            } else {
                let (dt0, e0) = levels[k - 1];
                Some(Order::Observed((e0 / error).log2() / (dt0 / dt).log2()))
            };
            ConvergenceRow { dt, error, order }
        })
        .collect())
}

/// Write the convergence table as CSV with header `dt,error,order`.
pub fn emit_convergence<W: Write>(levels: &[(f64, f64)], out: W) -> Result<Vec<ConvergenceRow>> {
    let rows = convergence_table(levels)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dt", "error", "order"])?;
    for r in &rows {
        let order = match r.order {
            None => String::new(),
            Some(Order::Exact) => "exact".to_string(),
            Some(Order::Observed(p)) => format!("{p:.16e}"),
        };
        w.write_record([format!("{:.16e}", r.dt), format!("{:.16e}", r.error), order])?;
    }
    w.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_floats_and_order() {
        let mut r = Report::new("demo");
        r.check_le("err", 1e-7, 1e-6);
        r.record("x", &vec![0.1, 2.0]).unwrap();
        r.record("n", &3usize).unwrap();
        let s = r.to_json().unwrap();
        assert!(s.starts_with("{\n  \"schema\": 1,\n  \"experiment\": \"demo\""));
        assert!(s.contains("1.0000000000000001e-1") && s.contains("2.0000000000000000e0"));
        assert!(s.contains("\"n\": 3"));
        assert_eq!(s, r.to_json().unwrap());
        assert!(r.pass());
        r.check("flag", false);
        assert!(!r.pass());
    }

    #[test]
    fn convergence_orders() {
        let rows = convergence_table(&[(0.1, 4e-2), (0.05, 1e-2), (0.025, 2.5e-3)]).unwrap();
        assert_eq!(rows[0].order, None);
        for r in &rows[1..] {
            let Some(Order::Observed(p)) = r.order else { panic!() };
            assert!((p - 2.0).abs() < 1e-12);
        }
        let exact = convergence_table(&[(0.1, 0.0), (0.05, 0.0), (0.025, 0.0)]).unwrap();
        assert!(exact.iter().all(|r| r.order == Some(Order::Exact)));
        assert!(matches!(convergence_table(&[(0.1, 1.0)]), Err(Error::Precondition(_))));
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        emit_convergence(&[(0.1, 4e-2), (0.05, 1e-2), (0.025, 0.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "dt,error,order");
        assert!(lines[1].ends_with(','));
        assert!(lines[3].ends_with("exact"));
    }
}
