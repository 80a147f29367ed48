//! Canonical JSON and flat CSV rendering of run reports.

use std::fmt::Write as _;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::indices::{GridCell, IndexEstimate};

/// Formats a float with 12 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // one spelling for both signed zeros
        return format!("{:.11e}", 0.0f64);
    }
    format!("{x:.11e}")
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(i) = n.as_i64() {
        let _ = write!(out, "{i}");
    } else if let Some(u) = n.as_u64() {
        let _ = write!(out, "{u}");
    } else {
        out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat("  ").take(k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[k.as_str()], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Sorted keys, two-space indentation, integers verbatim, floats with 12
/// significant digits, trailing newline.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

/// One CSV line; absent grid coordinates are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub quantity: String,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub n: Option<u64>,
    pub value: f64,
    pub stderr: f64,
}

impl CsvRow {
    pub fn summary(quantity: &str, value: f64, stderr: f64) -> Self {
        CsvRow { quantity: quantity.to_string(), epsilon: None, delta: None, alpha: None, n: None, value, stderr }
    }

    pub fn cell(quantity: &str, c: &GridCell) -> Self {
        CsvRow {
            quantity: quantity.to_string(),
            epsilon: c.epsilon,
            delta: c.delta,
            alpha: c.alpha,
            n: c.n,
            value: c.value,
            stderr: c.stderr,
        }
    }
}

/// Summary row followed by the per-grid rows of an estimate.
pub fn estimate_rows(quantity: &str, e: &IndexEstimate) -> Vec<CsvRow> {
    std::iter::once(CsvRow::summary(quantity, e.value, e.stderr))
        .chain(e.per_grid.iter().map(|c| CsvRow::cell(quantity, c)))
        .collect()
}

pub fn render_csv(rows: &[CsvRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["quantity", "epsilon", "delta", "alpha", "n", "value", "stderr"]).map_err(io)?;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.quantity.clone(),
            opt(r.epsilon),
            opt(r.delta),
            opt(r.alpha),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            format_float(r.value),
            format_float(r.stderr),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
