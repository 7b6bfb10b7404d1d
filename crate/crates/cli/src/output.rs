use crate::config::{Format, RunConfig};
use serde_json::{json, Map, Value};
use std::fmt::Write as _;

#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) => number(*x),
            Cell::Text(t) => json!(t),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Non-finite values become strings so the document stays valid JSON.
fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// A rectangular result plus scalar summary entries.
#[derive(Debug, Default)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
    /// Descriptions of every tolerance breach.
    pub breaches: Vec<String>,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    /// Records `value ≤ limit` under `key`, flagging a breach otherwise.
    pub fn check(&mut self, key: &str, value: f64, limit: f64) {
        self.note(key, value);
        if value.is_nan() || value > limit {
            self.breaches.push(format!("{key} = {value:.3e} exceeds {limit:.3e}"));
        }
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Csv => self.render_csv(cfg),
            Format::Json => self.render_json(cfg),
        }
    }

    fn render_csv(&self, cfg: &RunConfig) -> String {
        let mut out = String::new();
        let config = serde_json::to_string(cfg).expect("config serializes");
        let _ = writeln!(out, "# kacspec {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# config: {config}");
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# {k}: {}", v.csv());
        }
        let _ = writeln!(out, "# status: {}", if self.breaches.is_empty() { "pass" } else { "breach" });
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self, cfg: &RunConfig) -> String {
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "meta": { "version": env!("CARGO_PKG_VERSION"), "config": cfg },
            "summary": summary,
            "status": if self.breaches.is_empty() { "pass" } else { "breach" },
            "breaches": self.breaches,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CommonArgs;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        common: CommonArgs,
    }

    fn config(format: &str) -> RunConfig {
        let a = Wrap::parse_from(["kacspec", "--format", format]).common;
        RunConfig::resolve("spectrum", &a).unwrap()
    }

    fn sample() -> Report {
        let mut r = Report::new(&["k", "x"]);
        r.push(vec![1usize.into(), 0.1.into()]);
        r.push(vec![2usize.into(), f64::NAN.into()]);
        r.check("gap", 2.0, 1.0);
        r
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        let text = sample().render(&config("csv"));
        assert!(text.contains("\n1,1.0000000000000001e-1\n"));
        assert!(text.contains("# status: breach"));
        assert!(text.lines().all(|l| !l.ends_with('\r')));
    }

    #[test]
    fn json_round_trips_numbers() {
        let doc: Value = serde_json::from_str(&sample().render(&config("json"))).unwrap();
        assert_eq!(doc["rows"][0][1].as_f64(), Some(0.1));
        assert_eq!(doc["rows"][1][1], "NaN");
        assert_eq!(doc["breaches"].as_array().unwrap().len(), 1);
        assert_eq!(doc["meta"]["config"]["command"], "spectrum");
    }
}
