use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n as i64)
    }
}

/// `x` rounded to `digits` significant digits; scientific below 1e-6.
pub fn round_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let mag = x.abs().log10().floor() as i64;
    if mag < -6 {
        return format!("{:.*e}", digits - 1, x);
    }
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

pub struct Report {
    pub command: String,
    pub tolerances: Vec<(String, f64)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            command: command.into(),
            tolerances: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn tol(mut self, name: &str, v: f64) -> Report {
        self.tolerances.push((name.into(), v));
        self
    }

    pub fn columns(mut self, cols: &[&str]) -> Report {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    /// Single-record report built field by field.
    pub fn field(mut self, name: &str, v: impl Into<Cell>) -> Report {
        if self.rows.is_empty() {
            self.rows.push(Vec::new());
        }
        self.columns.push(name.into());
        self.rows[0].push(v.into());
        self
    }

    pub fn render(&self, format: Format, digits: usize) -> String {
        let cell = |c: &Cell| match c {
            Cell::Str(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => round_sig(*x, digits),
            Cell::Bool(b) => b.to_string(),
        };
        match format {
            Format::Json => {
                let num = |x: f64| {
                    round_sig(x, digits)
                        .parse::<f64>()
                        .ok()
                        .and_then(Number::from_f64)
                        .map_or(Value::Null, Value::Number)
                };
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut m = Map::new();
                        for (k, c) in self.columns.iter().zip(r) {
                            let v = match c {
                                Cell::Str(s) => Value::String(s.clone()),
                                Cell::Int(n) => Value::from(*n),
                                Cell::Float(x) => num(*x),
                                Cell::Bool(b) => Value::Bool(*b),
                            };
                            m.insert(k.clone(), v);
                        }
                        Value::Object(m)
                    })
                    .collect();
                let mut tol = Map::new();
                for (k, v) in &self.tolerances {
                    tol.insert(k.clone(), Number::from_f64(*v).map_or(Value::Null, Value::Number));
                }
                let mut top = Map::new();
                top.insert("command".into(), Value::String(self.command.clone()));
                top.insert("version".into(), Value::String(spectral_core::VERSION.into()));
                top.insert("tolerances".into(), Value::Object(tol));
                top.insert("rows".into(), Value::Array(rows));
                let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::new();
                let _ = writeln!(s, "# {} {}", self.command, spectral_core::VERSION);
                for (k, v) in &self.tolerances {
                    let _ = writeln!(s, "# {k}={v:e}");
                }
                let _ = writeln!(s, "{}", self.columns.join(","));
                for r in &self.rows {
                    let line: Vec<String> = r.iter().map(|c| csv_field(&cell(c))).collect();
                    let _ = writeln!(s, "{}", line.join(","));
                }
                s
            }
            Format::Table => {
                let mut s = String::new();
                let _ = writeln!(s, "{} (spectral {})", self.command, spectral_core::VERSION);
                if self.rows.len() == 1 {
                    let w = self.columns.iter().map(|c| c.chars().count()).max().unwrap_or(0);
                    for (k, c) in self.columns.iter().zip(&self.rows[0]) {
                        let _ = writeln!(s, "  {k:<w$}  {}", cell(c));
                    }
                } else {
                    let body: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
                    let widths: Vec<usize> = (0..self.columns.len())
                        .map(|j| {
                            body.iter()
                                .map(|r| r[j].chars().count())
                                .chain(std::iter::once(self.columns[j].chars().count()))
                                .max()
                                .unwrap_or(0)
                        })
                        .collect();
                    let line = |cells: &[String]| {
                        let parts: Vec<String> = cells
                            .iter()
                            .zip(&widths)
                            .map(|(c, &w)| format!("{c:>w$}"))
                            .collect();
                        format!("  {}", parts.join("  "))
                    };
                    let _ = writeln!(s, "{}", line(&self.columns));
                    for r in &body {
                        let _ = writeln!(s, "{}", line(r));
                    }
                }
                if !self.tolerances.is_empty() {
                    let t: Vec<String> = self.tolerances.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
                    let _ = writeln!(s, "  tolerances: {}", t.join(" "));
                }
                s
            }
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
