//! Tables and their CSV/JSON rendering. CSV output starts with `#` comment
//! lines echoing the resolved configuration; JSON carries it in a `config`
//! field.

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

/// Shortest round-trip representation; exponent form outside [1e-4, 1e6).
fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let a = x.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Int(i) => (*i).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Resolved run description written ahead of the table.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub command: String,
    pub version: String,
    pub config: toml::Table,
}

pub fn render(header: &Header, table: &Table, format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Csv => render_csv(header, table),
        Format::Json => render_json(header, table),
    }
}

fn render_csv(header: &Header, table: &Table) -> CliResult<Vec<u8>> {
    let mut out = format!("# prs {} (prs-cli {})\n", header.command, header.version);
    let echo = toml::to_string(&header.config).map_err(|e| CliError::Config(e.to_string()))?;
    for line in echo.lines().filter(|l| !l.is_empty()) {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(out.into_bytes());
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

fn render_json(header: &Header, table: &Table) -> CliResult<Vec<u8>> {
    let rows: Vec<serde_json::Value> =
        table.rows.iter().map(|r| serde_json::Value::Array(r.iter().map(Cell::json).collect())).collect();
    let doc = serde_json::json!({
        "command": header.command,
        "version": header.version,
        "config": header.config,
        "columns": table.columns,
        "rows": rows,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Io(e.into()))?;
    bytes.push(b'\n');
    Ok(bytes)
}
