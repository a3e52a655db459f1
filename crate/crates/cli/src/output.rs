use std::io::Write;

use serde_json::{json, Map, Value};

use crate::{ExperimentSpec, Failure, Format};

pub const TOOL: &str = "scrateless";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Float(v)
        } else {
            Cell::Empty
        }
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::from)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Output rows with a fixed column order.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn render(spec: &ExperimentSpec, table: &Table) -> Result<Vec<u8>, Failure> {
    let spec_json = serde_json::to_value(spec).map_err(|e| Failure::Computation(e.to_string()))?;
    match spec.format {
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# {TOOL} {VERSION}").unwrap();
            writeln!(out, "# command: {}", spec.command).unwrap();
            writeln!(out, "# spec: {spec_json}").unwrap();
            if let Some(seed) = spec.seed() {
                writeln!(out, "# seed: {seed}").unwrap();
            }
            let mut writer = csv::Writer::from_writer(out);
            let io = |e: csv::Error| Failure::Computation(e.to_string());
            writer.write_record(&table.columns).map_err(io)?;
            for row in &table.rows {
                writer.write_record(row.iter().map(Cell::csv)).map_err(io)?;
            }
            writer
                .into_inner()
                .map_err(|e| Failure::Computation(e.to_string()))
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let object: Map<String, Value> = table
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::json))
                        .collect();
                    Value::Object(object)
                })
                .collect();
            let doc = json!({
                "tool": TOOL,
                "version": VERSION,
                "seed": spec.seed(),
                "spec": spec_json,
                "columns": table.columns,
                "rows": rows,
            });
            let mut out =
                serde_json::to_vec_pretty(&doc).map_err(|e| Failure::Computation(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit(spec: &ExperimentSpec, table: &Table) -> Result<(), Failure> {
    let bytes = render(spec, table)?;
    match &spec.out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::Computation(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::Computation(e.to_string())),
    }
}
