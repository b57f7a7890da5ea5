//! CSV and JSON writers and the run manifest.

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::failure::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A column of a table.
pub enum Column {
    Float(Vec<f64>),
    Int(Vec<u64>),
    Text(Vec<String>),
    Bool(Vec<bool>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Float(v) => v.len(),
            Column::Int(v) => v.len(),
            Column::Text(v) => v.len(),
            Column::Bool(v) => v.len(),
        }
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Float(v) => format_float(v[row]),
            Column::Int(v) => v[row].to_string(),
            Column::Text(v) => v[row].clone(),
            Column::Bool(v) => v[row].to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Column::Float(v) => json!(v),
            Column::Int(v) => json!(v),
            Column::Text(v) => json!(v),
            Column::Bool(v) => json!(v),
        }
    }
}

/// 17 significant digits: enough to read back the exact `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Named columns of equal length.
pub struct Table {
    columns: Vec<(&'static str, Column)>,
}

impl Table {
    pub fn new() -> Self {
        Self { columns: Vec::new() }
    }

    pub fn with(mut self, name: &'static str, column: Column) -> Self {
        if let Some((_, first)) = self.columns.first() {
            assert_eq!(first.len(), column.len(), "column {name} has the wrong length");
        }
        self.columns.push((name, column));
        self
    }

    fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }
}

/// Writes artifacts into one directory and remembers their names.
pub struct Output {
    dir: PathBuf,
    format: Format,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: PathBuf, format: Format) -> CliResult<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            format,
            written: Vec::new(),
        })
    }

    /// Writes `table` as `<stem>.csv` or `<stem>.json` depending on the
    /// requested format.
    pub fn table(&mut self, stem: &str, table: &Table) -> CliResult<()> {
        match self.format {
            Format::Csv => self.csv(&format!("{stem}.csv"), table),
            Format::Json => {
                let map: Map<String, Value> = table
                    .columns
                    .iter()
                    .map(|(name, col)| (name.to_string(), col.to_json()))
                    .collect();
                self.json(&format!("{stem}.json"), &Value::Object(map))
            }
        }
    }

    /// Always CSV, whatever the requested format.
    pub fn csv(&mut self, name: &str, table: &Table) -> CliResult<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(self.dir.join(name))?;
        w.write_record(table.columns.iter().map(|(n, _)| *n))?;
        for row in 0..table.rows() {
            w.write_record(table.columns.iter().map(|(_, c)| c.cell(row)))?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn json(&mut self, name: &str, value: &Value) -> CliResult<()> {
        // `Value` maps are ordered by key, so a round trip sorts everything.
        let sorted: Value = serde_json::to_value(value)?;
        let mut text = serde_json::to_string_pretty(&sorted)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn manifest(&mut self, command: &str, seed: u64, config: Value) -> CliResult<()> {
        let value = manifest(command, seed, config, &self.written);
        self.json("manifest.json", &value)
    }
}

pub fn manifest(command: &str, seed: u64, config: Value, outputs: &[String]) -> Value {
    json!({
        "command": command,
        "config": config,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "outputs": outputs,
    })
}
