//! Versioned JSON envelopes and CSV tables.
//!
//! JSON carries `"schema": "bridge-lab/1"`. CSV files start with `#` comment
//! lines holding the same metadata as one-line JSON, followed by an RFC-4180
//! table whose numbers have 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use bridge_core::report::Check;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ConfigRecord, Format};

pub const SCHEMA: &str = "bridge-lab/1";

/// One cell of a CSV table.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Self::Num(v) => v.to_string(),
            Self::Int(v) => v.to_string(),
            Self::Text(s) => s.clone(),
            Self::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a subcommand hands back for rendering.
pub struct CommandOutput {
    pub result: Value,
    pub table: Table,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Summary<'a> {
    all_pass: bool,
    failed: Vec<&'a str>,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    tool: Tool,
    command: &'a str,
    config: &'a ConfigRecord,
    invariants: Summary<'a>,
    result: &'a Value,
}

fn tool() -> Tool {
    Tool {
        name: "bridge-lab",
        version: env!("CARGO_PKG_VERSION"),
    }
}

pub fn render(command: &str, config: &ConfigRecord, out: &CommandOutput) -> anyhow::Result<String> {
    let summary = Summary {
        all_pass: out.checks.iter().all(|c| c.pass),
        failed: out.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect(),
        checks: &out.checks,
    };
    match config.format {
        Format::Json => {
            let env = Envelope {
                schema: SCHEMA,
                tool: tool(),
                command,
                config,
                invariants: summary,
                result: &out.result,
            };
            Ok(serde_json::to_string_pretty(&env)? + "\n")
        }
        Format::Csv => {
            let mut text = String::new();
            text.push_str(&format!("# schema: {SCHEMA}\n"));
            text.push_str(&format!("# tool: {}\n", serde_json::to_string(&tool())?));
            text.push_str(&format!("# command: {command}\n"));
            text.push_str(&format!("# config: {}\n", serde_json::to_string(config)?));
            text.push_str(&format!("# invariants: {}\n", serde_json::to_string(&summary)?));
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
            w.write_record(&out.table.header)?;
            for row in &out.table.rows {
                w.write_record(row.iter().map(Cell::render))?;
            }
            text.push_str(std::str::from_utf8(&w.into_inner()?)?);
            Ok(text)
        }
    }
}

pub fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).context("writing standard output")?;
            stdout.flush().context("flushing standard output")
        }
    }
}
