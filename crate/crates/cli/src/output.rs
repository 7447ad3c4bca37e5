//! Deterministic CSV/JSON rendering.
//!
//! Every run emits a metadata header (tool version, generator id, seed, and
//! the experiment parameters) followed by the data. Files are assembled as
//! full in-memory strings and written once, so reruns with identical
//! parameters produce byte-identical output. `--workers` is deliberately not
//! recorded: it may never influence output bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;

use serde::Serialize;

pub const TOOL: &str = concat!("invmean ", env!("CARGO_PKG_VERSION"));

/// 17-significant-digit rendering used for every CSV float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: String,
    pub generator: String,
    pub seed: u64,
    pub command: String,
    pub params: BTreeMap<String, String>,
}

impl Meta {
    pub fn new(command: &str, seed: u64, params: &[(&str, String)]) -> Self {
        Self {
            tool: TOOL.to_string(),
            generator: invmean::GENERATOR_ID.to_string(),
            seed,
            command: command.to_string(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        }
    }
}

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(u64),
    /// Undefined value: empty CSV field, JSON null.
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Float(x) => serde_json::json!(x),
            Cell::Int(n) => serde_json::json!(n),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

/// A rectangular result table plus its metadata.
pub struct Table {
    pub meta: Meta,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.meta.tool));
        out.push_str(&format!("# generator={}\n", self.meta.generator));
        out.push_str(&format!("# seed={}\n", self.meta.seed));
        out.push_str(&format!("# command={}\n", self.meta.command));
        for (key, value) in &self.meta.params {
            out.push_str(&format!("# {key}={value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut object = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    object.insert((*name).to_string(), cell.json());
                }
                serde_json::Value::Object(object)
            })
            .collect();
        let document = serde_json::json!({
            "meta": self.meta,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&document).expect("static structure");
        text.push('\n');
        text
    }

    /// Writes to `out` (or stdout when absent) in the requested format.
    pub fn emit(&self, out: Option<&std::path::Path>, json: bool) -> std::io::Result<()> {
        let body = if json {
            self.render_json()
        } else {
            self.render_csv()
        };
        match out {
            Some(path) => fs::write(path, body),
            None => std::io::stdout().write_all(body.as_bytes()),
        }
    }
}
