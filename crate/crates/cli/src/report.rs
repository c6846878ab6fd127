//! Report bodies and the provenance header written in front of them.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Outcome of one experiment: a claim verdict, summary numbers and a table.
#[derive(Debug, Clone)]
pub struct Report {
    pub claim_id: String,
    pub pass: bool,
    /// Discretization actually used.
    pub grid: Value,
    /// Measured-vs-reference numbers; must be a JSON object.
    pub summary: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(claim_id: &str, columns: &[&str]) -> Self {
        Self {
            claim_id: claim_id.into(),
            pass: true,
            grid: Value::Null,
            summary: json!({}),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Run identity: everything in the header except the timestamp is a function
/// of the resolved parameters.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub parameters: Value,
    pub grid: Value,
    pub generated_unix: u64,
}

impl Provenance {
    pub fn new(command: &'static str, parameters: Value, format: Format, grid: Value) -> Self {
        // serde_json maps are ordered, so the canonical text is stable
        let canonical = json!({ "command": command, "parameters": parameters, "format": format }).to_string();
        let digest = Sha256::digest(canonical.as_bytes());
        let config_hash = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        let generated_unix =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self {
            tool: "coulomb-spectral",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash,
            parameters,
            grid,
            generated_unix,
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn render(provenance: &Provenance, report: &Report, format: Format) -> String {
    match format {
        Format::Csv => render_csv(provenance, report),
        Format::Json => render_json(provenance, report),
    }
}

fn render_csv(p: &Provenance, r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# tool: {} {}", p.tool, p.version);
    let _ = writeln!(s, "# command: {}", p.command);
    let _ = writeln!(s, "# config_hash: {}", p.config_hash);
    let _ = writeln!(s, "# parameters: {}", p.parameters);
    let _ = writeln!(s, "# grid: {}", p.grid);
    let _ = writeln!(s, "# generated_unix: {}", p.generated_unix);
    let _ = writeln!(s, "# claim_id: {}", r.claim_id);
    let _ = writeln!(s, "# pass: {}", r.pass);
    let _ = writeln!(s, "# summary: {}", r.summary);
    s.push_str("claim_id");
    for c in &r.columns {
        let _ = write!(s, ",{c}");
    }
    s.push('\n');
    for row in &r.rows {
        s.push_str(&r.claim_id);
        for v in row {
            let _ = write!(s, ",{}", cell(v));
        }
        s.push('\n');
    }
    s
}

fn render_json(p: &Provenance, r: &Report) -> String {
    let rows: Vec<Value> = r
        .rows
        .iter()
        .map(|row| Value::Object(r.columns.iter().cloned().zip(row.iter().cloned()).collect::<Map<_, _>>()))
        .collect();
    let body = json!({
        "provenance": p,
        "claim_id": r.claim_id,
        "pass": r.pass,
        "summary": r.summary,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&body).expect("reports are plain JSON");
    s.push('\n');
    s
}
