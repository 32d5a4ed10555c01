use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Top-level key that marks a JSON file as a run manifest.
pub const MANIFEST_MARKER: &str = "epinet_version";
pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One long-format record: `mode,key1,val1,key2,val2,quantity,value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub mode: String,
    pub key1: Option<(&'static str, f64)>,
    pub key2: Option<(&'static str, f64)>,
    pub quantity: String,
    pub value: f64,
}

impl Row {
    pub fn new(mode: impl Into<String>, quantity: impl Into<String>, value: f64) -> Self {
        Row { mode: mode.into(), key1: None, key2: None, quantity: quantity.into(), value }
    }

    pub fn key1(mut self, name: &'static str, value: f64) -> Self {
        self.key1 = Some((name, value));
        self
    }

    pub fn key2(mut self, name: &'static str, value: f64) -> Self {
        self.key2 = Some((name, value));
        self
    }
}

/// Wide table written to its own CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Human-readable lines printed to stdout.
    pub summary: Vec<String>,
    /// Largest residual per solver, checked against the run tolerance.
    pub residuals: BTreeMap<String, f64>,
    pub seeds: Vec<u64>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn residual(&mut self, name: &str, value: f64) {
        let slot = self.residuals.entry(name.to_string()).or_insert(0.0);
        *slot = slot.max(value);
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.summary.extend(other.summary);
        for (name, value) in other.residuals {
            self.residual(&name, value);
        }
        self.seeds.extend(other.seeds);
        self.tables.extend(other.tables);
    }

    /// Renames the mode column, e.g. to tag the panels of a preset.
    pub fn relabel(mut self, mode: &str) -> Self {
        for row in &mut self.rows {
            row.mode = mode.to_string();
        }
        self
    }
}

/// Shortest representation that parses back to the same value.
pub fn number(v: f64) -> String {
    format!("{v:?}")
}

pub fn results_csv(rows: &[Row]) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::config(format!("csv encoding failed: {e}"));
    writer.write_record(["mode", "key1", "val1", "key2", "val2", "quantity", "value"]).map_err(csv_err)?;
    let key = |k: Option<(&str, f64)>| match k {
        Some((name, v)) => (name.to_string(), number(v)),
        None => (String::new(), String::new()),
    };
    for row in rows {
        let (k1, v1) = key(row.key1);
        let (k2, v2) = key(row.key2);
        writer
            .write_record([row.mode.as_str(), &k1, &v1, &k2, &v2, &row.quantity, &number(row.value)])
            .map_err(csv_err)?;
    }
    writer.into_inner().map_err(|e| CliError::config(format!("csv encoding failed: {e}")))
}

fn table_csv(table: &Table) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::config(format!("csv encoding failed: {e}"));
    writer.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        writer.write_record(row.iter().map(|&v| number(v))).map_err(csv_err)?;
    }
    writer.into_inner().map_err(|e| CliError::config(format!("csv encoding failed: {e}")))
}

#[derive(Serialize)]
struct Manifest<'a> {
    epinet_version: &'a str,
    command: &'a str,
    config: &'a RunConfig,
    seeds: &'a [u64],
    residuals: &'a BTreeMap<String, f64>,
    outputs: Vec<&'a str>,
    rows: usize,
}

pub fn manifest_json(report: &Report, command: &str, config: &RunConfig) -> CliResult<String> {
    let mut outputs = vec![RESULTS_FILE];
    outputs.extend(report.tables.iter().map(|t| t.file.as_str()));
    let manifest = Manifest {
        epinet_version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        seeds: &report.seeds,
        residuals: &report.residuals,
        outputs,
        rows: report.rows.len(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::config(format!("manifest encoding failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn write_outputs(dir: &Path, report: &Report, command: &str, config: &RunConfig) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    };
    write(RESULTS_FILE, &results_csv(&report.rows)?)?;
    for table in &report.tables {
        write(&table.file, &table_csv(table)?)?;
    }
    write(MANIFEST_FILE, manifest_json(report, command, config)?.as_bytes())?;
    log::info!("wrote {} rows to {}", report.rows.len(), dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_keys_stay_blank() {
        let rows = vec![Row::new("ce", "a_ce", 4.5), Row::new("steady", "theta", 0.0).key1("a", 3.0)];
        let text = String::from_utf8(results_csv(&rows).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mode,key1,val1,key2,val2,quantity,value");
        assert_eq!(lines[1], "ce,,,,,a_ce,4.5");
        assert_eq!(lines[2], "steady,a,3.0,,,theta,0.0");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1e-17, 4.943605281, 1.0 / 3.0, 1e300] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
    }
}
