//! Output files named `<subcommand>[-<table>]_<m>_<n>[_eps<val>].<ext>`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub struct ArtifactSink {
    dir: PathBuf,
    format: Format,
    m: usize,
    n: usize,
    written: Vec<PathBuf>,
}

impl ArtifactSink {
    /// Creates the output directory if needed.
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&config.output_dir).map_err(|e| {
            CliError::Validation(format!(
                "output directory {} is not writable: {e}",
                config.output_dir.display()
            ))
        })?;
        Ok(ArtifactSink {
            dir: config.output_dir.clone(),
            format: config.format,
            m: config.m,
            n: config.n,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn name(&self, subcommand: &str, table: Option<&str>, eps: Option<f64>, ext: &str) -> String {
        let mut s = subcommand.to_string();
        if let Some(t) = table {
            s.push('-');
            s.push_str(t);
        }
        s.push_str(&format!("_{}_{}", self.m, self.n));
        if let Some(e) = eps {
            s.push_str(&format!("_eps{e}"));
        }
        s.push('.');
        s.push_str(ext);
        s
    }

    fn put(&mut self, file: String, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(file);
        fs::write(&path, bytes)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes a table produced by a CSV writer, converted to an array of records when
    /// the run asks for JSON.
    pub fn table<F>(
        &mut self,
        subcommand: &str,
        table: Option<&str>,
        eps: Option<f64>,
        fill: F,
    ) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> lawson_core::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let bytes = match self.format {
            Format::Csv => buf,
            Format::Json => {
                let mut text = serde_json::to_string_pretty(&csv_to_json(&buf)?).expect("json value");
                text.push('\n');
                text.into_bytes()
            }
        };
        let name = self.name(subcommand, table, eps, self.format.extension());
        self.put(name, &bytes)
    }

    /// Writes a JSON document regardless of the table format.
    pub fn json<S: Serialize>(
        &mut self,
        subcommand: &str,
        table: Option<&str>,
        value: &S,
    ) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json value");
        text.push('\n');
        let name = self.name(subcommand, table, None, "json");
        self.put(name, text.as_bytes())
    }

    /// The effective configuration, next to the artifacts.
    pub fn config(&mut self, subcommand: &str, config: &RunConfig) -> Result<PathBuf, CliError> {
        let name = self.name(subcommand, None, None, "toml");
        self.put(name, config.to_toml().as_bytes())
    }
}

/// Numeric cells become JSON numbers (`null` when not finite); others stay strings.
fn csv_to_json(bytes: &[u8]) -> Result<Value, CliError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Io(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Io(e.to_string()))?;
        let mut obj = Map::new();
        for (key, cell) in header.iter().zip(record.iter()) {
            let v = match cell.parse::<i64>() {
                Ok(i) => Value::from(i),
                Err(_) => match cell.parse::<f64>() {
                    Ok(x) => Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null),
                    Err(_) => Value::String(cell.to_string()),
                },
            };
            obj.insert(key.clone(), v);
        }
        rows.push(Value::Object(obj));
    }
    Ok(Value::Array(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells_convert() {
        let v = csv_to_json(b"s,z,component_id\n1.5e0,NaN,3\n").unwrap();
        assert_eq!(v, serde_json::json!([{"s": 1.5, "z": null, "component_id": 3}]));
    }

    #[test]
    fn names() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            output_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        let sink = ArtifactSink::new(&cfg).unwrap();
        assert_eq!(sink.name("surface", None, None, "csv"), "surface_4_4.csv");
        assert_eq!(
            sink.name("ansatz", Some("nodal"), Some(0.05), "csv"),
            "ansatz-nodal_4_4_eps0.05.csv"
        );
    }
}
