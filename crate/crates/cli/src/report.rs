use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;

/// Identifier of the JSON schema in `schemas/` that envelopes conform to.
pub const SCHEMA_ID: &str = "report-envelope.v1";

#[derive(Debug, Serialize)]
pub struct ReportEnvelope {
    pub schema: &'static str,
    pub command: String,
    pub parameters: Map<String, Value>,
    pub seed: u64,
    pub results: Value,
    pub version: &'static str,
}

/// The flat table emitted for `--format csv`.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|s| s.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct Report {
    pub envelope: ReportEnvelope,
    pub table: Table,
}

pub fn render(report: &Report, format: Format) -> Result<String, Box<dyn std::error::Error>> {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&report.envelope)?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(&report.table.header)?;
            for row in &report.table.rows {
                writer.write_record(row)?;
            }
            Ok(String::from_utf8(writer.into_inner()?)?)
        }
    }
}
