//! CSV and JSON rendering of result sets.

use std::path::Path;

use super::experiment::ResultSet;
use super::HarnessError;

pub const CSV_HEADER: &str = "sweep_var,value,algorithm,ece,revenue,cost,stp_ref,esr_ref,seed,config_hash";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format, HarnessError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(HarnessError::Usage(format!("unknown output format `{s}`"))),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render(set: &ResultSet, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in &set.rows {
                let fields = [
                    r.sweep_var.clone(),
                    cell(r.value),
                    r.algorithm.clone(),
                    cell(r.ece),
                    cell(r.revenue),
                    cell(r.cost),
                    cell(r.stp_ref),
                    cell(r.esr_ref),
                    r.seed.to_string(),
                    r.config_hash.clone(),
                ];
                s.push_str(&fields.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&set.rows).expect("rows serialize");
            s.push('\n');
            s
        }
    }
}

pub fn emit_results(set: &ResultSet, path: &Path, format: Format) -> Result<(), HarnessError> {
    std::fs::write(path, render(set, format)).map_err(|e| HarnessError::Io(format!("cannot write {}: {e}", path.display())))
}
