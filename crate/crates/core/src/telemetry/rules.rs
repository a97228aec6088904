//! Threshold rules: one per KPI, direction fixed to "value exceeds threshold".

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A per-KPI exceedance rule. A sample is anomalous iff `value > threshold`
/// (strictly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub kpi_name: String,
    pub threshold: f64,
    pub unit: String,
}

impl ThresholdRule {
    pub fn new(kpi_name: impl Into<String>, threshold: f64, unit: impl Into<String>) -> Self {
        ThresholdRule {
            kpi_name: kpi_name.into(),
            threshold,
            unit: unit.into(),
        }
    }
}

/// The built-in 15-rule set used when no rules file is supplied.
pub fn default_rules() -> Vec<ThresholdRule> {
    vec![
        ThresholdRule::new("Disk utilization", 50.0, "%"),
        ThresholdRule::new("Invalid transmission word rate", 0.7, "cnt/s"),
        ThresholdRule::new("Peak backend write response time", 10.0, "s"),
        ThresholdRule::new("Port receive bandwidth", 75.0, "%"),
        ThresholdRule::new("Port send bandwidth", 75.0, "%"),
        ThresholdRule::new("Port send delay I/O", 20.0, "%"),
        ThresholdRule::new("Port to local node send queue time", 0.5, "ms/op"),
        ThresholdRule::new("Port to local node send response time", 0.75, "ms/op"),
        ThresholdRule::new("Read response time", 30.0, "ms/op"),
        ThresholdRule::new("Read transfer size", 64.0, "KB/op"),
        ThresholdRule::new("System CPU core utilization", 70.0, "%"),
        ThresholdRule::new("Write-cache delay", 3.0, "%"),
        ThresholdRule::new("Write response time", 30.0, "ms/op"),
        ThresholdRule::new("Write transfer size", 256.0, "KB/op"),
        ThresholdRule::new("Zero buffer credit", 20.0, "%"),
    ]
}

/// Load rules from a `kpi_name,threshold,unit` CSV. A missing file falls back
/// to [`default_rules`]; an existing but empty or malformed file is an error.
pub fn load_rules(path: &Path) -> Result<Vec<ThresholdRule>> {
    if !path.exists() {
        return Ok(default_rules());
    }
    let text = std::fs::read_to_string(path)?;
    parse_rules(&text)
}

/// Parse rule CSV text. The header row is optional; fields are trimmed.
pub fn parse_rules(text: &str) -> Result<Vec<ThresholdRule>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut rules = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let line = (i + 1) as u64;
        let record = record.map_err(|e| Error::format(line, e.to_string()))?;
        if i == 0 && is_rules_header(&record) {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::format(
                line,
                format!("expected 3 fields (kpi_name,threshold,unit), got {}", record.len()),
            ));
        }
        let kpi_name = record[0].to_string();
        let threshold: f64 = record[1]
            .parse()
            .map_err(|_| Error::format(line, format!("invalid threshold {:?}", &record[1])))?;
        if !threshold.is_finite() {
            return Err(Error::format(line, "threshold must be finite".to_string()));
        }
        if kpi_name.is_empty() {
            return Err(Error::format(line, "empty kpi_name".to_string()));
        }
        if !seen.insert(kpi_name.clone()) {
            return Err(Error::validation(format!("duplicate kpi_name {kpi_name:?}")));
        }
        rules.push(ThresholdRule::new(kpi_name, threshold, record[2].to_string()));
    }
    if rules.is_empty() {
        return Err(Error::validation("rules file contains no rules"));
    }
    Ok(rules)
}

fn is_rules_header(record: &csv::StringRecord) -> bool {
    record.len() == 3
        && record[0].eq_ignore_ascii_case("kpi_name")
        && record[1].eq_ignore_ascii_case("threshold")
        && record[2].eq_ignore_ascii_case("unit")
}

/// Serialize rules back to the CSV interchange format (with header).
pub fn rules_to_csv(rules: &[ThresholdRule]) -> String {
    let mut out = String::from("kpi_name,threshold,unit\n");
    for r in rules {
        out.push_str(&format!("{},{},{}\n", r.kpi_name, r.threshold, r.unit));
    }
    out
}
