//! Report rendering: machine CSV, aligned text tables, and JSON.

use crate::error::{Error, Result};

use super::ExplanationReport;

/// Render reports to the requested format: `"csv"`, `"table"`, or `"json"`.
/// Rendering is deterministic; the same report always yields identical bytes.
pub fn render_report(reports: &[ExplanationReport], format: &str) -> Result<String> {
    match format {
        "csv" => Ok(render_csv(reports)),
        "table" => Ok(render_table(reports)),
        "json" => {
            let mut text = serde_json::to_string_pretty(reports)?;
            text.push('\n');
            Ok(text)
        }
        other => Err(Error::validation(format!("unknown report format {other:?}"))),
    }
}

fn render_csv(reports: &[ExplanationReport]) -> String {
    let mut out = String::from(
        "device_id,window_id,start_min,duration_min,event_count,event_type,frequency,contribution,raw_coefficient\n",
    );
    for report in reports {
        for row in &report.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                escape_csv(&report.device_id),
                row.window_id,
                row.start_min,
                row.duration_min,
                row.event_count,
                escape_csv(&row.event_type),
                row.frequency,
                row.contribution,
                row.raw_coefficient,
            ));
        }
    }
    out
}

fn escape_csv(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

const TABLE_HEADER: [&str; 7] = [
    "Window",
    "Start timestamp",
    "Duration",
    "# Events",
    "Event",
    "Frequency",
    "Contribution",
];

fn render_table(reports: &[ExplanationReport]) -> String {
    let mut out = String::new();
    for report in reports {
        out.push_str(&format!(
            "device {}  p(fail) = {:.3}\n",
            report.device_id, report.probability
        ));
        let rows: Vec<[String; 7]> = report
            .rows
            .iter()
            .map(|row| {
                [
                    row.window_id.to_string(),
                    format_day_time(row.start_min),
                    format!("{} min", row.duration_min),
                    row.event_count.to_string(),
                    row.event_type.clone(),
                    row.frequency.to_string(),
                    format_contribution(row.contribution),
                ]
            })
            .collect();

        let mut widths: Vec<usize> = TABLE_HEADER.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut line = |cells: &[String]| {
            let mut text = String::new();
            for (i, (cell, &w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    text.push_str("  ");
                }
                text.push_str(&format!("{cell:<w$}"));
            }
            out.push_str(text.trim_end());
            out.push('\n');
        };
        line(&TABLE_HEADER.map(String::from));
        for row in &rows {
            line(row.as_slice());
        }
        out.push('\n');
    }
    out
}

/// Timestamps print as day-of-observation plus wall time, day 1 starting at
/// minute zero.
fn format_day_time(minute: i64) -> String {
    let day = minute.div_euclid(1440) + 1;
    let rem = minute.rem_euclid(1440);
    format!("Day {} {}:{:02}", day, rem / 60, rem % 60)
}

/// Three decimals, with small weights collapsed to "<0.01".
fn format_contribution(value: f64) -> String {
    if value < 0.01 {
        "<0.01".to_string()
    } else {
        format!("{value:.3}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::ReportRow;

    fn sample_report() -> ExplanationReport {
        ExplanationReport {
            device_id: "dev0001".into(),
            probability: 0.87,
            rows: vec![
                ReportRow {
                    window_id: 1,
                    start_min: 1378, // Day 1 22:58
                    duration_min: 115,
                    event_count: 11,
                    event_type: "Read response time".into(),
                    frequency: 1,
                    contribution: 0.004,
                    raw_coefficient: 0.0021,
                },
                ReportRow {
                    window_id: 2,
                    start_min: 20_159,
                    duration_min: 15,
                    event_count: 8,
                    event_type: "Write response time".into(),
                    frequency: 3,
                    contribution: 0.63,
                    raw_coefficient: 0.41,
                },
            ],
        }
    }

    #[test]
    fn empty_report_renders_header_only_csv() {
        let report = ExplanationReport {
            device_id: "d".into(),
            probability: 0.5,
            rows: vec![],
        };
        let csv = render_report(&[report], "csv").unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("device_id,window_id,start_min,duration_min,event_count,"));
    }

    #[test]
    fn table_has_the_seven_columns_in_order() {
        let text = render_report(&[sample_report()], "table").unwrap();
        let header = text.lines().nth(1).unwrap();
        let mut last = 0;
        for column in TABLE_HEADER {
            let at = header.find(column).unwrap_or_else(|| panic!("missing column {column}"));
            assert!(at >= last, "column {column} out of order");
            last = at;
        }
    }

    #[test]
    fn small_contributions_render_as_less_than_marker() {
        let text = render_report(&[sample_report()], "table").unwrap();
        assert!(text.contains("<0.01"));
        assert!(text.contains("0.630"));
        assert!(text.contains("Day 1 22:58"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let reports = [sample_report()];
        for format in ["csv", "table", "json"] {
            let a = render_report(&reports, format).unwrap();
            let b = render_report(&reports, format).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unknown_format_is_a_validation_error() {
        assert!(render_report(&[], "yaml").is_err());
    }

    #[test]
    fn csv_keeps_full_precision_coefficients() {
        let mut report = sample_report();
        report.rows[0].raw_coefficient = 0.123456789012345678;
        let csv = render_report(&[report.clone()], "csv").unwrap();
        let line = csv.lines().nth(1).unwrap();
        let raw: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(raw, report.rows[0].raw_coefficient);
    }
}
