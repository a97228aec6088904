//! CSV interchange formats.
//!
//! All files are UTF-8, comma-delimited, `.` decimal separator, with a header
//! row:
//!
//! * KPI series:   `device_id,kpi_name,timestamp_min,value`
//! * Incident log: `device_id,timestamp_min,severity,text`
//! * Events:       `device_id,event_type,timestamp_min,value`

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{AnomalousEvent, Incident, KpiSeries};
use crate::error::{Error, Result};

fn format_error(e: &csv::Error) -> Error {
    let line = e.position().map(csv::Position::line).unwrap_or(0);
    Error::format(line, e.to_string())
}

fn field_error(record: &csv::StringRecord, msg: String) -> Error {
    let line = record.position().map(csv::Position::line).unwrap_or(0);
    Error::format(line, msg)
}

fn parse_i64(record: &csv::StringRecord, idx: usize, name: &str) -> Result<i64> {
    record[idx]
        .trim()
        .parse()
        .map_err(|_| field_error(record, format!("invalid {name} {:?}", &record[idx])))
}

fn parse_f64(record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    record[idx]
        .trim()
        .parse()
        .map_err(|_| field_error(record, format!("invalid {name} {:?}", &record[idx])))
}

fn expect_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers().map_err(|e| format_error(&e))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::format(
            1,
            format!("expected header {expected:?}, got {got:?}"),
        ));
    }
    Ok(())
}

/// Read KPI samples grouped into one series per `(device_id, kpi_name)`,
/// sorted by timestamp.
pub fn read_series_csv(input: impl Read) -> Result<Vec<KpiSeries>> {
    let mut reader = csv::Reader::from_reader(input);
    expect_header(&mut reader, &["device_id", "kpi_name", "timestamp_min", "value"])?;

    let mut grouped: BTreeMap<(String, String), Vec<(i64, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| format_error(&e))?;
        if record.len() != 4 {
            return Err(field_error(&record, format!("expected 4 fields, got {}", record.len())));
        }
        let key = (record[0].to_string(), record[1].to_string());
        let ts = parse_i64(&record, 2, "timestamp_min")?;
        let value = parse_f64(&record, 3, "value")?;
        grouped.entry(key).or_default().push((ts, value));
    }

    let mut series = Vec::with_capacity(grouped.len());
    for ((device_id, kpi_name), mut samples) in grouped {
        samples.sort_by_key(|&(ts, _)| ts);
        let s = KpiSeries {
            device_id,
            kpi_name,
            samples,
        };
        s.validate()?;
        series.push(s);
    }
    Ok(series)
}

pub fn write_series_csv(out: impl Write, series: &[KpiSeries]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["device_id", "kpi_name", "timestamp_min", "value"])
        .map_err(|e| format_error(&e))?;
    for s in series {
        for &(ts, value) in &s.samples {
            writer
                .write_record([
                    s.device_id.as_str(),
                    s.kpi_name.as_str(),
                    &ts.to_string(),
                    &value.to_string(),
                ])
                .map_err(|e| format_error(&e))?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn read_incidents_csv(input: impl Read) -> Result<Vec<Incident>> {
    let mut reader = csv::Reader::from_reader(input);
    expect_header(&mut reader, &["device_id", "timestamp_min", "severity", "text"])?;
    let mut incidents = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| format_error(&e))?;
        if record.len() != 4 {
            return Err(field_error(&record, format!("expected 4 fields, got {}", record.len())));
        }
        incidents.push(Incident {
            device_id: record[0].to_string(),
            timestamp_min: parse_i64(&record, 1, "timestamp_min")?,
            severity: record[2].to_string(),
            text: record[3].to_string(),
        });
    }
    Ok(incidents)
}

pub fn write_incidents_csv(out: impl Write, incidents: &[Incident]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["device_id", "timestamp_min", "severity", "text"])
        .map_err(|e| format_error(&e))?;
    for i in incidents {
        writer
            .write_record([
                i.device_id.as_str(),
                &i.timestamp_min.to_string(),
                i.severity.as_str(),
                i.text.as_str(),
            ])
            .map_err(|e| format_error(&e))?;
    }
    writer.flush()?;
    Ok(())
}

/// Read events. An empty file (header only, or zero bytes) is a valid empty
/// event set.
pub fn read_events_csv(input: impl Read) -> Result<Vec<AnomalousEvent>> {
    let mut buf = String::new();
    let mut input = input;
    input.read_to_string(&mut buf)?;
    if buf.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_reader(buf.as_bytes());
    expect_header(&mut reader, &["device_id", "event_type", "timestamp_min", "value"])?;
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| format_error(&e))?;
        if record.len() != 4 {
            return Err(field_error(&record, format!("expected 4 fields, got {}", record.len())));
        }
        events.push(AnomalousEvent {
            device_id: record[0].to_string(),
            event_type: record[1].to_string(),
            timestamp_min: parse_i64(&record, 2, "timestamp_min")?,
            value: parse_f64(&record, 3, "value")?,
        });
    }
    super::extract::sort_events(&mut events);
    Ok(events)
}

pub fn write_events_csv(out: impl Write, events: &[AnomalousEvent]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["device_id", "event_type", "timestamp_min", "value"])
        .map_err(|e| format_error(&e))?;
    for e in events {
        writer
            .write_record([
                e.device_id.as_str(),
                e.event_type.as_str(),
                &e.timestamp_min.to_string(),
                &e.value.to_string(),
            ])
            .map_err(|e| format_error(&e))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_preserves_samples() {
        let series = vec![KpiSeries {
            device_id: "d1".into(),
            kpi_name: "Read response time".into(),
            samples: vec![(0, 1.5), (5, 33.25), (10, 0.1)],
        }];
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &series).unwrap();
        let back = read_series_csv(buf.as_slice()).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn incident_text_with_commas_survives_round_trip() {
        let incidents = vec![Incident {
            device_id: "d1".into(),
            timestamp_min: 42,
            severity: "error".into(),
            text: "alert: the device or drive is likely to fail soon, code 7".into(),
        }];
        let mut buf = Vec::new();
        write_incidents_csv(&mut buf, &incidents).unwrap();
        let back = read_incidents_csv(buf.as_slice()).unwrap();
        assert_eq!(back, incidents);
    }

    #[test]
    fn empty_events_file_reads_as_empty() {
        assert!(read_events_csv([].as_slice()).unwrap().is_empty());
        assert!(
            read_events_csv("device_id,event_type,timestamp_min,value\n".as_bytes())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn wrong_header_is_a_format_error() {
        let err = read_events_csv("a,b,c,d\nx,y,1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn bad_value_reports_its_line() {
        let text = "device_id,event_type,timestamp_min,value\nd1,t,5,ok\n";
        let err = read_events_csv(text.as_bytes()).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
