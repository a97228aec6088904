//! Per-device explanation reports.
//!
//! Each report attributes the prediction to individual anomalous events by
//! window, event type, frequency, and contribution. The printed contribution
//! is a device-normalized salience in [0, 1]; the raw signed coefficient of
//! each event type's embedding is kept alongside it so the encoding can be
//! reconstructed exactly from the report.

mod render;

pub use render::render_report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{EncoderKind, ModelParams};
use crate::network::{pad_sequence, PaddedSequence};
use crate::representation::{encode_attentive, WindowFeatures};
use crate::telemetry::DeviceRecord;
use crate::windowing::{build_windows_with_k_max, EventWindow};

/// One (window, unique event type) row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub window_id: usize,
    pub start_min: i64,
    pub duration_min: i64,
    /// Total events in the window (all types).
    pub event_count: usize,
    pub event_type: String,
    pub frequency: u64,
    /// Device-normalized salience in [0, 1].
    pub contribution: f64,
    /// Coefficient of this type's embedding in the window encoding.
    pub raw_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub device_id: String,
    pub probability: f64,
    /// Rows sorted by (window start, event type).
    pub rows: Vec<ReportRow>,
}

impl ExplanationReport {
    /// Fraction of rows whose printed contribution falls below 0.01; the
    /// weight distribution is typically sparse and this is worth surfacing.
    pub fn sparsity(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let small = self.rows.iter().filter(|r| r.contribution < 0.01).count();
        small as f64 / self.rows.len() as f64
    }
}

/// Explain one device: cluster its events, encode every window, and attribute
/// salience to each (window, event type) pair. A device with no events yields
/// a report with zero rows and the bias-only probability.
pub fn explain_device(
    params: &ModelParams,
    record: &DeviceRecord,
    sequence_length: usize,
    k_max: usize,
) -> Result<ExplanationReport> {
    if params.encoder != EncoderKind::Attentive {
        return Err(Error::validation(
            "explanations require the attentive encoder",
        ));
    }
    let windows = build_windows_with_k_max(&record.events, k_max)?;
    let encoded = encode_all(params, record, &windows)?;

    let mut rows = Vec::new();
    for (window, (features, coefficients)) in windows.iter().zip(&encoded) {
        for (n, &type_index) in features.type_indices.iter().enumerate() {
            rows.push(ReportRow {
                window_id: window.window_id,
                start_min: window.start_min,
                duration_min: window.duration_min,
                event_count: window.event_count(),
                event_type: params.vocabulary.name(type_index).to_string(),
                frequency: features.frequencies[n] as u64,
                contribution: 0.0,
                raw_coefficient: coefficients[n],
            });
        }
    }

    // salience = |c| * ||v|| normalized by the device's maximum.
    let saliences: Vec<f64> = rows
        .iter()
        .map(|row| {
            let e = params.vocabulary.index_of(&row.event_type).unwrap();
            let norm = dot(params.embeddings.vector(e), params.embeddings.vector(e)).sqrt();
            row.raw_coefficient.abs() * norm
        })
        .collect();
    let max_salience = saliences.iter().copied().fold(0.0f64, f64::max);
    for (row, salience) in rows.iter_mut().zip(saliences) {
        row.contribution = if max_salience > 0.0 {
            salience / max_salience
        } else {
            0.0
        };
    }
    rows.sort_by(|a, b| {
        (a.start_min, &a.event_type).cmp(&(b.start_min, &b.event_type))
    });

    let probability = probability_from_encodings(
        params,
        &windows_to_vectors(params, &encoded),
        sequence_length,
    );
    Ok(ExplanationReport {
        device_id: record.device_id.clone(),
        probability,
        rows,
    })
}

type EncodedWindow = (WindowFeatures, Vec<f64>);

fn encode_all(
    params: &ModelParams,
    record: &DeviceRecord,
    windows: &[EventWindow],
) -> Result<Vec<EncodedWindow>> {
    windows
        .iter()
        .map(|window| {
            let features =
                WindowFeatures::from_window(window, &params.vocabulary, record.horizon_end_min)?;
            let (_, cache) = encode_attentive(
                &features,
                &params.embeddings,
                &params.attention,
                &params.decay,
            );
            let coefficients = cache.coefficients(&features);
            Ok((features, coefficients))
        })
        .collect()
}

fn windows_to_vectors(params: &ModelParams, encoded: &[EncodedWindow]) -> Vec<Vec<f64>> {
    encoded
        .iter()
        .map(|(features, _)| {
            let (w, _) = encode_attentive(
                features,
                &params.embeddings,
                &params.attention,
                &params.decay,
            );
            w
        })
        .collect()
}

fn probability_from_encodings(
    params: &ModelParams,
    encodings: &[Vec<f64>],
    sequence_length: usize,
) -> f64 {
    let padded: PaddedSequence =
        pad_sequence(encodings, sequence_length.max(1), params.embeddings.dimension);
    params.lstm.forward(&padded).probability
}

/// Result of reconstructing the device's encodings from its report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Faithfulness {
    /// Max elementwise gap between encoder output and the coefficient sum.
    pub max_encoding_error: f64,
    /// |probability from reconstructed encodings - reported probability|.
    pub probability_error: f64,
}

/// Rebuild every window encoding as `sum_x c_x * v_{e_x}` from the report's
/// raw coefficients and re-run the classifier on the reconstruction.
pub fn faithfulness_check(
    params: &ModelParams,
    record: &DeviceRecord,
    report: &ExplanationReport,
    sequence_length: usize,
    k_max: usize,
) -> Result<Faithfulness> {
    let windows = build_windows_with_k_max(&record.events, k_max)?;
    let encoded = encode_all(params, record, &windows)?;
    let direct = windows_to_vectors(params, &encoded);

    let mut max_encoding_error = 0.0f64;
    let mut reconstructed = Vec::with_capacity(windows.len());
    for (window, direct_w) in windows.iter().zip(&direct) {
        let mut rebuilt = vec![0.0; params.embeddings.dimension];
        for row in report.rows.iter().filter(|r| r.window_id == window.window_id) {
            let e = params
                .vocabulary
                .index_of(&row.event_type)
                .ok_or_else(|| Error::validation("report type missing from vocabulary"))?;
            for (r, &vj) in rebuilt.iter_mut().zip(params.embeddings.vector(e)) {
                *r += row.raw_coefficient * vj;
            }
        }
        for (a, b) in rebuilt.iter().zip(direct_w) {
            max_encoding_error = max_encoding_error.max((a - b).abs());
        }
        reconstructed.push(rebuilt);
    }

    let probability = probability_from_encodings(params, &reconstructed, sequence_length);
    Ok(Faithfulness {
        max_encoding_error,
        probability_error: (probability - report.probability).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::telemetry::AnomalousEvent;
    use crate::vocab::EventVocabulary;

    fn model() -> ModelParams {
        let vocab =
            EventVocabulary::new(vec!["alpha".into(), "beta".into(), "gamma".into()]).unwrap();
        ModelParams::init(
            vocab,
            ModelConfig {
                embed_dim: 6,
                attn_dim: 6,
                hidden_size: 6,
                encoder: EncoderKind::Attentive,
            },
            42,
        )
        .unwrap()
    }

    fn record(events: Vec<AnomalousEvent>) -> DeviceRecord {
        DeviceRecord {
            device_id: "d1".into(),
            observation_start_min: 0,
            observation_end_min: 20_160,
            horizon_end_min: 24_480,
            events,
            label: true,
        }
    }

    fn event(ts: i64, event_type: &str) -> AnomalousEvent {
        AnomalousEvent {
            device_id: "d1".into(),
            event_type: event_type.into(),
            timestamp_min: ts,
            value: 9.0,
        }
    }

    #[test]
    fn no_events_yields_bias_only_report() {
        let params = model();
        let report = explain_device(&params, &record(vec![]), 15, 25).unwrap();
        assert!(report.rows.is_empty());
        let expected = crate::linalg::sigmoid(params.lstm.head_bias);
        assert!((report.probability - expected).abs() < 1e-15);
    }

    #[test]
    fn single_type_device_takes_all_the_salience() {
        let params = model();
        let report =
            explain_device(&params, &record(vec![event(20_000, "beta")]), 15, 25).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].contribution, 1.0);
        assert_eq!(report.rows[0].frequency, 1);
        assert_eq!(report.rows[0].event_type, "beta");
    }

    #[test]
    fn frequencies_sum_to_window_event_count() {
        let params = model();
        let events = vec![
            event(20_000, "alpha"),
            event(20_005, "beta"),
            event(20_005, "alpha"),
            event(20_010, "beta"),
            event(20_010, "gamma"),
        ];
        let report = explain_device(&params, &record(events), 15, 25).unwrap();
        let total: u64 = report.rows.iter().map(|r| r.frequency).sum();
        assert_eq!(total, 5);
        assert!(report.rows.iter().all(|r| r.event_count == 5));
    }

    #[test]
    fn contributions_are_normalized_to_unit_max() {
        let params = model();
        let events = vec![
            event(1_000, "alpha"),
            event(1_005, "beta"),
            event(19_000, "alpha"),
            event(19_005, "gamma"),
        ];
        let report = explain_device(&params, &record(events), 15, 25).unwrap();
        let max = report
            .rows
            .iter()
            .map(|r| r.contribution)
            .fold(0.0f64, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert!(report
            .rows
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.contribution)));
    }

    #[test]
    fn rows_sorted_by_window_start_then_type() {
        let params = model();
        let events = vec![
            event(19_000, "gamma"),
            event(19_000, "alpha"),
            event(1_000, "beta"),
        ];
        let report = explain_device(&params, &record(events), 15, 25).unwrap();
        let order: Vec<(i64, &str)> = report
            .rows
            .iter()
            .map(|r| (r.start_min, r.event_type.as_str()))
            .collect();
        assert_eq!(
            order,
            vec![(1_000, "beta"), (19_000, "alpha"), (19_000, "gamma")]
        );
    }

    #[test]
    fn reconstruction_is_faithful() {
        let params = model();
        let rec = record(vec![
            event(1_000, "alpha"),
            event(1_005, "alpha"),
            event(18_000, "beta"),
            event(18_010, "gamma"),
            event(20_000, "beta"),
        ]);
        let report = explain_device(&params, &rec, 15, 25).unwrap();
        let faithfulness = faithfulness_check(&params, &rec, &report, 15, 25).unwrap();
        assert!(faithfulness.max_encoding_error < 1e-10);
        assert!(faithfulness.probability_error < 1e-9);
    }
}
