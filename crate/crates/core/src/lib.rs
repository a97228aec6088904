//! Failure prediction from spiky KPI telemetry.
//!
//! The pipeline turns raw per-device KPI time series into explained failure
//! predictions:
//!
//! 1. [`telemetry`] — threshold rules extract anomalous events from the
//!    series; the incident log labels each device over a 3-day horizon, and a
//!    seeded generator synthesizes full corpora for benchmarking.
//! 2. [`windowing`] — each device's event timestamps are clustered into
//!    contiguous time windows by exact 1-D k-means (dynamic programming),
//!    with the window count chosen by Bayesian information criterion.
//! 3. [`representation`] — every window becomes a vector: event-type
//!    embeddings mixed by scaled dot-product attention and weighted by
//!    frequency and a per-type temporal decay.
//! 4. [`network`] — an LSTM consumes the window sequence and predicts the
//!    failure probability; training backpropagates into every upstream
//!    parameter and a finite-difference checker guards the gradients.
//! 5. [`explain`] — each prediction is attributed back to individual
//!    anomalous events, window by window, with device-normalized salience
//!    scores.

pub mod error;
pub mod explain;
pub mod linalg;
pub mod model;
pub mod network;
pub mod representation;
pub mod telemetry;
pub mod vocab;
pub mod windowing;

pub use error::{Error, Result};
pub use explain::{explain_device, faithfulness_check, render_report, ExplanationReport};
pub use model::{EncoderKind, ModelConfig, ModelParams};
pub use network::{
    evaluate, gradient_check, predict, split_dataset, train, Metrics, Prediction, TrainConfig,
};
pub use representation::{featurize_device, DeviceSequence};
pub use telemetry::{
    default_rules, extract_events, generate_synthetic, label_devices, load_rules, AnomalousEvent,
    DeviceRecord, Incident, KpiSeries, ObservationWindow, SyntheticConfig, ThresholdRule,
};
pub use vocab::EventVocabulary;
pub use windowing::{build_windows, ckmeans_fixed_k, select_k_bic, EventWindow};

/// Vocabulary from a rule set: one event type per rule, in rule order.
pub fn vocabulary_from_rules(rules: &[ThresholdRule]) -> Result<EventVocabulary> {
    EventVocabulary::new(rules.iter().map(|r| r.kpi_name.clone()).collect())
}

/// Cluster and featurize every record against a vocabulary, yielding the
/// sequences consumed by training and evaluation. Window order follows the
/// records' (sorted) device order.
pub fn prepare_sequences(
    records: &[DeviceRecord],
    vocab: &EventVocabulary,
    k_max: usize,
) -> Result<Vec<DeviceSequence>> {
    records
        .iter()
        .map(|record| {
            let windows = windowing::build_windows_with_k_max(&record.events, k_max)?;
            featurize_device(record, &windows, vocab)
        })
        .collect()
}
