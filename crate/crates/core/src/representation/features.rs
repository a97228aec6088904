//! Numeric window features: unique event types, frequencies, and recency.

use crate::error::{Error, Result};
use crate::telemetry::DeviceRecord;
use crate::vocab::EventVocabulary;
use crate::windowing::EventWindow;

use super::{window_delta_min, MINUTES_PER_DAY_F};

/// A window reduced to what the encoders need: the unique event types present
/// (ascending), how often each occurred, and how far the window's newest
/// event sits from the end of the prediction horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatures {
    /// Vocabulary indices of the unique event types, strictly ascending.
    pub type_indices: Vec<usize>,
    /// `frequencies[i]` is the occurrence count of `type_indices[i]`.
    pub frequencies: Vec<f64>,
    /// `delta = t + T - tau` in minutes.
    pub delta_min: i64,
}

impl WindowFeatures {
    pub fn from_window(
        window: &EventWindow,
        vocab: &EventVocabulary,
        horizon_end_min: i64,
    ) -> Result<Self> {
        if window.events.is_empty() {
            return Err(Error::validation("cannot featurize an empty window"));
        }
        let delta_min = window_delta_min(window.tau_min, horizon_end_min)?;
        let mut counts = vec![0.0f64; vocab.len()];
        for event in &window.events {
            let idx = vocab.index_of(&event.event_type).ok_or_else(|| {
                Error::validation(format!(
                    "event type {:?} is not in the vocabulary",
                    event.event_type
                ))
            })?;
            counts[idx] += 1.0;
        }
        let mut type_indices = Vec::new();
        let mut frequencies = Vec::new();
        for (idx, &count) in counts.iter().enumerate() {
            if count > 0.0 {
                type_indices.push(idx);
                frequencies.push(count);
            }
        }
        Ok(WindowFeatures {
            type_indices,
            frequencies,
            delta_min,
        })
    }

    /// Number of unique event types present.
    pub fn unique_types(&self) -> usize {
        self.type_indices.len()
    }

    pub fn delta_days(&self) -> f64 {
        self.delta_min as f64 / MINUTES_PER_DAY_F
    }

    pub fn total_events(&self) -> f64 {
        self.frequencies.iter().sum()
    }
}

/// One device ready for the sequence model: featurized windows in
/// chronological order plus the label.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSequence {
    pub device_id: String,
    pub windows: Vec<WindowFeatures>,
    pub label: bool,
}

/// Featurize a device's clustered windows against the model vocabulary.
pub fn featurize_device(
    record: &DeviceRecord,
    windows: &[EventWindow],
    vocab: &EventVocabulary,
) -> Result<DeviceSequence> {
    let features = windows
        .iter()
        .map(|w| WindowFeatures::from_window(w, vocab, record.horizon_end_min))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviceSequence {
        device_id: record.device_id.clone(),
        windows: features,
        label: record.label,
    })
}
