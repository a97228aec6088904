//! Failure labels from the incident log.
//!
//! A device is labeled 1 iff an error-severity incident whose normalized text
//! contains the failure phrase falls inside `(t, t + T]`.

use std::collections::BTreeMap;

use super::{AnomalousEvent, DeviceRecord, Incident, ObservationWindow};
use crate::error::Result;

pub const DEFAULT_FAILURE_PHRASE: &str = "the device or drive is likely to fail soon";

/// Counters describing what the labeler saw but did not use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelDiagnostics {
    /// Matching failure incidents outside `(t, t + T]`.
    pub out_of_horizon: usize,
    /// Incidents with the wrong severity or non-matching text.
    pub non_qualifying: usize,
    /// Events outside the observation interval, dropped from records.
    pub out_of_window_events: usize,
}

#[derive(Debug, Clone)]
pub struct LabelOutcome {
    pub records: Vec<DeviceRecord>,
    pub diagnostics: LabelDiagnostics,
}

/// Labeling policy: which incidents count as failures.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub failure_phrase: String,
}

impl Default for Labeling {
    fn default() -> Self {
        Labeling {
            failure_phrase: DEFAULT_FAILURE_PHRASE.to_string(),
        }
    }
}

impl Labeling {
    pub fn with_phrase(phrase: impl Into<String>) -> Self {
        Labeling {
            failure_phrase: phrase.into().to_lowercase(),
        }
    }

    fn qualifies(&self, incident: &Incident) -> bool {
        incident.severity.trim().eq_ignore_ascii_case("error")
            && normalize(&incident.text).contains(&normalize(&self.failure_phrase))
    }
}

fn normalize(text: &str) -> String {
    text.trim().to_lowercase()
}

/// Build one record per device appearing in the events or the incident log.
/// Events are clipped to the observation interval; devices mentioned only in
/// incidents get a record with no events.
pub fn label_devices(
    events: Vec<AnomalousEvent>,
    incidents: &[Incident],
    window: ObservationWindow,
    labeling: &Labeling,
) -> Result<LabelOutcome> {
    let mut diagnostics = LabelDiagnostics::default();

    // BTreeMap keeps record order deterministic by device id.
    let mut per_device: BTreeMap<String, Vec<AnomalousEvent>> = BTreeMap::new();
    for event in events {
        if event.timestamp_min < window.start_min || event.timestamp_min > window.end_min {
            diagnostics.out_of_window_events += 1;
            continue;
        }
        per_device.entry(event.device_id.clone()).or_default().push(event);
    }

    let mut failed: BTreeMap<&str, bool> = BTreeMap::new();
    for incident in incidents {
        if !labeling.qualifies(incident) {
            diagnostics.non_qualifying += 1;
            continue;
        }
        let in_horizon = incident.timestamp_min > window.end_min
            && incident.timestamp_min <= window.horizon_end_min;
        if !in_horizon {
            diagnostics.out_of_horizon += 1;
            continue;
        }
        failed.insert(incident.device_id.as_str(), true);
    }

    // Devices that only appear in the incident log still get a record.
    for incident in incidents {
        per_device.entry(incident.device_id.clone()).or_default();
    }

    let records = per_device
        .into_iter()
        .map(|(device_id, mut events)| {
            events.sort_by_key(|e| e.timestamp_min);
            let label = failed.get(device_id.as_str()).copied().unwrap_or(false);
            DeviceRecord {
                device_id,
                observation_start_min: window.start_min,
                observation_end_min: window.end_min,
                horizon_end_min: window.horizon_end_min,
                events,
                label,
            }
        })
        .collect();

    Ok(LabelOutcome {
        records,
        diagnostics,
    })
}
