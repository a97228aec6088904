//! KPI telemetry ingestion: threshold rules, anomalous-event extraction,
//! failure labeling, and the seeded synthetic corpus generator.
//!
//! Timestamps are integer minutes since an arbitrary epoch. Sampling is
//! nominally every 5 minutes but gaps are tolerated everywhere.

mod extract;
mod io;
mod labels;
mod rules;
mod synth;

pub use extract::{extract_events, Extraction};
pub use io::{
    read_events_csv, read_incidents_csv, read_series_csv, write_events_csv, write_incidents_csv,
    write_series_csv,
};
pub use labels::{label_devices, LabelDiagnostics, LabelOutcome, Labeling};
pub use rules::{default_rules, load_rules, parse_rules, rules_to_csv, ThresholdRule};
pub use synth::{generate_synthetic, PlantedSignature, SignatureTruth, SyntheticConfig, SyntheticDataset};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: i64 = 1440;

/// One KPI time series for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiSeries {
    pub device_id: String,
    pub kpi_name: String,
    /// `(timestamp_min, value)` pairs with strictly increasing timestamps.
    pub samples: Vec<(i64, f64)>,
}

impl KpiSeries {
    pub fn validate(&self) -> Result<()> {
        for pair in self.samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::validation(format!(
                    "series {}/{} has non-increasing timestamps ({} then {})",
                    self.device_id, self.kpi_name, pair[0].0, pair[1].0
                )));
            }
        }
        Ok(())
    }
}

/// A single threshold exceedance. `event_type` is the KPI name of the rule
/// that fired, so the event vocabulary equals the rule set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalousEvent {
    pub device_id: String,
    pub event_type: String,
    pub timestamp_min: i64,
    pub value: f64,
}

/// An entry from the incident log used to build labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incident {
    pub device_id: String,
    pub timestamp_min: i64,
    pub severity: String,
    pub text: String,
}

/// The observation interval `[start, end]` (with `end = t`) and prediction
/// horizon `(t, t + T]` shared by every device in a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub start_min: i64,
    pub end_min: i64,
    pub horizon_end_min: i64,
}

impl ObservationWindow {
    pub fn from_days(start_min: i64, observation_days: u32, horizon_days: u32) -> Result<Self> {
        if observation_days == 0 || horizon_days == 0 {
            return Err(Error::validation(
                "observation and horizon durations must be positive",
            ));
        }
        let end_min = start_min + i64::from(observation_days) * MINUTES_PER_DAY;
        Ok(ObservationWindow {
            start_min,
            end_min,
            horizon_end_min: end_min + i64::from(horizon_days) * MINUTES_PER_DAY,
        })
    }

    /// Horizon length T in minutes.
    pub fn horizon_minutes(&self) -> i64 {
        self.horizon_end_min - self.end_min
    }
}

/// One device's observed events plus its failure label over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecord {
    pub device_id: String,
    pub observation_start_min: i64,
    /// End of the observation interval (`t`).
    pub observation_end_min: i64,
    /// End of the prediction horizon (`t + T`).
    pub horizon_end_min: i64,
    /// Events sorted by timestamp, all within the observation interval.
    pub events: Vec<AnomalousEvent>,
    /// 1 iff a qualifying failure incident occurred in `(t, t + T]`.
    pub label: bool,
}
