//! Anomalous-event extraction: strict threshold exceedance per sample.

use std::collections::HashMap;

use super::{AnomalousEvent, KpiSeries, ThresholdRule};
use crate::error::Result;

/// Result of an extraction pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Events sorted by `(device_id, timestamp, event_type)`.
    pub events: Vec<AnomalousEvent>,
    /// Series whose KPI had no matching rule (skipped, not an error:
    /// deployments collect more KPIs than they alert on).
    pub unmatched_series: usize,
}

/// Apply the rule set to every series. A sample produces an event iff its
/// value is strictly greater than the rule threshold; boundary equality
/// produces nothing.
pub fn extract_events(series: &[KpiSeries], rules: &[ThresholdRule]) -> Result<Extraction> {
    let thresholds: HashMap<&str, f64> = rules
        .iter()
        .map(|r| (r.kpi_name.as_str(), r.threshold))
        .collect();

    let mut events = Vec::new();
    let mut unmatched = 0usize;
    for s in series {
        s.validate()?;
        let Some(&threshold) = thresholds.get(s.kpi_name.as_str()) else {
            unmatched += 1;
            continue;
        };
        for &(timestamp_min, value) in &s.samples {
            if value > threshold {
                events.push(AnomalousEvent {
                    device_id: s.device_id.clone(),
                    event_type: s.kpi_name.clone(),
                    timestamp_min,
                    value,
                });
            }
        }
    }
    sort_events(&mut events);
    Ok(Extraction {
        events,
        unmatched_series: unmatched,
    })
}

/// Canonical total order so extraction output is independent of input order.
pub(crate) fn sort_events(events: &mut [AnomalousEvent]) {
    events.sort_by(|a, b| {
        (&a.device_id, a.timestamp_min, &a.event_type)
            .cmp(&(&b.device_id, b.timestamp_min, &b.event_type))
            .then(a.value.total_cmp(&b.value))
    });
}
