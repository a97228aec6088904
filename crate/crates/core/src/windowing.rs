//! Event-window detection.
//!
//! Clusters each device's anomalous-event timestamps into contiguous time
//! windows with an exact 1-D k-means dynamic program, and selects the number
//! of windows by Bayesian information criterion.

mod bic;
mod ckmeans;

pub use bic::{select_k_bic, select_k_bic_with, BicPoint, KSelection, DEFAULT_K_MAX, DEFAULT_VARIANCE_FLOOR};
pub use ckmeans::{ckmeans_fixed_k, ClusteringResult};

use std::io::Write;

use crate::error::{Error, Result};
use crate::telemetry::AnomalousEvent;

/// A contiguous cluster of one device's anomalous events.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    /// 1-based chronological index within the device.
    pub window_id: usize,
    /// The window's events (an unordered multiset; stored sorted by time).
    pub events: Vec<AnomalousEvent>,
    pub start_min: i64,
    pub duration_min: i64,
    /// Window reference time: the newest event timestamp, so
    /// `delta = t + T - tau` measures the recency of the freshest evidence.
    pub tau_min: i64,
}

impl EventWindow {
    pub fn event_count(&self) -> usize {
        self.events.len()
    }
}

/// Cluster a single device's events into chronologically ordered windows.
/// An empty input is valid (a device without anomalies has no windows).
pub fn build_windows(events: &[AnomalousEvent]) -> Result<Vec<EventWindow>> {
    build_windows_with_k_max(events, DEFAULT_K_MAX)
}

pub fn build_windows_with_k_max(
    events: &[AnomalousEvent],
    k_max: usize,
) -> Result<Vec<EventWindow>> {
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let device = &events[0].device_id;
    if events.iter().any(|e| &e.device_id != device) {
        return Err(Error::validation(
            "build_windows expects events from a single device",
        ));
    }
    let mut events: Vec<AnomalousEvent> = events.to_vec();
    events.sort_by(|a, b| {
        a.timestamp_min
            .cmp(&b.timestamp_min)
            .then_with(|| a.event_type.cmp(&b.event_type))
            .then(a.value.total_cmp(&b.value))
    });

    let timestamps: Vec<f64> = events.iter().map(|e| e.timestamp_min as f64).collect();
    let selection = select_k_bic(&timestamps, k_max)?;

    // Events sharing a timestamp must share a window even if the DP split a
    // run of equal values on a cost tie; normalize to the first occurrence.
    let mut assignment_of = selection.best.assignments.clone();
    for i in 1..timestamps.len() {
        if timestamps[i] == timestamps[i - 1] {
            assignment_of[i] = assignment_of[i - 1];
        }
    }

    let mut windows: Vec<EventWindow> = Vec::new();
    let mut current: Vec<AnomalousEvent> = Vec::new();
    let mut current_cluster = assignment_of[0];
    for (event, &cluster) in events.into_iter().zip(&assignment_of) {
        if cluster != current_cluster && !current.is_empty() {
            windows.push(materialize(windows.len() + 1, std::mem::take(&mut current)));
        }
        current_cluster = cluster;
        current.push(event);
    }
    if !current.is_empty() {
        windows.push(materialize(windows.len() + 1, current));
    }
    Ok(windows)
}

fn materialize(window_id: usize, events: Vec<AnomalousEvent>) -> EventWindow {
    let start_min = events.first().map(|e| e.timestamp_min).unwrap();
    let tau_min = events.last().map(|e| e.timestamp_min).unwrap();
    EventWindow {
        window_id,
        events,
        start_min,
        duration_min: tau_min - start_min,
        tau_min,
    }
}

/// Write the `device_id,window_id,start_min,duration_min,event_count` CSV.
pub fn write_windows_csv(
    out: impl Write,
    device_windows: &[(String, Vec<EventWindow>)],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["device_id", "window_id", "start_min", "duration_min", "event_count"])
        .map_err(|e| Error::format(0, e.to_string()))?;
    for (device_id, windows) in device_windows {
        for w in windows {
            writer
                .write_record([
                    device_id.as_str(),
                    &w.window_id.to_string(),
                    &w.start_min.to_string(),
                    &w.duration_min.to_string(),
                    &w.event_count().to_string(),
                ])
                .map_err(|e| Error::format(0, e.to_string()))?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(ts: i64, event_type: &str) -> AnomalousEvent {
        AnomalousEvent {
            device_id: "d1".into(),
            event_type: event_type.into(),
            timestamp_min: ts,
            value: 99.0,
        }
    }

    #[test]
    fn no_events_is_a_valid_empty_result() {
        assert!(build_windows(&[]).unwrap().is_empty());
    }

    #[test]
    fn single_event_makes_one_degenerate_window() {
        let windows = build_windows(&[event(120, "a")]).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].window_id, 1);
        assert_eq!(windows[0].start_min, 120);
        assert_eq!(windows[0].duration_min, 0);
        assert_eq!(windows[0].tau_min, 120);
    }

    #[test]
    fn two_bursts_split_into_two_disjoint_windows() {
        let mut events = Vec::new();
        for ts in [0, 5, 10, 15] {
            events.push(event(ts, "a"));
        }
        for ts in [10000, 10005, 10010] {
            events.push(event(ts, "b"));
        }
        let windows = build_windows(&events).unwrap();
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].start_min, 0);
        assert_eq!(windows[0].tau_min, 15);
        assert_eq!(windows[1].start_min, 10000);
        assert_eq!(windows[1].event_count(), 3);
        assert!(windows[0].tau_min < windows[1].start_min);
    }

    #[test]
    fn shared_timestamps_stay_in_one_window() {
        // Two KPIs firing at the same sample must never straddle windows.
        let events = vec![event(100, "a"), event(100, "b"), event(100, "c")];
        let windows = build_windows(&events).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].event_count(), 3);
    }

    #[test]
    fn mixed_devices_are_rejected() {
        let mut e2 = event(5, "a");
        e2.device_id = "other".into();
        assert!(build_windows(&[event(0, "a"), e2]).is_err());
    }

    #[test]
    fn windows_are_chronological_and_disjoint() {
        let mut events = Vec::new();
        for burst in 0..4i64 {
            for j in 0..5i64 {
                events.push(event(burst * 3000 + j * 5, "a"));
            }
        }
        let windows = build_windows(&events).unwrap();
        assert_eq!(windows.len(), 4);
        for pair in windows.windows(2) {
            assert!(pair[0].start_min + pair[0].duration_min < pair[1].start_min);
            assert_eq!(pair[0].window_id + 1, pair[1].window_id);
        }
    }
}
