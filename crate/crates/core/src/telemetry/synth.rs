//! Seeded synthetic telemetry.
//!
//! Generates sparse KPI series (quiet baselines plus compact spike bursts),
//! an incident log, and the ground-truth placement of a planted failure
//! signature. Positive devices carry the signature burst close to the end of
//! the observation interval; a fraction of negative devices carry the same
//! event types as a decoy burst far from it, so recency — not mere presence —
//! separates the classes.
//!
//! The generated series are fed through the real extraction and labeling
//! paths, so the returned records are exactly what the file-based pipeline
//! would produce.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::extract::extract_events;
use super::labels::{label_devices, Labeling, DEFAULT_FAILURE_PHRASE};
use super::{
    DeviceRecord, Incident, KpiSeries, ObservationWindow, ThresholdRule, MINUTES_PER_DAY,
};
use crate::error::{Error, Result};

/// Baseline distribution for one KPI's quiet samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiBaseline {
    pub kpi_name: String,
    pub mean: f64,
    pub stddev: f64,
}

/// Placement of the planted failure signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSignature {
    /// Event types forming the signature (co-occurring in one burst).
    pub event_types: Vec<String>,
    /// Positives: the signature burst lies within this many days before `t`.
    pub max_days_before_end: f64,
    /// Negatives: the decoy burst ends at least this many days before `t`.
    pub decoy_min_days_before_end: f64,
    /// Fraction of negative devices that receive a decoy burst.
    pub decoy_fraction: f64,
    /// Events per signature type within the burst.
    pub frequency_range: (u32, u32),
}

impl Default for PlantedSignature {
    fn default() -> Self {
        PlantedSignature {
            event_types: vec![
                "Write response time".to_string(),
                "Peak backend write response time".to_string(),
            ],
            max_days_before_end: 3.0,
            decoy_min_days_before_end: 10.0,
            decoy_fraction: 0.7,
            frequency_range: (2, 6),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub device_count: usize,
    pub positive_fraction: f64,
    pub observation_start_min: i64,
    pub observation_days: u32,
    pub horizon_days: u32,
    pub sampling_minutes: u32,
    /// Quiet-sample distributions; empty means "derive from the rule set".
    pub kpi_baselines: Vec<KpiBaseline>,
    /// Mean number of non-signature spike bursts per device.
    pub spike_burst_rate: f64,
    /// Burst length in minutes, inclusive.
    pub burst_length_range: (u32, u32),
    /// Events per involved KPI per burst, inclusive.
    pub burst_events_range: (u32, u32),
    /// Quiet samples per KPI per device, inclusive.
    pub baseline_samples_range: (u32, u32),
    pub planted_signature: PlantedSignature,
    pub rng_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            device_count: 630,
            positive_fraction: 1.0 / 9.0,
            observation_start_min: 0,
            observation_days: 14,
            horizon_days: 3,
            sampling_minutes: 5,
            kpi_baselines: Vec::new(),
            spike_burst_rate: 3.5,
            burst_length_range: (15, 240),
            burst_events_range: (1, 8),
            baseline_samples_range: (4, 8),
            planted_signature: PlantedSignature::default(),
            rng_seed: 7,
        }
    }
}

/// Ground truth for one generated device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureTruth {
    pub device_id: String,
    pub label: bool,
    /// `(first, last)` event timestamp of the signature or decoy burst.
    pub signature_span_min: Option<(i64, i64)>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub series: Vec<KpiSeries>,
    pub incidents: Vec<Incident>,
    pub records: Vec<DeviceRecord>,
    pub window: ObservationWindow,
    pub truth: Vec<SignatureTruth>,
}

impl SyntheticConfig {
    fn validate(&self, rules: &[ThresholdRule]) -> Result<()> {
        if self.device_count < 2 {
            return Err(Error::validation("device_count must be at least 2"));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::validation("positive_fraction must lie in (0, 1)"));
        }
        let (lo, hi) = self.burst_length_range;
        if lo > hi || hi == 0 {
            return Err(Error::validation("burst_length_range is empty"));
        }
        let observation_min = i64::from(self.observation_days) * MINUTES_PER_DAY;
        if i64::from(hi) > observation_min {
            return Err(Error::validation(
                "burst longer than the observation window",
            ));
        }
        if self.burst_events_range.0 > self.burst_events_range.1 || self.burst_events_range.0 == 0 {
            return Err(Error::validation("burst_events_range is empty"));
        }
        if self.baseline_samples_range.0 > self.baseline_samples_range.1 {
            return Err(Error::validation("baseline_samples_range is empty"));
        }
        if self.sampling_minutes == 0 {
            return Err(Error::validation("sampling_minutes must be positive"));
        }
        let sig = &self.planted_signature;
        if sig.event_types.is_empty() {
            return Err(Error::validation("planted signature has no event types"));
        }
        for t in &sig.event_types {
            if !rules.iter().any(|r| &r.kpi_name == t) {
                return Err(Error::validation(format!(
                    "signature event type {t:?} has no matching rule"
                )));
            }
        }
        if sig.frequency_range.0 == 0 || sig.frequency_range.0 > sig.frequency_range.1 {
            return Err(Error::validation("signature frequency_range is empty"));
        }
        if !(0.0..=1.0).contains(&sig.decoy_fraction) {
            return Err(Error::validation("decoy_fraction must lie in [0, 1]"));
        }
        let decoy_zone =
            observation_min - (sig.decoy_min_days_before_end * MINUTES_PER_DAY as f64) as i64;
        if decoy_zone - i64::from(hi) < 0 {
            return Err(Error::validation(
                "decoy placement zone is empty; shrink decoy_min_days_before_end or bursts",
            ));
        }
        Ok(())
    }
}

struct DevicePlan {
    /// Per KPI index: timestamp -> value.
    samples: Vec<BTreeMap<i64, f64>>,
    signature_span: Option<(i64, i64)>,
}

/// Deterministic synthetic dataset for a rule set. Equal seeds produce
/// bit-identical output.
pub fn generate_synthetic(
    config: &SyntheticConfig,
    rules: &[ThresholdRule],
) -> Result<SyntheticDataset> {
    config.validate(rules)?;
    let window = ObservationWindow::from_days(
        config.observation_start_min,
        config.observation_days,
        config.horizon_days,
    )?;

    let baselines = resolve_baselines(config, rules);
    let signature_kpis: Vec<usize> = config
        .planted_signature
        .event_types
        .iter()
        .map(|t| rules.iter().position(|r| &r.kpi_name == t).unwrap())
        .collect();
    let noise_kpis: Vec<usize> = (0..rules.len())
        .filter(|i| !signature_kpis.contains(i))
        .collect();
    if noise_kpis.is_empty() {
        return Err(Error::validation(
            "every rule is a signature type; no noise KPIs remain",
        ));
    }

    let positives = (config.device_count as f64 * config.positive_fraction).round() as usize;
    if positives == 0 || positives >= config.device_count {
        return Err(Error::validation(
            "positive_fraction rounds to an empty class",
        ));
    }
    let mut labels = vec![false; config.device_count];
    labels[..positives].fill(true);
    let mut master = ChaCha8Rng::seed_from_u64(config.rng_seed);
    labels.shuffle(&mut master);

    let mut series = Vec::new();
    let mut incidents = Vec::new();
    let mut truth = Vec::new();
    for (idx, &positive) in labels.iter().enumerate() {
        let device_id = format!("dev{idx:04}");
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(idx as u64 + 1);

        let plan = plan_device(config, rules, &baselines, &signature_kpis, &noise_kpis, positive, window, &mut rng);
        for (kpi_idx, samples) in plan.samples.iter().enumerate() {
            if samples.is_empty() {
                continue;
            }
            series.push(KpiSeries {
                device_id: device_id.clone(),
                kpi_name: rules[kpi_idx].kpi_name.clone(),
                samples: samples.iter().map(|(&t, &v)| (t, v)).collect(),
            });
        }
        plan_incidents(&device_id, positive, window, &mut rng, &mut incidents);
        truth.push(SignatureTruth {
            device_id,
            label: positive,
            signature_span_min: plan.signature_span,
        });
    }

    let extraction = extract_events(&series, rules)?;
    let outcome = label_devices(extraction.events, &incidents, window, &Labeling::default())?;
    debug_assert_eq!(outcome.records.len(), config.device_count);

    Ok(SyntheticDataset {
        series,
        incidents,
        records: outcome.records,
        window,
        truth,
    })
}

fn resolve_baselines(config: &SyntheticConfig, rules: &[ThresholdRule]) -> Vec<(f64, f64)> {
    rules
        .iter()
        .map(|rule| {
            if let Some(b) = config
                .kpi_baselines
                .iter()
                .find(|b| b.kpi_name == rule.kpi_name)
            {
                (b.mean, b.stddev)
            } else {
                let scale = rule.threshold.abs() + 1.0;
                (rule.threshold - 0.4 * scale, 0.1 * scale)
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn plan_device(
    config: &SyntheticConfig,
    rules: &[ThresholdRule],
    baselines: &[(f64, f64)],
    signature_kpis: &[usize],
    noise_kpis: &[usize],
    positive: bool,
    window: ObservationWindow,
    rng: &mut ChaCha8Rng,
) -> DevicePlan {
    let grid = i64::from(config.sampling_minutes);
    let sig = &config.planted_signature;
    let mut samples: Vec<BTreeMap<i64, f64>> = vec![BTreeMap::new(); rules.len()];

    // Quiet baseline samples, strictly below threshold.
    for (kpi_idx, &(mean, stddev)) in baselines.iter().enumerate() {
        let count = range_sample(rng, config.baseline_samples_range);
        let dist = Normal::new(mean, stddev.max(1e-9)).expect("finite baseline");
        let cap = rules[kpi_idx].threshold - 0.05 * (rules[kpi_idx].threshold.abs() + 1.0);
        for _ in 0..count {
            let ts = grid_point(rng, window.start_min, window.end_min, grid);
            let value = dist.sample(rng).min(cap);
            samples[kpi_idx].entry(ts).or_insert(value);
        }
    }

    // Non-signature spike bursts. Positives keep their recent zone clear so
    // the planted signature is the only late burst.
    let noise_zone_end = if positive {
        window.end_min
            - ((sig.max_days_before_end + 0.5) * MINUTES_PER_DAY as f64) as i64
    } else {
        window.end_min
    };
    let burst_count = poisson(rng, config.spike_burst_rate).min(12);
    for _ in 0..burst_count {
        let len = i64::from(range_sample(rng, config.burst_length_range));
        if window.start_min + len > noise_zone_end {
            continue;
        }
        let start = grid_point(rng, window.start_min, noise_zone_end - len, grid);
        let kpi_count = rng.random_range(1..=3usize.min(noise_kpis.len()));
        let mut pool = noise_kpis.to_vec();
        pool.shuffle(rng);
        for &kpi_idx in pool.iter().take(kpi_count) {
            let events = range_sample(rng, config.burst_events_range);
            plant_events(rng, &mut samples[kpi_idx], rules[kpi_idx].threshold, start, len, grid, events);
        }
    }

    // Signature burst: recent for positives, old decoy for some negatives.
    let mut signature_span = None;
    let plant_signature = positive || rng.random::<f64>() < sig.decoy_fraction;
    if plant_signature {
        let max_len =
            ((sig.max_days_before_end * MINUTES_PER_DAY as f64) as i64).max(grid);
        let len = i64::from(range_sample(rng, config.burst_length_range)).min(max_len);
        let (lo, hi) = if positive {
            let zone =
                window.end_min - (sig.max_days_before_end * MINUTES_PER_DAY as f64) as i64;
            (zone, window.end_min - len)
        } else {
            let zone = window.end_min
                - (sig.decoy_min_days_before_end * MINUTES_PER_DAY as f64) as i64;
            (window.start_min, zone - len)
        };
        let start = grid_point(rng, lo, hi.max(lo), grid);
        let mut span: Option<(i64, i64)> = None;
        for &kpi_idx in signature_kpis {
            let events = range_sample(rng, sig.frequency_range);
            let planted = plant_events(
                rng,
                &mut samples[kpi_idx],
                rules[kpi_idx].threshold,
                start,
                len,
                grid,
                events,
            );
            for ts in planted {
                span = Some(match span {
                    None => (ts, ts),
                    Some((a, b)) => (a.min(ts), b.max(ts)),
                });
            }
        }
        signature_span = span;
    }

    DevicePlan {
        samples,
        signature_span,
    }
}

/// Place `count` above-threshold samples on distinct grid points inside
/// `[start, start + len]`; returns the timestamps used.
fn plant_events(
    rng: &mut ChaCha8Rng,
    samples: &mut BTreeMap<i64, f64>,
    threshold: f64,
    start: i64,
    len: i64,
    grid: i64,
    count: u32,
) -> Vec<i64> {
    let slots = (len / grid + 1) as usize;
    let mut offsets: Vec<i64> = (0..slots as i64).map(|k| k * grid).collect();
    offsets.shuffle(rng);
    let take = (count as usize).min(slots);
    let mut used = Vec::with_capacity(take);
    for &offset in offsets.iter().take(take) {
        let ts = start + offset;
        let excess = (threshold.abs() + 1.0) * rng.random_range(0.05..1.2);
        samples.insert(ts, threshold + excess);
        used.push(ts);
    }
    used
}

fn plan_incidents(
    device_id: &str,
    positive: bool,
    window: ObservationWindow,
    rng: &mut ChaCha8Rng,
    incidents: &mut Vec<Incident>,
) {
    let horizon = window.horizon_minutes();
    if positive {
        let at = window.end_min + rng.random_range(horizon / 10..=horizon * 9 / 10);
        incidents.push(Incident {
            device_id: device_id.to_string(),
            timestamp_min: at,
            severity: "error".to_string(),
            text: format!("{DEFAULT_FAILURE_PHRASE} (unit {device_id})"),
        });
    }
    // Informational chatter keeps every device present in the incident log.
    let info_count = rng.random_range(1..=2);
    for _ in 0..info_count {
        let at = window.start_min
            + rng.random_range(0..=window.horizon_end_min - window.start_min);
        incidents.push(Incident {
            device_id: device_id.to_string(),
            timestamp_min: at,
            severity: "informational".to_string(),
            text: "routine health check completed".to_string(),
        });
    }
    // Distractors that must not affect labels.
    if rng.random::<f64>() < 0.05 {
        incidents.push(Incident {
            device_id: device_id.to_string(),
            timestamp_min: window.end_min + rng.random_range(1..=horizon),
            severity: "warning".to_string(),
            text: format!("{DEFAULT_FAILURE_PHRASE} (advisory)"),
        });
    }
    if rng.random::<f64>() < 0.04 {
        incidents.push(Incident {
            device_id: device_id.to_string(),
            timestamp_min: window.end_min + rng.random_range(1..=horizon),
            severity: "error".to_string(),
            text: "software level is below recommended version".to_string(),
        });
    }
    if rng.random::<f64>() < 0.04 {
        incidents.push(Incident {
            device_id: device_id.to_string(),
            timestamp_min: window.horizon_end_min + rng.random_range(1..=MINUTES_PER_DAY),
            severity: "error".to_string(),
            text: DEFAULT_FAILURE_PHRASE.to_string(),
        });
    }
}

fn range_sample(rng: &mut ChaCha8Rng, (lo, hi): (u32, u32)) -> u32 {
    rng.random_range(lo..=hi)
}

fn grid_point(rng: &mut ChaCha8Rng, lo: i64, hi: i64, grid: i64) -> i64 {
    debug_assert!(hi >= lo);
    let slots = (hi - lo) / grid;
    lo + rng.random_range(0..=slots) * grid
}

/// Knuth's product-of-uniforms sampler; fine for the small rates used here.
fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= limit || k >= 200 {
            return k;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::default_rules;

    #[test]
    fn equal_seeds_are_bit_identical() {
        let config = SyntheticConfig {
            device_count: 40,
            rng_seed: 7,
            ..SyntheticConfig::default()
        };
        let rules = default_rules();
        let a = generate_synthetic(&config, &rules).unwrap();
        let b = generate_synthetic(&config, &rules).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.incidents, b.incidents);
        assert_eq!(a.records, b.records);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn distinct_seeds_differ() {
        let rules = default_rules();
        let mut config = SyntheticConfig {
            device_count: 40,
            ..SyntheticConfig::default()
        };
        config.rng_seed = 1;
        let a = generate_synthetic(&config, &rules).unwrap();
        config.rng_seed = 2;
        let b = generate_synthetic(&config, &rules).unwrap();
        assert_ne!(a.series, b.series);
    }

    #[test]
    fn positive_count_follows_fraction_exactly() {
        let config = SyntheticConfig {
            device_count: 330,
            positive_fraction: 1.0 / 33.0,
            ..SyntheticConfig::default()
        };
        let data = generate_synthetic(&config, &default_rules()).unwrap();
        let positives = data.records.iter().filter(|r| r.label).count();
        assert_eq!(positives, 10);
        assert_eq!(data.records.len(), 330);
    }

    #[test]
    fn planted_labels_match_derived_labels() {
        let config = SyntheticConfig {
            device_count: 60,
            ..SyntheticConfig::default()
        };
        let data = generate_synthetic(&config, &default_rules()).unwrap();
        for truth in &data.truth {
            let record = data
                .records
                .iter()
                .find(|r| r.device_id == truth.device_id)
                .expect("every device gets a record");
            assert_eq!(record.label, truth.label, "{}", truth.device_id);
        }
    }

    #[test]
    fn every_event_exceeds_its_threshold() {
        let config = SyntheticConfig {
            device_count: 30,
            ..SyntheticConfig::default()
        };
        let rules = default_rules();
        let data = generate_synthetic(&config, &rules).unwrap();
        for record in &data.records {
            for event in &record.events {
                let rule = rules.iter().find(|r| r.kpi_name == event.event_type).unwrap();
                assert!(event.value > rule.threshold);
            }
        }
    }

    #[test]
    fn positive_signature_lands_in_final_days() {
        let config = SyntheticConfig {
            device_count: 60,
            ..SyntheticConfig::default()
        };
        let data = generate_synthetic(&config, &default_rules()).unwrap();
        let cutoff = data.window.end_min - 3 * MINUTES_PER_DAY;
        for truth in data.truth.iter().filter(|t| t.label) {
            let (first, last) = truth.signature_span_min.expect("positives carry the signature");
            assert!(first >= cutoff, "{first} < {cutoff}");
            assert!(last <= data.window.end_min);
        }
    }

    #[test]
    fn decoy_bursts_stay_far_from_t() {
        let config = SyntheticConfig {
            device_count: 80,
            ..SyntheticConfig::default()
        };
        let data = generate_synthetic(&config, &default_rules()).unwrap();
        let cutoff = data.window.end_min - 10 * MINUTES_PER_DAY;
        let mut decoys = 0;
        for truth in data.truth.iter().filter(|t| !t.label) {
            if let Some((_, last)) = truth.signature_span_min {
                assert!(last <= cutoff, "{last} > {cutoff}");
                decoys += 1;
            }
        }
        assert!(decoys > 0, "some negatives should carry a decoy");
    }

    #[test]
    fn oversized_burst_is_rejected() {
        let config = SyntheticConfig {
            device_count: 10,
            observation_days: 1,
            burst_length_range: (15, 2000),
            ..SyntheticConfig::default()
        };
        assert!(matches!(
            generate_synthetic(&config, &default_rules()),
            Err(Error::Validation(_))
        ));
    }
}
