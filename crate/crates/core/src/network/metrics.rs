//! Evaluation on the minority (failure) class plus balanced accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::representation::DeviceSequence;

use super::run::device_forward;

/// One device's prediction at the 0.5 decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub device_id: String,
    pub probability: f64,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision_minority: f64,
    pub f1_minority: f64,
    pub balanced_accuracy: f64,
    pub confusion: Confusion,
}

impl Metrics {
    /// Metrics from confusion counts, with zero-denominator rates defined as
    /// zero.
    pub fn from_confusion(confusion: Confusion) -> Self {
        let rate = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = rate(confusion.tp, confusion.tp + confusion.fp);
        let recall = rate(confusion.tp, confusion.tp + confusion.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let tpr = rate(confusion.tp, confusion.tp + confusion.fn_);
        let tnr = rate(confusion.tn, confusion.tn + confusion.fp);
        Metrics {
            precision_minority: precision,
            f1_minority: f1,
            balanced_accuracy: (tpr + tnr) / 2.0,
            confusion,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub predictions: Vec<Prediction>,
}

/// Predict a single device.
pub fn predict(params: &ModelParams, sequence: &DeviceSequence, max_len: usize) -> Prediction {
    let probability = device_forward(params, &sequence.windows, max_len).probability;
    Prediction {
        device_id: sequence.device_id.clone(),
        probability,
        label: u8::from(probability > 0.5),
    }
}

/// Evaluate a labeled dataset at the 0.5 threshold.
pub fn evaluate(
    params: &ModelParams,
    sequences: &[DeviceSequence],
    max_len: usize,
) -> Result<Evaluation> {
    if sequences.is_empty() {
        return Err(Error::validation("cannot evaluate an empty dataset"));
    }
    let mut confusion = Confusion::default();
    let mut predictions = Vec::with_capacity(sequences.len());
    for sequence in sequences {
        let prediction = predict(params, sequence, max_len);
        match (prediction.label == 1, sequence.label) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fp += 1,
            (false, true) => confusion.fn_ += 1,
            (false, false) => confusion.tn += 1,
        }
        predictions.push(prediction);
    }
    Ok(Evaluation {
        metrics: Metrics::from_confusion(confusion),
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_classifier_scores_ones() {
        let m = Metrics::from_confusion(Confusion {
            tp: 5,
            fp: 0,
            fn_: 0,
            tn: 95,
        });
        assert_eq!(m.precision_minority, 1.0);
        assert_eq!(m.f1_minority, 1.0);
        assert_eq!(m.balanced_accuracy, 1.0);
    }

    #[test]
    fn constant_negative_classifier_on_imbalanced_data() {
        // 1:32 data, everything predicted negative.
        let m = Metrics::from_confusion(Confusion {
            tp: 0,
            fp: 0,
            fn_: 3,
            tn: 96,
        });
        assert_eq!(m.precision_minority, 0.0);
        assert_eq!(m.f1_minority, 0.0);
        assert_eq!(m.balanced_accuracy, 0.5);
    }

    #[test]
    fn hand_computed_confusion() {
        let m = Metrics::from_confusion(Confusion {
            tp: 2,
            fp: 5,
            fn_: 3,
            tn: 90,
        });
        assert!((m.precision_minority - 2.0 / 7.0).abs() < 1e-12);
        let recall: f64 = 0.4;
        let precision = 2.0 / 7.0;
        let f1 = 2.0 * precision * recall / (precision + recall);
        assert!((m.f1_minority - f1).abs() < 1e-12);
        assert!((m.f1_minority - 0.3333333333).abs() < 1e-9);
        let bacc = (0.4 + 90.0 / 95.0) / 2.0;
        assert!((m.balanced_accuracy - bacc).abs() < 1e-12);
        assert!((m.balanced_accuracy - 0.6736842105).abs() < 1e-9);
    }

    #[test]
    fn metrics_stay_in_unit_interval() {
        for &(tp, fp, fn_, tn) in
            &[(0, 0, 0, 1), (1, 0, 0, 0), (3, 2, 1, 4), (0, 5, 5, 0)]
        {
            let m = Metrics::from_confusion(Confusion { tp, fp, fn_, tn });
            for v in [m.precision_minority, m.f1_minority, m.balanced_accuracy] {
                assert!((0.0..=1.0).contains(&v), "{v}");
            }
        }
    }

    #[test]
    fn metrics_json_uses_the_expected_field_names() {
        let m = Metrics::from_confusion(Confusion {
            tp: 1,
            fp: 2,
            fn_: 3,
            tn: 4,
        });
        let json = serde_json::to_value(m).unwrap();
        assert!(json.get("precision_minority").is_some());
        assert!(json.get("f1_minority").is_some());
        assert!(json.get("balanced_accuracy").is_some());
        let confusion = json.get("confusion").unwrap();
        for key in ["tp", "fp", "fn", "tn"] {
            assert!(confusion.get(key).is_some(), "missing {key}");
        }
    }
}
