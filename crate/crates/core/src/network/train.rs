//! Weighted loss, dataset splitting, and the mini-batch SGD training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sgd_step, Gradients, ModelConfig, ModelParams};
use crate::representation::DeviceSequence;
use crate::vocab::EventVocabulary;

use super::run::{device_backward, device_forward};

const PROBABILITY_CLAMP: f64 = 1e-7;

/// Optimizer choice; plain SGD is the default so the stated learning rate
/// applies unmodified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub sequence_length: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub positive_class_weight: f64,
    pub rng_seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 50,
            sequence_length: 15,
            learning_rate: 0.1,
            epochs: 150,
            positive_class_weight: 32.0,
            rng_seed: 7,
            optimizer: Optimizer::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.sequence_length == 0 || self.epochs == 0 {
            return Err(Error::validation(
                "batch size, sequence length, and epochs must be positive",
            ));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::validation("learning rate must be non-negative"));
        }
        if self.positive_class_weight <= 0.0 {
            return Err(Error::validation("positive class weight must be positive"));
        }
        Ok(())
    }
}

/// Weighted binary cross entropy with the probability clamped away from 0/1.
pub fn weighted_bce(probability: f64, label: bool, positive_weight: f64) -> f64 {
    let p = probability.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
    if label {
        -positive_weight * p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Gradient of [`weighted_bce`] with respect to the pre-sigmoid logit. Inside
/// the clamp this is the usual `(1 - y) p - w y (1 - p)`; a clamped
/// probability contributes nothing, mirroring the loss exactly.
pub(crate) fn bce_logit_gradient(probability: f64, label: bool, positive_weight: f64) -> f64 {
    if probability <= PROBABILITY_CLAMP || probability >= 1.0 - PROBABILITY_CLAMP {
        return 0.0;
    }
    if label {
        -positive_weight * (1.0 - probability)
    } else {
        probability
    }
}

/// Deterministic 80/20 split by seeded shuffle; the holdout is sub-split into
/// test and validation halves (`holdout_test_fraction` defaults to 0.5).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Vec<usize>,
}

pub fn split_dataset(
    count: usize,
    seed: u64,
    train_fraction: f64,
    holdout_test_fraction: f64,
) -> Result<SplitIndices> {
    if count < 2 {
        return Err(Error::validation("need at least two devices to split"));
    }
    if !(0.0..1.0).contains(&train_fraction) || train_fraction == 0.0 {
        return Err(Error::validation("train_fraction must lie in (0, 1)"));
    }
    if !(0.0..=1.0).contains(&holdout_test_fraction) {
        return Err(Error::validation("holdout_test_fraction must lie in [0, 1]"));
    }
    let mut indices: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x5911);
    indices.shuffle(&mut rng);
    let train_len = ((count as f64) * train_fraction).floor() as usize;
    let train_len = train_len.clamp(1, count - 1);
    let (train, holdout) = indices.split_at(train_len);
    let test_len = ((holdout.len() as f64) * holdout_test_fraction).round() as usize;
    let (test, validation) = holdout.split_at(test_len.min(holdout.len()));
    Ok(SplitIndices {
        train: train.to_vec(),
        test: test.to_vec(),
        validation: validation.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean weighted BCE over the training set, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Train a fresh model on the given training sequences. Deterministic for a
/// fixed seed under single-threaded execution: initialization, shuffling, and
/// update order all draw from the seed.
pub fn train(
    sequences: &[DeviceSequence],
    vocab: EventVocabulary,
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if sequences.is_empty() {
        return Err(Error::validation("training split is empty"));
    }
    let positives = sequences.iter().filter(|s| s.label).count();
    if positives == 0 || positives == sequences.len() {
        return Err(Error::validation(
            "training split must contain both classes",
        ));
    }

    let mut params = ModelParams::init(vocab, model_config, config.rng_seed)?;
    let mut grads = Gradients::zeros_like(&params);
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(0x7ea1);

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.reset();
            for &idx in batch {
                let sample = &sequences[idx];
                let forward = device_forward(&params, &sample.windows, config.sequence_length);
                epoch_loss += weighted_bce(
                    forward.probability,
                    sample.label,
                    config.positive_class_weight,
                );
                let d_logit = bce_logit_gradient(
                    forward.probability,
                    sample.label,
                    config.positive_class_weight,
                ) / batch.len() as f64;
                device_backward(&params, &sample.windows, &forward, d_logit, &mut grads, false);
            }
            match config.optimizer {
                Optimizer::Sgd => sgd_step(&mut params, &grads, config.learning_rate),
            }
        }
        epoch_losses.push(epoch_loss / sequences.len() as f64);
    }

    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::WindowFeatures;

    fn sequence(device: &str, label: bool, types: &[(usize, f64)], delta: i64) -> DeviceSequence {
        DeviceSequence {
            device_id: device.into(),
            label,
            windows: vec![WindowFeatures {
                type_indices: types.iter().map(|&(t, _)| t).collect(),
                frequencies: types.iter().map(|&(_, f)| f).collect(),
                delta_min: delta,
            }],
        }
    }

    fn vocab() -> EventVocabulary {
        EventVocabulary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    fn toy_dataset() -> Vec<DeviceSequence> {
        // Positives carry type 2 in their single window; negatives type 0.
        let mut out = Vec::new();
        for i in 0..20 {
            out.push(sequence(&format!("p{i}"), true, &[(2, 3.0), (1, 1.0)], 5000));
            out.push(sequence(&format!("n{i}"), false, &[(0, 3.0), (1, 1.0)], 5000));
        }
        out
    }

    fn small_model() -> ModelConfig {
        ModelConfig {
            embed_dim: 8,
            attn_dim: 8,
            hidden_size: 8,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn loss_matches_hand_values() {
        assert!((weighted_bce(0.5, false, 32.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((weighted_bce(0.5, true, 32.0) - 32.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(weighted_bce(0.9999999, true, 1.0) < 1e-6);
        assert!(weighted_bce(1e-9, false, 1.0) < 1e-6);
    }

    #[test]
    fn separable_toy_set_converges() {
        let config = TrainConfig {
            batch_size: 10,
            epochs: 200,
            positive_class_weight: 1.0,
            rng_seed: 3,
            ..TrainConfig::default()
        };
        let out = train(&toy_dataset(), vocab(), small_model(), &config).unwrap();
        let final_loss = *out.epoch_losses.last().unwrap();
        assert!(final_loss < 0.05, "final loss {final_loss}");
    }

    #[test]
    fn zero_learning_rate_keeps_parameters_bit_identical() {
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 1,
            rng_seed: 5,
            ..TrainConfig::default()
        };
        let data = toy_dataset();
        let out = train(&data, vocab(), small_model(), &config).unwrap();
        let fresh = ModelParams::init(vocab(), small_model(), 5).unwrap();
        assert_eq!(out.params, fresh);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let config = TrainConfig {
            epochs: 5,
            rng_seed: 9,
            ..TrainConfig::default()
        };
        let data = toy_dataset();
        let a = train(&data, vocab(), small_model(), &config).unwrap();
        let b = train(&data, vocab(), small_model(), &config).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn single_class_split_is_rejected() {
        let data: Vec<DeviceSequence> = toy_dataset().into_iter().filter(|s| s.label).collect();
        let err = train(&data, vocab(), small_model(), &TrainConfig::default());
        assert!(err.is_err());
        let empty: Vec<DeviceSequence> = Vec::new();
        assert!(train(&empty, vocab(), small_model(), &TrainConfig::default()).is_err());
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let a = split_dataset(100, 7, 0.8, 0.5).unwrap();
        let b = split_dataset(100, 7, 0.8, 0.5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.len(), 80);
        assert_eq!(a.test.len(), 10);
        assert_eq!(a.validation.len(), 10);
        let mut all: Vec<usize> = a
            .train
            .iter()
            .chain(&a.test)
            .chain(&a.validation)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let c = split_dataset(100, 8, 0.8, 0.5).unwrap();
        assert_ne!(a.train, c.train);
    }
}
