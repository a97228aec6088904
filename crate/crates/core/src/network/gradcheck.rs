//! Finite-difference gradient checker for the full backpropagation path.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Gradients, ModelParams};
use crate::representation::DeviceSequence;

use super::run::{device_backward, device_forward};
use super::train::{bce_logit_gradient, weighted_bce};

/// Optional fault injection used to prove the checker can detect a broken
/// gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    None,
    /// Scales the forget-gate pre-activation delta during backprop.
    ForgetGate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `max |g_a - g_n| / max(|g_a|, |g_n|, 1e-8)` over sampled coordinates.
    pub max_relative_error: f64,
    pub coordinates_checked: usize,
    pub worst_group: String,
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

fn batch_loss(
    params: &ModelParams,
    batch: &[DeviceSequence],
    max_len: usize,
    positive_weight: f64,
) -> f64 {
    let total: f64 = batch
        .iter()
        .map(|s| {
            let p = device_forward(params, &s.windows, max_len).probability;
            weighted_bce(p, s.label, positive_weight)
        })
        .sum();
    total / batch.len() as f64
}

/// Compare analytic gradients of the mean weighted BCE against central finite
/// differences on `min_coordinates`-plus coordinates spanning every parameter
/// group.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check(
    params: &ModelParams,
    batch: &[DeviceSequence],
    max_len: usize,
    positive_weight: f64,
    epsilon: f64,
    min_coordinates: usize,
    seed: u64,
    corruption: Corruption,
) -> Result<GradCheckReport> {
    if batch.is_empty() {
        return Err(Error::validation("gradient check needs a non-empty batch"));
    }
    if epsilon <= 0.0 {
        return Err(Error::validation("epsilon must be positive"));
    }

    // Analytic gradients of the batch-mean loss.
    let mut grads = Gradients::zeros_like(params);
    for sample in batch {
        let forward = device_forward(params, &sample.windows, max_len);
        let d_logit = bce_logit_gradient(forward.probability, sample.label, positive_weight)
            / batch.len() as f64;
        device_backward(
            params,
            &sample.windows,
            &forward,
            d_logit,
            &mut grads,
            corruption == Corruption::ForgetGate,
        );
    }

    let groups = ModelParams::group_names();
    // Smallest per-group quota whose clamped sum reaches the requested
    // coordinate count; tiny groups (like the head bias) contribute all they
    // have and the larger ones absorb the rest.
    let sizes: Vec<usize> = groups.iter().map(|g| params.group(g).len()).collect();
    let total_params: usize = sizes.iter().sum();
    let budget = min_coordinates.min(total_params);
    let mut per_group = budget.div_ceil(groups.len()).max(1);
    while sizes.iter().map(|&s| s.min(per_group)).sum::<usize>() < budget {
        per_group += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x9c);

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        coordinates_checked: 0,
        worst_group: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for &group in groups {
        let len = params.group(group).len();
        let mut indices: Vec<usize> = (0..len).collect();
        indices.shuffle(&mut rng);
        for &idx in indices.iter().take(per_group.min(len)) {
            let original = probe.group(group)[idx];
            probe.group_mut(group)[idx] = original + epsilon;
            let loss_plus = batch_loss(&probe, batch, max_len, positive_weight);
            probe.group_mut(group)[idx] = original - epsilon;
            let loss_minus = batch_loss(&probe, batch, max_len, positive_weight);
            probe.group_mut(group)[idx] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
            let analytic = grads.group(group)[idx];
            let scale = analytic.abs().max(numeric.abs()).max(1e-8);
            let relative = (analytic - numeric).abs() / scale;
            report.coordinates_checked += 1;
            if relative > report.max_relative_error {
                report.max_relative_error = relative;
                report.worst_group = group.to_string();
                report.worst_index = idx;
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EncoderKind, ModelConfig};
    use crate::representation::WindowFeatures;
    use crate::vocab::EventVocabulary;
    use rand::Rng;

    fn rich_batch(vocab_len: usize, devices: usize, seed: u64) -> Vec<DeviceSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..devices)
            .map(|d| {
                let window_count = rng.random_range(1..=4);
                let windows = (0..window_count)
                    .map(|w| {
                        let unique = rng.random_range(1..=vocab_len);
                        let mut types: Vec<usize> = (0..vocab_len).collect();
                        types.shuffle(&mut rng);
                        let mut type_indices: Vec<usize> =
                            types.into_iter().take(unique).collect();
                        type_indices.sort_unstable();
                        let frequencies = type_indices
                            .iter()
                            .map(|_| rng.random_range(1..8) as f64)
                            .collect();
                        WindowFeatures {
                            type_indices,
                            frequencies,
                            delta_min: 4320 + 1440 * (window_count - w) as i64,
                        }
                    })
                    .collect();
                DeviceSequence {
                    device_id: format!("g{d}"),
                    windows,
                    label: d % 2 == 0,
                }
            })
            .collect()
    }

    fn checked_model(encoder: EncoderKind) -> ModelParams {
        let vocab = EventVocabulary::new((0..5).map(|i| format!("t{i}")).collect()).unwrap();
        ModelParams::init(
            vocab,
            ModelConfig {
                embed_dim: 6,
                attn_dim: 5,
                hidden_size: 7,
                encoder,
            },
            13,
        )
        .unwrap()
    }

    #[test]
    fn attentive_gradients_match_finite_differences() {
        let params = checked_model(EncoderKind::Attentive);
        let batch = rich_batch(5, 6, 21);
        let report = gradient_check(&params, &batch, 15, 8.0, 1e-5, 200, 1, Corruption::None)
            .unwrap();
        assert!(report.coordinates_checked >= 200);
        assert!(
            report.max_relative_error < 1e-4,
            "max relative error {} at {}[{}] (analytic {}, numeric {})",
            report.max_relative_error,
            report.worst_group,
            report.worst_index,
            report.worst_analytic,
            report.worst_numeric
        );
    }

    #[test]
    fn plain_encoder_gradients_also_match() {
        let params = checked_model(EncoderKind::Plain);
        let batch = rich_batch(5, 6, 22);
        let report = gradient_check(&params, &batch, 15, 8.0, 1e-5, 200, 2, Corruption::None)
            .unwrap();
        assert!(report.max_relative_error < 1e-4, "{report:?}");
    }

    #[test]
    fn corrupted_forget_gate_is_detected() {
        let params = checked_model(EncoderKind::Attentive);
        let batch = rich_batch(5, 6, 21);
        let report = gradient_check(
            &params,
            &batch,
            15,
            8.0,
            1e-5,
            200,
            1,
            Corruption::ForgetGate,
        )
        .unwrap();
        assert!(
            report.max_relative_error > 1e-2,
            "fault not detected: {}",
            report.max_relative_error
        );
    }
}
