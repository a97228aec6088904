//! Shared forward/backward plumbing from window features through the encoder
//! and LSTM to the prediction, used by training, evaluation, the gradient
//! checker, and the explanation faithfulness check.

use crate::linalg::{dot, sigmoid};
use crate::model::{EncoderKind, Gradients, ModelParams};
use crate::representation::{
    encode_attentive, encode_attentive_backward, encode_plain, encode_plain_backward,
    AttentiveCache, DeviceSequence, WindowFeatures,
};

use super::lstm::{sequence_backward, sequence_forward, StepCache};

pub(crate) struct FullForward {
    /// Featurized windows actually fed to the LSTM (the most recent ones).
    pub used: usize,
    pub encoder_caches: Vec<Option<AttentiveCache>>,
    pub steps: Vec<StepCache>,
    pub h_last: Vec<f64>,
    pub probability: f64,
}

/// Encode the most recent `max_len` windows and run the LSTM.
pub(crate) fn device_forward(
    params: &ModelParams,
    windows: &[WindowFeatures],
    max_len: usize,
) -> FullForward {
    let skip = windows.len().saturating_sub(max_len);
    let used = &windows[skip..];

    let mut xs = Vec::with_capacity(used.len());
    let mut encoder_caches = Vec::with_capacity(used.len());
    for features in used {
        match params.encoder {
            EncoderKind::Plain => {
                xs.push(encode_plain(features, &params.embeddings));
                encoder_caches.push(None);
            }
            EncoderKind::Attentive => {
                let (x, cache) = encode_attentive(
                    features,
                    &params.embeddings,
                    &params.attention,
                    &params.decay,
                );
                xs.push(x);
                encoder_caches.push(Some(cache));
            }
        }
    }

    let (steps, h_last) = sequence_forward(&params.lstm, &xs);
    let logit = dot(&params.lstm.head_weight, &h_last) + params.lstm.head_bias;
    FullForward {
        used: used.len(),
        encoder_caches,
        steps,
        h_last,
        probability: sigmoid(logit),
    }
}

/// Backward from the logit gradient `d_logit`, accumulating into `grads`.
pub(crate) fn device_backward(
    params: &ModelParams,
    windows: &[WindowFeatures],
    forward: &FullForward,
    d_logit: f64,
    grads: &mut Gradients,
    forget_gate_fault: bool,
) {
    let skip = windows.len() - forward.used;
    let used = &windows[skip..];

    for (w, &h) in grads.head_weight.iter_mut().zip(&forward.h_last) {
        *w += d_logit * h;
    }
    grads.head_bias += d_logit;
    if used.is_empty() {
        return;
    }

    let d_h_last: Vec<f64> = params
        .lstm
        .head_weight
        .iter()
        .map(|&w| w * d_logit)
        .collect();
    let d_inputs = sequence_backward(
        &params.lstm,
        &forward.steps,
        &d_h_last,
        grads,
        forget_gate_fault,
    );

    for (j, features) in used.iter().enumerate() {
        match (&params.encoder, &forward.encoder_caches[j]) {
            (EncoderKind::Plain, _) => {
                encode_plain_backward(features, &d_inputs[j], &mut grads.embeddings);
            }
            (EncoderKind::Attentive, Some(cache)) => {
                encode_attentive_backward(
                    features,
                    cache,
                    &d_inputs[j],
                    &params.embeddings,
                    &params.attention,
                    &mut grads.embeddings,
                    &mut grads.query,
                    &mut grads.key,
                    &mut grads.theta,
                    &mut grads.sigma_raw,
                );
            }
            (EncoderKind::Attentive, None) => unreachable!("attentive cache missing"),
        }
    }
}

/// Predicted failure probability for one device sequence.
pub fn predict_probability(
    params: &ModelParams,
    sequence: &DeviceSequence,
    max_len: usize,
) -> f64 {
    device_forward(params, &sequence.windows, max_len).probability
}
