//! LSTM binary classifier over window-encoding sequences, with weighted loss
//! for class imbalance, full backpropagation through time into every upstream
//! parameter group, a finite-difference gradient checker, and evaluation
//! metrics.

mod gradcheck;
mod lstm;
mod metrics;
mod run;
mod train;

pub use gradcheck::{gradient_check, Corruption, GradCheckReport};
pub use metrics::{evaluate, predict, Confusion, Evaluation, Metrics, Prediction};
pub use run::predict_probability;
pub use train::{
    split_dataset, train, weighted_bce, Optimizer, SplitIndices, TrainConfig, TrainOutcome,
};

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, sigmoid, Mat};

/// LSTM weights plus the scalar output head. Gate blocks are stacked in the
/// row order input / forget / candidate / output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden_size: usize,
    pub input_dim: usize,
    /// `4h x input_dim`.
    pub w_input: Mat,
    /// `4h x h`.
    pub w_hidden: Mat,
    /// `4h`.
    pub bias: Vec<f64>,
    /// `h`; the prediction is `sigmoid(head_weight . h_p + head_bias)`.
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
}

/// A fixed-length input sequence. Padded steps carry a zero vector and a
/// false mask; the recurrent state passes through them unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedSequence {
    pub vectors: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
}

/// Left-pad to `max_len`, keeping the most recent windows when there are too
/// many.
pub fn pad_sequence(encodings: &[Vec<f64>], max_len: usize, input_dim: usize) -> PaddedSequence {
    let used = &encodings[encodings.len().saturating_sub(max_len)..];
    let pad = max_len - used.len();
    let mut vectors = Vec::with_capacity(max_len);
    let mut mask = Vec::with_capacity(max_len);
    for _ in 0..pad {
        vectors.push(vec![0.0; input_dim]);
        mask.push(false);
    }
    for v in used {
        vectors.push(v.clone());
        mask.push(true);
    }
    PaddedSequence { vectors, mask }
}

/// Output of a forward pass over a padded sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Hidden state after every step (masked steps repeat the previous one).
    pub hidden_states: Vec<Vec<f64>>,
    /// `sigmoid(head_weight . h_p + head_bias)`.
    pub probability: f64,
}

impl LstmParams {
    /// Run the recurrence over a padded sequence. A fully padded sequence
    /// leaves the state at zero, so the prediction is `sigmoid(head_bias)`.
    pub fn forward(&self, sequence: &PaddedSequence) -> Forward {
        debug_assert_eq!(sequence.vectors.len(), sequence.mask.len());
        let mut h = vec![0.0; self.hidden_size];
        let mut c = vec![0.0; self.hidden_size];
        let mut hidden_states = Vec::with_capacity(sequence.vectors.len());
        for (x, &active) in sequence.vectors.iter().zip(&sequence.mask) {
            if active {
                let (next_h, cache) = lstm::step(self, x, &h, &c);
                h = next_h;
                c = cache.c;
            }
            hidden_states.push(h.clone());
        }
        let probability = sigmoid(dot(&self.head_weight, &h) + self.head_bias);
        Forward {
            hidden_states,
            probability,
        }
    }
}
