//! Window representations.
//!
//! A window is encoded as a frequency-, attention-, and decay-weighted sum of
//! event-type embeddings. Attention runs over the unique event types present
//! in the window (frequencies enter as multipliers, so repeated events never
//! appear as duplicate attention rows), and the decay factor downweights
//! windows whose newest evidence is far from the prediction horizon.
//!
//! The attentive encoding keeps its per-event-type coefficient decomposition
//! alongside the vector, which is what the explanation reports consume.

mod encoder;
mod features;

pub use encoder::{
    attend, attend_window, encode_attentive, encode_attentive_backward, encode_plain,
    encode_plain_backward, encode_window_attentive, encode_window_plain, Attention,
    AttentiveCache, EncodedGroup, WindowEncoding,
};
pub use features::{featurize_device, DeviceSequence, WindowFeatures};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sigmoid, softplus, Mat};

pub const MINUTES_PER_DAY_F: f64 = 1440.0;

/// Largest representable probability strictly below one; keeps decay factors
/// inside the open interval (0, 1) even when the sigmoid saturates.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// One `embed_dim`-dimensional vector per event type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub dimension: usize,
    /// Row e is the embedding of vocabulary entry e.
    pub vectors: Mat,
}

impl EmbeddingTable {
    pub fn vector(&self, type_index: usize) -> &[f64] {
        self.vectors.row(type_index)
    }
}

/// Shared linear maps producing query and key vectors from embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionProjection {
    pub dimension: usize,
    /// `attn_dim x embed_dim`; query of type e is `query * v_e`.
    pub query: Mat,
    /// `attn_dim x embed_dim`; key of type e is `key * v_e`.
    pub key: Mat,
}

/// Per-event-type temporal-progression parameters. `sigma_raw` is stored
/// pre-softplus so the progression rate is non-negative by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub theta: Vec<f64>,
    pub sigma_raw: Vec<f64>,
}

impl DecayParams {
    /// Progression rate `sigma_e >= 0`.
    pub fn sigma(&self, type_index: usize) -> f64 {
        softplus(self.sigma_raw[type_index])
    }

    /// Contribution factor `I = sigmoid(theta_e - sigma_e * delta_days)`,
    /// strictly inside (0, 1). `delta_min` is rescaled to days first so the
    /// parameters live at O(1) scale over the 17-day protocol.
    pub fn contribution(&self, type_index: usize, delta_min: f64) -> f64 {
        let delta_days = delta_min / MINUTES_PER_DAY_F;
        sigmoid(self.theta[type_index] - self.sigma(type_index) * delta_days)
            .clamp(f64::MIN_POSITIVE, ONE_BELOW)
    }
}

/// Free-function form of the decay factor (see [`DecayParams::contribution`]).
pub fn contribution(decay: &DecayParams, type_index: usize, delta_min: f64) -> f64 {
    decay.contribution(type_index, delta_min)
}

/// Validate that a window reference time does not postdate the horizon and
/// return `delta = horizon_end - tau` in minutes.
pub fn window_delta_min(tau_min: i64, horizon_end_min: i64) -> Result<i64> {
    let delta = horizon_end_min - tau_min;
    if delta < 0 {
        return Err(Error::validation(format!(
            "window reference time {tau_min} lies past the horizon end {horizon_end_min}"
        )));
    }
    Ok(delta)
}
