//! Window encoders: the plain frequency sum and the attentive/decayed form,
//! plus the backward pass used by end-to-end training.

use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, Mat};
use crate::vocab::EventVocabulary;
use crate::windowing::EventWindow;

use super::features::WindowFeatures;
use super::{AttentionProjection, DecayParams, EmbeddingTable};

/// Attention over the unique event types of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// `alpha[n][x]`: weight of type x in the context of type n; rows sum to 1.
    pub alpha: Vec<Vec<f64>>,
    /// `context[n]`: attention-weighted mixture of embeddings for type n.
    pub context: Vec<Vec<f64>>,
}

/// Scaled dot-product attention across the window's unique event types.
pub fn attend(
    features: &WindowFeatures,
    embeddings: &EmbeddingTable,
    projection: &AttentionProjection,
) -> Attention {
    let (queries, keys) = project(features, embeddings, projection);
    let mut alpha = Vec::with_capacity(queries.len());
    let mut context = Vec::with_capacity(queries.len());
    let scale = (projection.dimension as f64).sqrt();
    for q in &queries {
        let logits: Vec<f64> = keys.iter().map(|k| dot(q, k) / scale).collect();
        let row = softmax(&logits);
        context.push(mix_embeddings(&row, features, embeddings));
        alpha.push(row);
    }
    Attention { alpha, context }
}

/// [`attend`] starting from a raw window.
pub fn attend_window(
    window: &EventWindow,
    vocab: &EventVocabulary,
    embeddings: &EmbeddingTable,
    projection: &AttentionProjection,
) -> Result<Attention> {
    // Attention ignores recency, so the features can use a zero delta.
    let features = WindowFeatures::from_window(window, vocab, window.tau_min)?;
    Ok(attend(&features, embeddings, projection))
}

fn project(
    features: &WindowFeatures,
    embeddings: &EmbeddingTable,
    projection: &AttentionProjection,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let queries = features
        .type_indices
        .iter()
        .map(|&e| projection.query.matvec(embeddings.vector(e)))
        .collect();
    let keys = features
        .type_indices
        .iter()
        .map(|&e| projection.key.matvec(embeddings.vector(e)))
        .collect();
    (queries, keys)
}

fn mix_embeddings(
    weights: &[f64],
    features: &WindowFeatures,
    embeddings: &EmbeddingTable,
) -> Vec<f64> {
    let mut mixed = vec![0.0; embeddings.dimension];
    for (x, &weight) in weights.iter().enumerate() {
        let v = embeddings.vector(features.type_indices[x]);
        for (m, &vj) in mixed.iter_mut().zip(v) {
            *m += weight * vj;
        }
    }
    mixed
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Plain encoder: the frequency-weighted sum of embeddings (the baseline
/// representation fed to the traditional sequence model).
pub fn encode_plain(features: &WindowFeatures, embeddings: &EmbeddingTable) -> Vec<f64> {
    let mut w = vec![0.0; embeddings.dimension];
    for (&e, &freq) in features.type_indices.iter().zip(&features.frequencies) {
        for (wj, &vj) in w.iter_mut().zip(embeddings.vector(e)) {
            *wj += freq * vj;
        }
    }
    w
}

/// Backward of [`encode_plain`].
pub fn encode_plain_backward(
    features: &WindowFeatures,
    d_output: &[f64],
    d_embeddings: &mut Mat,
) {
    for (&e, &freq) in features.type_indices.iter().zip(&features.frequencies) {
        for (g, &d) in d_embeddings.row_mut(e).iter_mut().zip(d_output) {
            *g += freq * d;
        }
    }
}

/// [`encode_plain`] starting from a raw window.
pub fn encode_window_plain(
    window: &EventWindow,
    vocab: &EventVocabulary,
    embeddings: &EmbeddingTable,
) -> Result<Vec<f64>> {
    let features = WindowFeatures::from_window(window, vocab, window.tau_min)?;
    Ok(encode_plain(&features, embeddings))
}

/// Everything the attentive backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct AttentiveCache {
    pub queries: Vec<Vec<f64>>,
    pub keys: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub context: Vec<Vec<f64>>,
    /// Clamped decay factor per unique type.
    pub decay_factor: Vec<f64>,
    /// `sigmoid(sigma_raw)` per unique type (softplus derivative).
    pub sigma_raw_sigmoid: Vec<f64>,
    pub delta_days: f64,
}

/// Attentive encoder: `w = sum_n freq_n * I_n * cv_n`.
pub fn encode_attentive(
    features: &WindowFeatures,
    embeddings: &EmbeddingTable,
    projection: &AttentionProjection,
    decay: &DecayParams,
) -> (Vec<f64>, AttentiveCache) {
    let (queries, keys) = project(features, embeddings, projection);
    let scale = (projection.dimension as f64).sqrt();
    let unique = features.unique_types();

    let mut alpha = Vec::with_capacity(unique);
    let mut context = Vec::with_capacity(unique);
    let mut decay_factor = Vec::with_capacity(unique);
    let mut sigma_raw_sigmoid = Vec::with_capacity(unique);
    let mut w = vec![0.0; embeddings.dimension];
    for (n, q) in queries.iter().enumerate() {
        let logits: Vec<f64> = keys.iter().map(|k| dot(q, k) / scale).collect();
        let row = softmax(&logits);
        let cv = mix_embeddings(&row, features, embeddings);
        let e = features.type_indices[n];
        let factor = decay.contribution(e, features.delta_min as f64);
        let weight = features.frequencies[n] * factor;
        for (wj, &cj) in w.iter_mut().zip(&cv) {
            *wj += weight * cj;
        }
        alpha.push(row);
        context.push(cv);
        decay_factor.push(factor);
        sigma_raw_sigmoid.push(sigmoid(decay.sigma_raw[e]));
    }

    (
        w,
        AttentiveCache {
            queries,
            keys,
            alpha,
            context,
            decay_factor,
            sigma_raw_sigmoid,
            delta_days: features.delta_days(),
        },
    )
}

impl AttentiveCache {
    /// Coefficients of the regrouped per-type sum `w = sum_x c_x * v_{e_x}`
    /// with `c_x = sum_n freq_n * I_n * alpha[n][x]`.
    pub fn coefficients(&self, features: &WindowFeatures) -> Vec<f64> {
        let mut coefficients = vec![0.0; features.unique_types()];
        for (n, row) in self.alpha.iter().enumerate() {
            let weight = features.frequencies[n] * self.decay_factor[n];
            for (c, &a) in coefficients.iter_mut().zip(row) {
                *c += weight * a;
            }
        }
        coefficients
    }
}

/// Backward of [`encode_attentive`]: accumulates into the embedding, query,
/// key, and decay gradients.
#[allow(clippy::too_many_arguments)]
pub fn encode_attentive_backward(
    features: &WindowFeatures,
    cache: &AttentiveCache,
    d_output: &[f64],
    embeddings: &EmbeddingTable,
    projection: &AttentionProjection,
    d_embeddings: &mut Mat,
    d_query: &mut Mat,
    d_key: &mut Mat,
    d_theta: &mut [f64],
    d_sigma_raw: &mut [f64],
) {
    let unique = features.unique_types();
    let scale = (projection.dimension as f64).sqrt();
    let mut d_keys = vec![vec![0.0; projection.dimension]; unique];

    for n in 0..unique {
        let e_n = features.type_indices[n];
        let freq = features.frequencies[n];
        let factor = cache.decay_factor[n];

        // w += freq * I * cv
        let d_cv: Vec<f64> = d_output.iter().map(|&d| freq * factor * d).collect();
        let d_factor = freq * dot(&cache.context[n], d_output);

        // I = sigmoid(theta - softplus(sigma_raw) * delta_days)
        let d_logit = d_factor * factor * (1.0 - factor);
        d_theta[e_n] += d_logit;
        d_sigma_raw[e_n] += d_logit * (-cache.delta_days) * cache.sigma_raw_sigmoid[n];

        // cv_n = sum_x alpha[n][x] * v_{e_x}
        let mut d_alpha = vec![0.0; unique];
        for (x, d_a) in d_alpha.iter_mut().enumerate() {
            let e_x = features.type_indices[x];
            *d_a = dot(embeddings.vector(e_x), &d_cv);
            let a = cache.alpha[n][x];
            for (g, &d) in d_embeddings.row_mut(e_x).iter_mut().zip(&d_cv) {
                *g += a * d;
            }
        }

        // alpha[n] = softmax(z[n]) with z[n][x] = (q_n . k_x) / sqrt(a)
        let row_dot = dot(&cache.alpha[n], &d_alpha);
        let mut d_q = vec![0.0; projection.dimension];
        for x in 0..unique {
            let d_z = cache.alpha[n][x] * (d_alpha[x] - row_dot) / scale;
            if d_z == 0.0 {
                continue;
            }
            for (dq, &kc) in d_q.iter_mut().zip(&cache.keys[x]) {
                *dq += d_z * kc;
            }
            for (dk, &qc) in d_keys[x].iter_mut().zip(&cache.queries[n]) {
                *dk += d_z * qc;
            }
        }

        // q_n = query * v_{e_n}
        d_query.add_outer(&d_q, embeddings.vector(e_n));
        let back = projection.query.matvec_transposed(&d_q);
        for (g, &b) in d_embeddings.row_mut(e_n).iter_mut().zip(&back) {
            *g += b;
        }
    }

    // k_x = key * v_{e_x}
    for (x, d_k) in d_keys.iter().enumerate() {
        let e_x = features.type_indices[x];
        d_key.add_outer(d_k, embeddings.vector(e_x));
        let back = projection.key.matvec_transposed(d_k);
        for (g, &b) in d_embeddings.row_mut(e_x).iter_mut().zip(&back) {
            *g += b;
        }
    }
}

/// One unique event type's slice of a window encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedGroup {
    pub type_index: usize,
    pub event_type: String,
    pub frequency: u64,
    /// Decay factor `I` of this type at the window's delta; in (0, 1).
    pub contribution_factor: f64,
    /// Coefficient of this type's embedding in the regrouped sum.
    pub coefficient: f64,
}

/// A window's vector representation with its per-type decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEncoding {
    pub vector: Vec<f64>,
    pub groups: Vec<EncodedGroup>,
    pub delta_min: i64,
}

/// Attentive encoding of a raw window for the horizon `(t, t + T]`, where
/// `t = observation_end_min` and `T = horizon_minutes`.
pub fn encode_window_attentive(
    window: &EventWindow,
    observation_end_min: i64,
    horizon_minutes: i64,
    vocab: &EventVocabulary,
    embeddings: &EmbeddingTable,
    projection: &AttentionProjection,
    decay: &DecayParams,
) -> Result<WindowEncoding> {
    if horizon_minutes < 0 {
        return Err(Error::validation("horizon must be non-negative"));
    }
    let horizon_end = observation_end_min + horizon_minutes;
    let features = WindowFeatures::from_window(window, vocab, horizon_end)?;
    let (vector, cache) = encode_attentive(&features, embeddings, projection, decay);
    let coefficients = cache.coefficients(&features);
    let groups = features
        .type_indices
        .iter()
        .enumerate()
        .map(|(n, &e)| EncodedGroup {
            type_index: e,
            event_type: vocab.name(e).to_string(),
            frequency: features.frequencies[n] as u64,
            contribution_factor: cache.decay_factor[n],
            coefficient: coefficients[n],
        })
        .collect();
    Ok(WindowEncoding {
        vector,
        groups,
        delta_min: features.delta_min,
    })
}
