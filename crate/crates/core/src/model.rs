//! The full parameter bundle: embeddings, attention projections, decay
//! parameters, and the LSTM with its output head, plus initialization and the
//! versioned JSON model file.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{softplus_inverse, Mat};
use crate::network::LstmParams;
use crate::representation::{AttentionProjection, DecayParams, EmbeddingTable};
use crate::vocab::EventVocabulary;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Which window encoder feeds the sequence model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// Frequency-weighted embedding sum.
    Plain,
    /// Attention context vectors with temporal decay.
    Attentive,
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(EncoderKind::Plain),
            "attentive" => Ok(EncoderKind::Attentive),
            other => Err(Error::validation(format!("unknown encoder {other:?}"))),
        }
    }
}

/// Architecture sizes; defaults sized to the 15-type vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub hidden_size: usize,
    pub encoder: EncoderKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 16,
            attn_dim: 16,
            hidden_size: 32,
            encoder: EncoderKind::Attentive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub format_version: u32,
    pub encoder: EncoderKind,
    pub vocabulary: EventVocabulary,
    pub embeddings: EmbeddingTable,
    pub attention: AttentionProjection,
    pub decay: DecayParams,
    pub lstm: LstmParams,
}

impl ModelParams {
    /// Seeded initialization: embeddings and projections uniform in
    /// `(-1/sqrt(s), 1/sqrt(s))`, decay starting at `theta = 0` and
    /// `sigma = 0.5`, LSTM gates uniform in `(-1/sqrt(s+h), 1/sqrt(s+h))`
    /// with the forget-gate bias at 1.
    pub fn init(vocab: EventVocabulary, config: ModelConfig, seed: u64) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::validation("vocabulary is empty"));
        }
        if config.embed_dim == 0 || config.attn_dim == 0 || config.hidden_size == 0 {
            return Err(Error::validation("model dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0xfa11);

        let s = config.embed_dim;
        let a = config.attn_dim;
        let h = config.hidden_size;
        let bound = 1.0 / (s as f64).sqrt();
        let mut uniform_mat = |rows: usize, cols: usize, b: f64| {
            let mut m = Mat::zeros(rows, cols);
            for v in m.as_mut_slice() {
                *v = rng.random_range(-b..b);
            }
            m
        };

        let embeddings = EmbeddingTable {
            dimension: s,
            vectors: uniform_mat(vocab.len(), s, bound),
        };
        let attention = AttentionProjection {
            dimension: a,
            query: uniform_mat(a, s, bound),
            key: uniform_mat(a, s, bound),
        };
        let decay = DecayParams {
            theta: vec![0.0; vocab.len()],
            sigma_raw: vec![softplus_inverse(0.5); vocab.len()],
        };

        let gate_bound = 1.0 / ((s + h) as f64).sqrt();
        let w_input = uniform_mat(4 * h, s, gate_bound);
        let w_hidden = uniform_mat(4 * h, h, gate_bound);
        let mut bias = vec![0.0; 4 * h];
        bias[h..2 * h].fill(1.0);
        let head_bound = 1.0 / (h as f64).sqrt();
        let head_weight: Vec<f64> = (0..h).map(|_| rng.random_range(-head_bound..head_bound)).collect();
        let lstm = LstmParams {
            hidden_size: h,
            input_dim: s,
            w_input,
            w_hidden,
            bias,
            head_weight,
            head_bias: 0.0,
        };

        Ok(ModelParams {
            format_version: MODEL_FORMAT_VERSION,
            encoder: config.encoder,
            vocabulary: vocab,
            embeddings,
            attention,
            decay,
            lstm,
        })
    }

    pub fn save_json(&self, mut out: impl Write) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        out.write_all(text.as_bytes())?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn load_json(input: impl Read) -> Result<Self> {
        let params: ModelParams = serde_json::from_reader(input)?;
        if params.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported model format version {}",
                params.format_version
            )));
        }
        params.check_shapes()?;
        Ok(params)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.vocabulary.len();
        let s = self.embeddings.dimension;
        let a = self.attention.dimension;
        let h = self.lstm.hidden_size;
        let ok = self.embeddings.vectors.rows() == n
            && self.embeddings.vectors.cols() == s
            && self.attention.query.rows() == a
            && self.attention.query.cols() == s
            && self.attention.key.rows() == a
            && self.attention.key.cols() == s
            && self.decay.theta.len() == n
            && self.decay.sigma_raw.len() == n
            && self.lstm.input_dim == s
            && self.lstm.w_input.rows() == 4 * h
            && self.lstm.w_input.cols() == s
            && self.lstm.w_hidden.rows() == 4 * h
            && self.lstm.w_hidden.cols() == h
            && self.lstm.bias.len() == 4 * h
            && self.lstm.head_weight.len() == h;
        if !ok {
            return Err(Error::validation("model parameter shapes are inconsistent"));
        }
        Ok(())
    }

    /// Flat views of every parameter group, in a fixed order.
    pub fn group_names() -> &'static [&'static str] {
        &[
            "embeddings",
            "query",
            "key",
            "theta",
            "sigma_raw",
            "lstm_w_input",
            "lstm_w_hidden",
            "lstm_bias",
            "head_weight",
            "head_bias",
        ]
    }

    pub fn group(&self, name: &str) -> &[f64] {
        match name {
            "embeddings" => self.embeddings.vectors.as_slice(),
            "query" => self.attention.query.as_slice(),
            "key" => self.attention.key.as_slice(),
            "theta" => &self.decay.theta,
            "sigma_raw" => &self.decay.sigma_raw,
            "lstm_w_input" => self.lstm.w_input.as_slice(),
            "lstm_w_hidden" => self.lstm.w_hidden.as_slice(),
            "lstm_bias" => &self.lstm.bias,
            "head_weight" => &self.lstm.head_weight,
            "head_bias" => std::slice::from_ref(&self.lstm.head_bias),
            other => panic!("unknown parameter group {other}"),
        }
    }

    pub fn group_mut(&mut self, name: &str) -> &mut [f64] {
        match name {
            "embeddings" => self.embeddings.vectors.as_mut_slice(),
            "query" => self.attention.query.as_mut_slice(),
            "key" => self.attention.key.as_mut_slice(),
            "theta" => &mut self.decay.theta,
            "sigma_raw" => &mut self.decay.sigma_raw,
            "lstm_w_input" => self.lstm.w_input.as_mut_slice(),
            "lstm_w_hidden" => self.lstm.w_hidden.as_mut_slice(),
            "lstm_bias" => &mut self.lstm.bias,
            "head_weight" => &mut self.lstm.head_weight,
            "head_bias" => std::slice::from_mut(&mut self.lstm.head_bias),
            other => panic!("unknown parameter group {other}"),
        }
    }
}

/// Gradients with the same shapes as [`ModelParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub embeddings: Mat,
    pub query: Mat,
    pub key: Mat,
    pub theta: Vec<f64>,
    pub sigma_raw: Vec<f64>,
    pub w_input: Mat,
    pub w_hidden: Mat,
    pub bias: Vec<f64>,
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            embeddings: Mat::zeros(
                params.embeddings.vectors.rows(),
                params.embeddings.vectors.cols(),
            ),
            query: Mat::zeros(params.attention.query.rows(), params.attention.query.cols()),
            key: Mat::zeros(params.attention.key.rows(), params.attention.key.cols()),
            theta: vec![0.0; params.decay.theta.len()],
            sigma_raw: vec![0.0; params.decay.sigma_raw.len()],
            w_input: Mat::zeros(params.lstm.w_input.rows(), params.lstm.w_input.cols()),
            w_hidden: Mat::zeros(params.lstm.w_hidden.rows(), params.lstm.w_hidden.cols()),
            bias: vec![0.0; params.lstm.bias.len()],
            head_weight: vec![0.0; params.lstm.head_weight.len()],
            head_bias: 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.embeddings.fill(0.0);
        self.query.fill(0.0);
        self.key.fill(0.0);
        self.theta.fill(0.0);
        self.sigma_raw.fill(0.0);
        self.w_input.fill(0.0);
        self.w_hidden.fill(0.0);
        self.bias.fill(0.0);
        self.head_weight.fill(0.0);
        self.head_bias = 0.0;
    }

    pub fn group(&self, name: &str) -> &[f64] {
        match name {
            "embeddings" => self.embeddings.as_slice(),
            "query" => self.query.as_slice(),
            "key" => self.key.as_slice(),
            "theta" => &self.theta,
            "sigma_raw" => &self.sigma_raw,
            "lstm_w_input" => self.w_input.as_slice(),
            "lstm_w_hidden" => self.w_hidden.as_slice(),
            "lstm_bias" => &self.bias,
            "head_weight" => &self.head_weight,
            "head_bias" => std::slice::from_ref(&self.head_bias),
            other => panic!("unknown parameter group {other}"),
        }
    }
}

/// One plain SGD step: `params -= rate * grads`, where `rate` folds in the
/// learning rate and the batch normalization.
pub fn sgd_step(params: &mut ModelParams, grads: &Gradients, rate: f64) {
    params.embeddings.vectors.add_scaled(&grads.embeddings, -rate);
    params.attention.query.add_scaled(&grads.query, -rate);
    params.attention.key.add_scaled(&grads.key, -rate);
    for (p, g) in params.decay.theta.iter_mut().zip(&grads.theta) {
        *p -= rate * g;
    }
    for (p, g) in params.decay.sigma_raw.iter_mut().zip(&grads.sigma_raw) {
        *p -= rate * g;
    }
    params.lstm.w_input.add_scaled(&grads.w_input, -rate);
    params.lstm.w_hidden.add_scaled(&grads.w_hidden, -rate);
    for (p, g) in params.lstm.bias.iter_mut().zip(&grads.bias) {
        *p -= rate * g;
    }
    for (p, g) in params.lstm.head_weight.iter_mut().zip(&grads.head_weight) {
        *p -= rate * g;
    }
    params.lstm.head_bias -= rate * grads.head_bias;
}
