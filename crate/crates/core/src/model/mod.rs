//! Attentional twin-LSTM point process model.
//!
//! Two LSTMs encode the inputs: one consumes `(embedding, inter-event gap)`
//! pairs for the asynchronous events, the other consumes the evenly sampled
//! feature series. For each target dimension `z`, per-event attention scores
//!
//! ```text
//! score(h_i, v_z) = |tanh(h_i . v_z)|   thresholded to 0 below epsilon
//! ```
//!
//! weight an additive context vector over the recent history, in analogy to
//! the additive excitation of a Hawkes process. The context and the aligned
//! series state fuse through a sigmoid layer into one representation per
//! dimension; a shared score vector and a softmax produce the next-dimension
//! distribution, and a linear head on the winning representation predicts
//! the next inter-event gap. Averaging attention weights by (source
//! dimension, target dimension) over a record set yields the infectivity
//! estimate.

mod backward;
mod forward;
mod lstm;

pub use backward::gradients;
pub use forward::{forward, predict_next, ForwardTrace, NextPrediction, PredictionStepTrace};
pub use lstm::{lstm_backward, lstm_run, lstm_run_backward, lstm_step, LstmParams, LstmStep};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::data::Record;
use crate::linalg::{dot, Mat};
use crate::{Error, Result};

pub(crate) use lstm::sigmoid;

/// Attention behavior: sparsity threshold and history window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionConfig {
    /// Scores with |tanh| below this are zeroed, sparsifying the recovered
    /// infectivity matrix.
    pub epsilon: f64,
    /// Number of most recent hidden states attended; None means the whole
    /// history.
    pub window: Option<usize>,
}

fn default_gap_scale() -> f64 {
    1.0
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig { epsilon: 0.01, window: None }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "attention epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.window == Some(0) {
            return Err(Error::Config("attention window must be positive".into()));
        }
        Ok(())
    }
}

/// Architecture sizes. `feature_width` may be zero for event-only models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSizes {
    pub num_dims: usize,
    pub feature_width: usize,
    pub embed_dim: usize,
    pub hidden_event: usize,
    pub hidden_series: usize,
    pub hidden_fuse: usize,
}

impl ModelSizes {
    pub fn new(num_dims: usize, feature_width: usize) -> Self {
        ModelSizes {
            num_dims,
            feature_width,
            embed_dim: 16,
            hidden_event: 32,
            hidden_series: 32,
            hidden_fuse: 32,
        }
    }
}

/// Every learnable tensor of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sizes: ModelSizes,
    /// Fixed factor applied to the inter-event gap before it enters the
    /// event LSTM. Time units are dimensionless, so training picks this as
    /// the inverse mean training gap; raw gaps of arbitrary magnitude would
    /// otherwise saturate the gates and drown the embedding signal. Not a
    /// learnable tensor.
    #[serde(default = "default_gap_scale")]
    pub input_gap_scale: f64,
    /// Event embedding, `embed_dim x num_dims`; column z embeds dimension z.
    pub embed: Mat,
    /// Event channel; input is the embedding plus the inter-event gap.
    pub event_lstm: LstmParams,
    /// Series channel; None for the event-only variant.
    pub series_lstm: Option<LstmParams>,
    /// Per-dimension attention feature vectors, `num_dims x hidden_event`.
    pub attn_features: Mat,
    /// Synergic fusion of [series state, context], `hidden_fuse x (hidden_series + hidden_event)`.
    pub fuse_w: Mat,
    pub fuse_b: Vec<f64>,
    /// Shared dimension-score vector applied to each fused representation.
    pub dim_head: Vec<f64>,
    /// Linear time head on the winning representation.
    pub time_head: Vec<f64>,
    pub time_bias: f64,
}

impl ModelParams {
    /// Initializes weights uniformly in [-0.1, 0.1] from `seed`, biases at
    /// zero except the forget-gate bias at +1.
    pub fn init(sizes: ModelSizes, use_series: bool, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut params = Self::zeros(sizes, use_series && sizes.feature_width > 0);
        for slice in params.weight_slices_mut() {
            for v in slice {
                *v = rng.random_range(-0.1..0.1);
            }
        }
        for v in &mut params.event_lstm.b_f {
            *v = 1.0;
        }
        if let Some(series) = &mut params.series_lstm {
            for v in &mut series.b_f {
                *v = 1.0;
            }
        }
        params
    }

    pub fn zeros(sizes: ModelSizes, with_series: bool) -> Self {
        ModelParams {
            sizes,
            input_gap_scale: 1.0,
            embed: Mat::zeros(sizes.embed_dim, sizes.num_dims),
            event_lstm: LstmParams::zeros(sizes.embed_dim + 1, sizes.hidden_event),
            series_lstm: if with_series {
                Some(LstmParams::zeros(sizes.feature_width, sizes.hidden_series))
            } else {
                None
            },
            attn_features: Mat::zeros(sizes.num_dims, sizes.hidden_event),
            fuse_w: Mat::zeros(sizes.hidden_fuse, sizes.hidden_series + sizes.hidden_event),
            fuse_b: vec![0.0; sizes.hidden_fuse],
            dim_head: vec![0.0; sizes.hidden_fuse],
            time_head: vec![0.0; sizes.hidden_fuse],
            time_bias: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.sizes, self.series_lstm.is_some());
        z.input_gap_scale = self.input_gap_scale;
        z
    }

    pub fn uses_series(&self) -> bool {
        self.series_lstm.is_some()
    }

    /// "ATRPP" with the series channel, "AERPP" without.
    pub fn variant(&self) -> &'static str {
        if self.uses_series() {
            "ATRPP"
        } else {
            "AERPP"
        }
    }

    /// Every tensor in a fixed order, flattened to slices. The order is the
    /// contract shared by the optimizer state and the flat representation.
    pub fn tensor_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.embed.data()];
        out.extend(self.event_lstm.slices());
        if let Some(series) = &self.series_lstm {
            out.extend(series.slices());
        }
        out.push(self.attn_features.data());
        out.push(self.fuse_w.data());
        out.push(&self.fuse_b);
        out.push(&self.dim_head);
        out.push(&self.time_head);
        out.push(std::slice::from_ref(&self.time_bias));
        out
    }

    pub fn tensor_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.embed.data_mut()];
        out.extend(self.event_lstm.slices_mut());
        if let Some(series) = &mut self.series_lstm {
            out.extend(series.slices_mut());
        }
        out.push(self.attn_features.data_mut());
        out.push(self.fuse_w.data_mut());
        out.push(&mut self.fuse_b);
        out.push(&mut self.dim_head);
        out.push(&mut self.time_head);
        out.push(std::slice::from_mut(&mut self.time_bias));
        out
    }

    /// Weight tensors only (biases excluded), for initialization.
    fn weight_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.embed.data_mut()];
        for lstm in [Some(&mut self.event_lstm), self.series_lstm.as_mut()].into_iter().flatten() {
            out.push(lstm.w_i.data_mut());
            out.push(lstm.u_i.data_mut());
            out.push(&mut lstm.p_i);
            out.push(lstm.w_f.data_mut());
            out.push(lstm.u_f.data_mut());
            out.push(&mut lstm.p_f);
            out.push(lstm.w_c.data_mut());
            out.push(lstm.u_c.data_mut());
            out.push(lstm.w_o.data_mut());
            out.push(lstm.u_o.data_mut());
            out.push(&mut lstm.p_o);
        }
        out.push(self.attn_features.data_mut());
        out.push(self.fuse_w.data_mut());
        out.push(&mut self.dim_head);
        out.push(&mut self.time_head);
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensor_slices().iter().map(|s| s.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_params());
        for s in self.tensor_slices() {
            flat.extend_from_slice(s);
        }
        flat
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for s in self.tensor_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        assert_eq!(offset, flat.len(), "flat parameter length mismatch");
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sizes;
        self.event_lstm.validate()?;
        if self.event_lstm.input_dim() != s.embed_dim + 1
            || self.event_lstm.hidden_dim() != s.hidden_event
        {
            return Err(Error::Shape("event lstm shape disagrees with sizes".into()));
        }
        if let Some(series) = &self.series_lstm {
            series.validate()?;
            if series.input_dim() != s.feature_width || series.hidden_dim() != s.hidden_series {
                return Err(Error::Shape("series lstm shape disagrees with sizes".into()));
            }
        }
        if self.embed.rows() != s.embed_dim || self.embed.cols() != s.num_dims {
            return Err(Error::Shape("embedding shape disagrees with sizes".into()));
        }
        if self.attn_features.rows() != s.num_dims || self.attn_features.cols() != s.hidden_event {
            return Err(Error::Shape("attention features shape disagrees with sizes".into()));
        }
        if self.fuse_w.rows() != s.hidden_fuse
            || self.fuse_w.cols() != s.hidden_series + s.hidden_event
            || self.fuse_b.len() != s.hidden_fuse
            || self.dim_head.len() != s.hidden_fuse
            || self.time_head.len() != s.hidden_fuse
        {
            return Err(Error::Shape("fusion/head shapes disagree with sizes".into()));
        }
        if self.tensor_slices().iter().any(|sl| sl.iter().any(|v| !v.is_finite())) {
            return Err(Error::Data("model parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Column `z` of the embedding matrix.
pub fn embed(dim: usize, embedding: &Mat) -> Result<Vec<f64>> {
    if dim >= embedding.cols() {
        return Err(Error::Data(format!(
            "embed: dim {dim} out of range for Z={}",
            embedding.cols()
        )));
    }
    Ok((0..embedding.rows()).map(|r| embedding.get(r, dim)).collect())
}

/// Attention score `|tanh(h . v)|`, zeroed below `epsilon`.
pub fn attention_score(hidden: &[f64], feature: &[f64], epsilon: f64) -> f64 {
    let raw = dot(hidden, feature).tanh().abs();
    if raw < epsilon {
        0.0
    } else {
        raw
    }
}

/// Additive context `sum_i alpha_i h_i` over the window. Weights are
/// unnormalized influence strengths; no softmax is applied.
pub fn context_vector(states: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(states.len(), weights.len());
    let width = states.first().map(|s| s.len()).unwrap_or(0);
    let mut ctx = vec![0.0; width];
    for (state, &alpha) in states.iter().zip(weights) {
        if alpha != 0.0 {
            crate::linalg::add_scaled(&mut ctx, alpha, state);
        }
    }
    ctx
}

/// Averaged attention strengths between dimensions with provenance counts.
#[derive(Clone, Debug)]
pub struct InfectivityEstimate {
    /// Entry (i, z): mean attention weight that history events of dimension
    /// i received when scoring target dimension z.
    pub matrix: Mat,
    /// Number of (step, target) observations behind each cell.
    pub counts: Mat,
    pub records_used: usize,
    pub epsilon: f64,
    pub window: Option<usize>,
}

/// Averages attention weights over every step of every record, grouped by
/// (source dimension, target dimension).
pub fn extract_infectivity(
    params: &ModelParams,
    config: &AttentionConfig,
    records: &[&Record],
) -> Result<InfectivityEstimate> {
    let z = params.sizes.num_dims;
    let mut sums = Mat::zeros(z, z);
    let mut counts = Mat::zeros(z, z);
    for record in records {
        let trace = forward(record, params, config)?;
        for step in &trace.steps {
            for target in 0..z {
                for (wi, alpha) in step.attn_weights.row(target).iter().enumerate() {
                    let source = record.sequence.events[step.window_start + wi].dim;
                    sums.add(source, target, *alpha);
                    counts.add(source, target, 1.0);
                }
            }
        }
    }
    let mut matrix = Mat::zeros(z, z);
    for i in 0..z {
        for j in 0..z {
            let c = counts.get(i, j);
            if c > 0.0 {
                matrix.set(i, j, sums.get(i, j) / c);
            }
        }
    }
    Ok(InfectivityEstimate {
        matrix,
        counts,
        records_used: records.len(),
        epsilon: config.epsilon,
        window: config.window,
    })
}

/// Adapter putting the neural model behind the shared
/// [`Predictor`](crate::predictor::Predictor) trait,
/// so it rides the same evaluation harness as the baselines.
pub struct NeuralPredictor {
    pub params: ModelParams,
    pub attention: AttentionConfig,
}

impl crate::predictor::Predictor for NeuralPredictor {
    fn name(&self) -> &str {
        if self.params.uses_series() {
            "atrpp"
        } else {
            "aerpp"
        }
    }

    fn predicts_dims(&self) -> bool {
        true
    }

    fn predicts_gaps(&self) -> bool {
        true
    }

    fn predict_sequence(&self, record: &Record) -> Vec<crate::predictor::Prediction> {
        // One forward pass yields every step; per-step predict_next calls
        // would recompute the shared prefix work.
        let trace = match forward(record, &self.params, &self.attention) {
            Ok(trace) => trace,
            Err(_) => return Vec::new(),
        };
        trace
            .steps
            .iter()
            .map(|step| crate::predictor::Prediction {
                ranked_dims: crate::predictor::rank_by_score(&step.probs),
                gap: Some(step.pred_gap_raw.max(0.0)),
            })
            .collect()
    }
}
