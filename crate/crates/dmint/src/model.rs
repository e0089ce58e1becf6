//! The multi-view intent model.
//!
//! ```text
//! tokens ─ encoder ─ W ─┬─ extractor(belief) ─ F_B ─ head ─ C_B
//!                       ├─ extractor(desire) ─ F_D ─ head ─ C_D
//!                       ├─ extractor(plan)   ─ F_P ─ head ─ C_P
//!                       └─ gate(W) ─ M ─ F_I = Σ M_t F_t ─ head ─ C_I
//! ```
//!
//! Each extractor runs masked multi-head self-attention over `W`, then one
//! same-length convolution per window size (tanh activation), concatenates
//! the channels, mean-pools over real positions and projects to the shared
//! intent dimension. The gate pools `W` twice (learned attention pooling plus
//! the plain masked mean), sums the two vectors and maps the result to three
//! softmax weights.

use ndarray::{s, Array2, Axis};
use nint_core::metrics::argmax;
use nint_core::{Desire, Fairness, LabelTensor, Polarity, Stance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncodedText, Encoder, EncoderSpec, TokenFeatures, TokenMatrix};
use crate::error::ModelError;
use crate::loss::{bce_logit_grad, bce_sum};
use crate::nn::{
    masked_mean, masked_mean_backward, masked_softmax, softmax_backward, AttentionCache, Conv1d,
    Linear, MlpCache, SelfAttention, SigmoidMlp,
};
use crate::params::{Grads, ParamId, ParamStore};

/// Intent components with their own extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Belief,
    Desire,
    Plan,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Belief, Component::Desire, Component::Plan];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Belief => "belief",
            Component::Desire => "desire",
            Component::Plan => "plan",
        }
    }
}

/// Prediction tasks, in loss order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Belief,
    Desire,
    Plan,
    Polarity,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Belief, Task::Desire, Task::Plan, Task::Polarity];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn classes(self) -> usize {
        match self {
            Task::Belief => 3,
            Task::Desire => 4,
            Task::Plan | Task::Polarity => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Belief => "belief",
            Task::Desire => "desire",
            Task::Plan => "plan",
            Task::Polarity => "polarity",
        }
    }
}

/// Model variant: the full model or one ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Full,
    /// Extractors replaced by masked mean pooling plus a projection.
    WoMve,
    /// Gate replaced by fixed weights (1/3, 1/3, 1/3).
    WoIa,
    /// Belief loss dropped.
    WoB,
    /// Desire loss dropped.
    WoD,
    /// Plan loss dropped.
    WoP,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match key.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "womve" => Ok(Variant::WoMve),
            "woia" => Ok(Variant::WoIa),
            "wob" => Ok(Variant::WoB),
            "wod" => Ok(Variant::WoD),
            "wop" => Ok(Variant::WoP),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

impl Variant {
    /// Whether `task` contributes to the total loss.
    pub fn task_enabled(self, task: Task) -> bool {
        !matches!(
            (self, task),
            (Variant::WoB, Task::Belief) | (Variant::WoD, Task::Desire) | (Variant::WoP, Task::Plan)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderSpec,
    pub max_len: usize,
    pub attention_heads: usize,
    pub head_dim: usize,
    pub kernels: Vec<usize>,
    pub channels: usize,
    pub intent_dim: usize,
    pub hidden: usize,
    pub init_seed: u64,
    #[serde(default)]
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderSpec::HashedNgram {
                buckets: 1 << 14,
                dim: 64,
                seed: 0,
                max_n: 2,
            },
            max_len: 256,
            attention_heads: 2,
            head_dim: 32,
            kernels: vec![2, 3, 5],
            channels: 32,
            intent_dim: 96,
            hidden: 384,
            init_seed: 0,
            variant: Variant::Full,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.encoder.validate()?;
        let positive = [
            ("max_len", self.max_len),
            ("attention_heads", self.attention_heads),
            ("head_dim", self.head_dim),
            ("channels", self.channels),
            ("intent_dim", self.intent_dim),
            ("hidden", self.hidden),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.kernels.is_empty() || self.kernels.contains(&0) {
            return Err(ModelError::Config("need at least one positive kernel size".into()));
        }
        Ok(())
    }

    /// Same config with the given ablation applied.
    pub fn ablate(&self, variant: Variant) -> ModelConfig {
        ModelConfig {
            variant,
            ..self.clone()
        }
    }
}

/// Returns `spec` with `variant` applied.
pub fn ablate(spec: &ModelConfig, variant: Variant) -> ModelConfig {
    spec.ablate(variant)
}

#[derive(Debug, Clone, PartialEq)]
enum Extractor {
    MultiView {
        attention: SelfAttention,
        convs: Vec<Conv1d>,
        projection: Linear,
    },
    MeanPool {
        projection: Linear,
    },
}

#[derive(Debug, Clone)]
enum ExtractorCache {
    MultiView {
        attention: AttentionCache,
        cols: Vec<Array2<f64>>,
        acts: Vec<Array2<f64>>,
        pooled: Array2<f64>,
    },
    MeanPool {
        pooled: Array2<f64>,
    },
}

impl Extractor {
    fn forward(&self, p: &ParamStore, x: &Array2<f64>, mask: &[bool]) -> (Array2<f64>, ExtractorCache) {
        match self {
            Extractor::MultiView {
                attention,
                convs,
                projection,
            } => {
                let attn = attention.forward(p, x, mask);
                let mut cols = Vec::with_capacity(convs.len());
                let mut acts = Vec::with_capacity(convs.len());
                let mut pooled_parts = Vec::with_capacity(convs.len());
                for conv in convs {
                    let (c, z) = conv.forward(p, &attn.out);
                    let a = z.mapv(f64::tanh);
                    pooled_parts.push(masked_mean(&a, mask));
                    cols.push(c);
                    acts.push(a);
                }
                let views: Vec<_> = pooled_parts.iter().map(|m| m.view()).collect();
                let pooled = ndarray::concatenate(Axis(1), &views).expect("pooled widths");
                let feature = projection.forward(p, &pooled);
                (
                    feature,
                    ExtractorCache::MultiView {
                        attention: attn,
                        cols,
                        acts,
                        pooled,
                    },
                )
            }
            Extractor::MeanPool { projection } => {
                let pooled = masked_mean(x, mask);
                (projection.forward(p, &pooled), ExtractorCache::MeanPool { pooled })
            }
        }
    }

    fn backward(
        &self,
        p: &ParamStore,
        g: &mut Grads,
        x: &Array2<f64>,
        mask: &[bool],
        cache: &ExtractorCache,
        dfeature: &Array2<f64>,
    ) -> Array2<f64> {
        match (self, cache) {
            (
                Extractor::MultiView {
                    attention,
                    convs,
                    projection,
                },
                ExtractorCache::MultiView {
                    attention: attn,
                    cols,
                    acts,
                    pooled,
                },
            ) => {
                let dpooled = projection.backward(p, g, pooled, dfeature);
                let mut dhidden = Array2::zeros(attn.out.raw_dim());
                let mut offset = 0;
                for ((conv, c), a) in convs.iter().zip(cols).zip(acts) {
                    let width = conv.out_channels;
                    let dpart = dpooled.slice(s![.., offset..offset + width]).to_owned();
                    offset += width;
                    let da = masked_mean_backward(&dpart, mask);
                    let dz = da * &a.mapv(|v| 1.0 - v * v);
                    dhidden += &conv.backward(p, g, c, &dz);
                }
                attention.backward(p, g, x, attn, &dhidden)
            }
            (Extractor::MeanPool { projection }, ExtractorCache::MeanPool { pooled }) => {
                let dpooled = projection.backward(p, g, pooled, dfeature);
                masked_mean_backward(&dpooled, mask)
            }
            _ => unreachable!("cache built by the same extractor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Aggregator {
    Gated { pool_score: ParamId, gate: Linear },
    Uniform,
}

#[derive(Debug, Clone)]
struct GateCache {
    alpha: Vec<f64>,
    context: Array2<f64>,
}

/// All intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `F_B, F_D, F_P`, each `1 × intent_dim`.
    pub features: [Array2<f64>; 3],
    /// `F_I`, `1 × intent_dim`.
    pub intent: Array2<f64>,
    /// Softmax gate weights for belief, desire, plan.
    pub gate_weights: [f64; 3],
    /// Sigmoid outputs per task.
    pub outputs: [Vec<f64>; 4],
    extractor_caches: Vec<ExtractorCache>,
    gate_cache: Option<GateCache>,
    head_caches: Vec<MlpCache>,
}

impl Forward {
    pub fn feature(&self, component: Component) -> &Array2<f64> {
        &self.features[component.index()]
    }

    pub fn output(&self, task: Task) -> &[f64] {
        &self.outputs[task.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskLosses {
    pub per_task: [f64; 4],
    pub total: f64,
}

/// Decoded labels: argmax for single-label tasks, 0.5 threshold for desire.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub stance: Stance,
    pub desires: Vec<Desire>,
    pub fairness: Fairness,
    pub polarity: Polarity,
}

impl Prediction {
    pub fn from_outputs(outputs: &[Vec<f64>; 4]) -> Self {
        Self {
            stance: Stance::ALL[argmax(&outputs[0])],
            desires: Desire::ALL
                .into_iter()
                .zip(&outputs[1])
                .filter(|(_, p)| **p >= 0.5)
                .map(|(d, _)| d)
                .collect(),
            fairness: Fairness::ALL[argmax(&outputs[2])],
            polarity: Polarity::ALL[argmax(&outputs[3])],
        }
    }
}

/// One labelled training input.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub text: EncodedText,
    pub targets: LabelTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmintModel {
    config: ModelConfig,
    encoder: Encoder,
    params: ParamStore,
    embedding: Option<ParamId>,
    extractors: Vec<Extractor>,
    aggregator: Aggregator,
    heads: Vec<SigmoidMlp>,
}

impl DmintModel {
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let encoder = Encoder::new(config.encoder.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut params = ParamStore::new();
        let dim = encoder.dim();
        let embedding = encoder
            .trainable_buckets()
            .map(|buckets| params.add_normal("encoder.embedding", (buckets, dim), 0.5, &mut rng));
        let extractors = Component::ALL
            .iter()
            .map(|c| {
                let name = format!("mve.{}", c.name());
                match config.variant {
                    Variant::WoMve => Extractor::MeanPool {
                        projection: Linear::new(&mut params, &format!("{name}.projection"), dim, config.intent_dim, &mut rng),
                    },
                    _ => {
                        let attention = SelfAttention::new(
                            &mut params,
                            &format!("{name}.attention"),
                            dim,
                            config.attention_heads,
                            config.head_dim,
                            &mut rng,
                        );
                        let convs: Vec<Conv1d> = config
                            .kernels
                            .iter()
                            .map(|&k| {
                                Conv1d::new(&mut params, &format!("{name}.conv{k}"), k, attention.width(), config.channels, &mut rng)
                            })
                            .collect();
                        let projection = Linear::new(
                            &mut params,
                            &format!("{name}.projection"),
                            config.channels * convs.len(),
                            config.intent_dim,
                            &mut rng,
                        );
                        Extractor::MultiView {
                            attention,
                            convs,
                            projection,
                        }
                    }
                }
            })
            .collect();
        let aggregator = match config.variant {
            Variant::WoIa => Aggregator::Uniform,
            _ => Aggregator::Gated {
                pool_score: params.add_normal("gate.pool_score", (dim, 1), (1.0 / dim as f64).sqrt(), &mut rng),
                gate: Linear::new(&mut params, "gate.linear", dim, 3, &mut rng),
            },
        };
        let heads = Task::ALL
            .iter()
            .map(|t| {
                SigmoidMlp::new(
                    &mut params,
                    &format!("head.{}", t.name()),
                    config.intent_dim,
                    config.hidden,
                    t.classes(),
                    &mut rng,
                )
            })
            .collect();
        Ok(Self {
            config,
            encoder,
            params,
            embedding,
            extractors,
            aggregator,
            heads,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Final-layer parameters (weight, bias) of a task head.
    pub fn head_output_params(&self, task: Task) -> (ParamId, ParamId) {
        let out = self.heads[task.index()].out;
        (out.weight, out.bias)
    }

    pub fn encode_article(&self, article: &nint_core::NewsArticle) -> EncodedText {
        self.encoder.encode_article(article, self.config.max_len)
    }

    /// Builds a training example from an article's first annotation.
    pub fn example(&self, article: &nint_core::NewsArticle) -> Result<Example, ModelError> {
        let ann = article
            .primary_annotation()
            .ok_or_else(|| ModelError::MissingLabels(article.id.clone()))?;
        Ok(Example {
            id: article.id.clone(),
            text: self.encode_article(article),
            targets: nint_core::taxonomy::label_tensor(ann),
        })
    }

    pub fn embed(&self, text: &EncodedText) -> TokenMatrix {
        let dim = self.encoder.dim();
        let values = match (&text.features, self.embedding) {
            (TokenFeatures::Hashed(ids), Some(table)) => {
                let table = self.params.get(table);
                let mut w = Array2::zeros((ids.len(), dim));
                for (mut row, bucket_ids) in w.rows_mut().into_iter().zip(ids) {
                    if bucket_ids.is_empty() {
                        continue;
                    }
                    for &b in bucket_ids {
                        row += &table.row(b);
                    }
                    row /= bucket_ids.len() as f64;
                }
                w
            }
            (TokenFeatures::Fixed(rows), _) => rows.clone(),
            (TokenFeatures::Hashed(_), None) => {
                panic!("hashed features given to a table encoder")
            }
        };
        TokenMatrix {
            values,
            mask: text.mask.clone(),
        }
    }

    fn embed_backward(&self, text: &EncodedText, dw: &Array2<f64>, grads: &mut Grads) {
        if let (TokenFeatures::Hashed(ids), Some(table)) = (&text.features, self.embedding) {
            let gt = grads.get_mut(table);
            for (j, bucket_ids) in ids.iter().enumerate() {
                if bucket_ids.is_empty() || !text.mask[j] {
                    continue;
                }
                let share = &dw.row(j) / bucket_ids.len() as f64;
                for &b in bucket_ids {
                    let mut row = gt.row_mut(b);
                    row += &share;
                }
            }
        }
    }

    pub fn forward_matrix(&self, tm: &TokenMatrix) -> Result<Forward, ModelError> {
        if tm.dim() != self.encoder.dim() {
            return Err(ModelError::ShapeMismatch(format!(
                "token dim {} vs encoder dim {}",
                tm.dim(),
                self.encoder.dim()
            )));
        }
        if tm.mask.len() != tm.len() || !tm.mask.iter().any(|m| *m) {
            return Err(ModelError::ShapeMismatch("mask must cover rows and keep one token".into()));
        }
        let p = &self.params;
        let x = &tm.values;
        let mask = &tm.mask;
        let mut features = Vec::with_capacity(3);
        let mut extractor_caches = Vec::with_capacity(3);
        for ex in &self.extractors {
            let (f, c) = ex.forward(p, x, mask);
            features.push(f);
            extractor_caches.push(c);
        }
        let features: [Array2<f64>; 3] = features.try_into().expect("three extractors");
        let (gate_weights, gate_cache) = match &self.aggregator {
            Aggregator::Uniform => ([1.0 / 3.0; 3], None),
            Aggregator::Gated { pool_score, gate } => {
                let scores = x.dot(p.get(*pool_score)).column(0).to_vec();
                let alpha = masked_softmax(&scores, mask);
                let mut context = masked_mean(x, mask);
                for (j, a) in alpha.iter().enumerate() {
                    if *a != 0.0 {
                        let mut row = context.row_mut(0);
                        row.scaled_add(*a, &x.row(j));
                    }
                }
                let logits = gate.forward(p, &context);
                let m = masked_softmax(logits.row(0).as_slice().unwrap(), &[true; 3]);
                ([m[0], m[1], m[2]], Some(GateCache { alpha, context }))
            }
        };
        let mut intent = Array2::zeros(features[0].raw_dim());
        for (w, f) in gate_weights.iter().zip(&features) {
            intent.scaled_add(*w, f);
        }
        let head_inputs = [&features[0], &features[1], &features[2], &intent];
        let head_caches: Vec<MlpCache> = self
            .heads
            .iter()
            .zip(head_inputs)
            .map(|(h, input)| h.forward(p, input))
            .collect();
        let outputs: [Vec<f64>; 4] = std::array::from_fn(|t| head_caches[t].probs.row(0).to_vec());
        Ok(Forward {
            features,
            intent,
            gate_weights,
            outputs,
            extractor_caches,
            gate_cache,
            head_caches,
        })
    }

    pub fn forward(&self, text: &EncodedText) -> Result<Forward, ModelError> {
        self.forward_matrix(&self.embed(text))
    }

    pub fn predict(&self, text: &EncodedText) -> Result<Prediction, ModelError> {
        Ok(Prediction::from_outputs(&self.forward(text)?.outputs))
    }

    /// Per-task summed BCE; disabled tasks count 0 toward the total.
    pub fn losses(&self, fwd: &Forward, targets: &LabelTensor) -> TaskLosses {
        let mut per_task = [0.0; 4];
        let mut total = 0.0;
        for (task, target) in Task::ALL.into_iter().zip(targets.tasks()) {
            let l = bce_sum(&fwd.outputs[task.index()], target);
            per_task[task.index()] = l;
            if self.config.variant.task_enabled(task) {
                total += l;
            }
        }
        TaskLosses { per_task, total }
    }

    /// Backpropagates `scale · L_all` for one example into `grads` and
    /// returns the gradient with respect to the token matrix.
    pub fn backward(
        &self,
        tm: &TokenMatrix,
        fwd: &Forward,
        targets: &LabelTensor,
        scale: f64,
        grads: &mut Grads,
    ) -> Array2<f64> {
        let p = &self.params;
        let mut dfeatures: [Array2<f64>; 3] = std::array::from_fn(|i| Array2::zeros(fwd.features[i].raw_dim()));
        let mut dintent = Array2::zeros(fwd.intent.raw_dim());
        for (task, target) in Task::ALL.into_iter().zip(targets.tasks()) {
            if !self.config.variant.task_enabled(task) {
                continue;
            }
            let t = task.index();
            let dlogits: Vec<f64> = bce_logit_grad(&fwd.outputs[t], target)
                .into_iter()
                .map(|v| v * scale)
                .collect();
            let dlogits = Array2::from_shape_vec((1, dlogits.len()), dlogits).unwrap();
            let input = if t < 3 { &fwd.features[t] } else { &fwd.intent };
            let dinput = self.heads[t].backward(p, grads, input, &fwd.head_caches[t], &dlogits);
            if t < 3 {
                dfeatures[t] += &dinput;
            } else {
                dintent += &dinput;
            }
        }

        let x = &tm.values;
        let mask = &tm.mask;
        let mut dx = Array2::zeros(x.raw_dim());
        let dweights: Vec<f64> = fwd.features.iter().map(|f| (f * &dintent).sum()).collect();
        for (df, w) in dfeatures.iter_mut().zip(fwd.gate_weights) {
            df.scaled_add(w, &dintent);
        }
        if let (Aggregator::Gated { pool_score, gate }, Some(cache)) = (&self.aggregator, &fwd.gate_cache) {
            let dlogits = softmax_backward(&fwd.gate_weights, &dweights);
            let dlogits = Array2::from_shape_vec((1, 3), dlogits).unwrap();
            let dcontext = gate.backward(p, grads, &cache.context, &dlogits);
            dx += &masked_mean_backward(&dcontext, mask);
            let dctx = dcontext.row(0);
            let dalpha: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&dctx)).collect();
            for (j, a) in cache.alpha.iter().enumerate() {
                if *a != 0.0 {
                    let mut row = dx.row_mut(j);
                    row.scaled_add(*a, &dctx);
                }
            }
            let dscores = softmax_backward(&cache.alpha, &dalpha);
            let dscores = Array2::from_shape_vec((dscores.len(), 1), dscores).unwrap();
            *grads.get_mut(*pool_score) += &x.t().dot(&dscores);
            dx += &dscores.dot(&p.get(*pool_score).t());
        }
        for ((ex, cache), df) in self.extractors.iter().zip(&fwd.extractor_caches).zip(&dfeatures) {
            dx += &ex.backward(p, grads, x, mask, cache, df);
        }
        for (mut row, keep) in dx.rows_mut().into_iter().zip(mask) {
            if !keep {
                row.fill(0.0);
            }
        }
        dx
    }

    /// Gradient of `upstream · F_t` with respect to the token matrix, through
    /// the component's extractor only.
    pub fn extractor_input_gradient(
        &self,
        tm: &TokenMatrix,
        fwd: &Forward,
        component: Component,
        upstream: &Array2<f64>,
    ) -> Array2<f64> {
        let mut scratch = self.params.zeros_like();
        let i = component.index();
        let mut dx = self.extractors[i].backward(
            &self.params,
            &mut scratch,
            &tm.values,
            &tm.mask,
            &fwd.extractor_caches[i],
            upstream,
        );
        for (mut row, keep) in dx.rows_mut().into_iter().zip(&tm.mask) {
            if !keep {
                row.fill(0.0);
            }
        }
        dx
    }

    /// Mean total loss over a batch.
    pub fn batch_loss(&self, batch: &[Example]) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for ex in batch {
            let fwd = self.forward(&ex.text)?;
            total += self.losses(&fwd, &ex.targets).total;
        }
        Ok(total / batch.len().max(1) as f64)
    }

    /// Mean total loss over a batch and its gradient for every parameter.
    pub fn loss_and_grads(&self, batch: &[Example]) -> Result<(f64, Grads), ModelError> {
        let mut grads = self.params.zeros_like();
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut total = 0.0;
        for ex in batch {
            let tm = self.embed(&ex.text);
            let fwd = self.forward_matrix(&tm)?;
            total += self.losses(&fwd, &ex.targets).total;
            let dx = self.backward(&tm, &fwd, &ex.targets, scale, &mut grads);
            self.embed_backward(&ex.text, &dx, &mut grads);
        }
        if let Some(id) = grads.first_non_finite() {
            return Err(ModelError::NonFiniteGradient(self.params.name(id).to_string()));
        }
        Ok((total * scale, grads))
    }

    /// Mean total loss plus a fingerprint of the non-smooth decisions taken
    /// on the way (ReLU signs, loss clipping). Finite differences are only
    /// meaningful while the fingerprint stays constant.
    pub fn loss_and_kink_signature(&self, batch: &[Example]) -> Result<(f64, u64), ModelError> {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bit: bool| {
            h ^= u64::from(bit);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        let mut total = 0.0;
        for ex in batch {
            let fwd = self.forward(&ex.text)?;
            total += self.losses(&fwd, &ex.targets).total;
            for cache in &fwd.head_caches {
                for v in cache.pre.iter() {
                    feed(*v > 0.0);
                }
            }
            for out in &fwd.outputs {
                for p in out {
                    feed(*p <= crate::loss::CLIP_EPS || *p >= 1.0 - crate::loss::CLIP_EPS);
                }
            }
        }
        Ok((total / batch.len().max(1) as f64, h))
    }

    pub(crate) fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self, ModelError> {
        let mut model = Self::new(config)?;
        if model.params.len() != params.len() {
            return Err(ModelError::Checkpoint(format!(
                "expected {} tensors, found {}",
                model.params.len(),
                params.len()
            )));
        }
        for id in model.params.ids().collect::<Vec<_>>() {
            let name = model.params.name(id).to_string();
            let src = params
                .find(&name)
                .ok_or_else(|| ModelError::Checkpoint(format!("missing tensor {name}")))?;
            let value = params.get(src);
            if value.raw_dim() != model.params.get(id).raw_dim() {
                return Err(ModelError::Checkpoint(format!("tensor {name} has wrong shape")));
            }
            model.params.get_mut(id).assign(value);
        }
        Ok(model)
    }
}
