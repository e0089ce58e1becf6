//! Late fusion: a two-layer MLP over `[intent features, task features]`,
//! always trained alongside a control that sees the task features only.

use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use nint_core::metrics::{argmax, classification_metrics, regression_metrics, ClassificationReport, RegressionReport};
use nint_dmint::loss::{bce_logit_grad, bce_sum};
use nint_dmint::nn::{sigmoid, Linear};
use nint_dmint::optim::{Adam, AdamConfig};
use nint_dmint::params::{Grads, ParamStore};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::features::{FeatureSet, IntentSource};

/// Gold values per article id.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes {
        labels: BTreeMap<String, usize>,
        classes: usize,
        /// Class whose F1 is reported separately, e.g. "fake".
        positive_class: usize,
    },
    Values(BTreeMap<String, f64>),
}

impl Targets {
    fn outputs(&self) -> usize {
        match self {
            Targets::Classes { classes, .. } => *classes,
            Targets::Values(_) => 1,
        }
    }

    fn has(&self, id: &str) -> bool {
        match self {
            Targets::Classes { labels, .. } => labels.contains_key(id),
            Targets::Values(v) => v.contains_key(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSpec {
    /// Recorded for provenance; the caller extracts features accordingly.
    pub intent_source: IntentSource,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for FusionSpec {
    fn default() -> Self {
        Self {
            intent_source: IntentSource::Intent,
            hidden: 64,
            epochs: 100,
            batch_size: 32,
            lr: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskReport {
    Classification(ClassificationReport),
    Regression(RegressionReport),
}

impl TaskReport {
    pub fn macro_f1(&self) -> Option<f64> {
        match self {
            TaskReport::Classification(r) => Some(r.macro_f1),
            TaskReport::Regression(_) => None,
        }
    }

    pub fn rmse(&self) -> Option<f64> {
        match self {
            TaskReport::Classification(_) => None,
            TaskReport::Regression(r) => Some(r.rmse),
        }
    }
}

/// Trained head with the input standardization it was fitted with.
#[derive(Debug, Clone)]
pub struct FusionHead {
    params: ParamStore,
    hidden: Linear,
    out: Linear,
    shift: Vec<f64>,
    scale: Vec<f64>,
    /// Regression target standardization `(mean, sd)`.
    target_scale: Option<(f64, f64)>,
}

impl FusionHead {
    fn new(input: usize, hidden: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut params = ParamStore::new();
        let hidden_layer = Linear::new(&mut params, "fusion.hidden", input, hidden, rng);
        let out = Linear::new(&mut params, "fusion.out", hidden, outputs, rng);
        Self {
            params,
            hidden: hidden_layer,
            out,
            shift: vec![0.0; input],
            scale: vec![1.0; input],
            target_scale: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.input
    }

    fn standardize(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.clone();
        for (mut col, (s, k)) in z.axis_iter_mut(Axis(1)).zip(self.shift.iter().zip(&self.scale)) {
            col.mapv_inplace(|v| (v - s) / k);
        }
        z
    }

    /// Pre-activation outputs plus the hidden activations.
    fn forward(&self, z: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let pre = self.hidden.forward(&self.params, z);
        let act = pre.mapv(|v| v.max(0.0));
        let logits = self.out.forward(&self.params, &act);
        (pre, act, logits)
    }

    /// Class probabilities (classification) or predicted values (regression).
    pub fn predict(&self, x: &Array2<f64>) -> Array2<f64> {
        let (_, _, logits) = self.forward(&self.standardize(x));
        match self.target_scale {
            Some((m, s)) => logits.mapv(|v| v * s + m),
            None => logits.mapv(sigmoid),
        }
    }

    /// Mean loss over the rows of `z` (already standardized) and its gradient.
    fn loss_and_grads(&self, z: &Array2<f64>, y: &Array2<f64>) -> (f64, Grads) {
        let n = z.nrows() as f64;
        let (pre, act, logits) = self.forward(z);
        let mut dlogits = Array2::zeros(logits.raw_dim());
        let mut loss = 0.0;
        if self.target_scale.is_some() {
            for ((d, &o), &t) in dlogits.iter_mut().zip(&logits).zip(y) {
                loss += (o - t) * (o - t);
                *d = 2.0 * (o - t) / n;
            }
        } else {
            for ((mut d, l), t) in dlogits.rows_mut().into_iter().zip(logits.rows()).zip(y.rows()) {
                let p: Vec<f64> = l.iter().map(|v| sigmoid(*v)).collect();
                let t = t.to_vec();
                loss += bce_sum(&p, &t);
                for (di, gi) in d.iter_mut().zip(bce_logit_grad(&p, &t)) {
                    *di = gi / n;
                }
            }
        }
        let mut grads = self.params.zeros_like();
        let mut dpre = self.out.backward(&self.params, &mut grads, &act, &dlogits);
        dpre.zip_mut_with(&pre, |d, &p| {
            if p <= 0.0 {
                *d = 0.0;
            }
        });
        self.hidden.backward(&self.params, &mut grads, z, &dpre);
        (loss / n, grads)
    }
}

#[derive(Debug, Clone)]
pub struct FusionRun {
    /// Columns the head consumed; the control never includes intent features.
    pub input_dim: usize,
    pub report: TaskReport,
    pub final_train_loss: f64,
    pub head: FusionHead,
}

#[derive(Debug, Clone)]
pub struct FusionOutcome {
    pub fused: FusionRun,
    pub control: FusionRun,
}

fn rows(ids: &[String], sources: &[&FeatureSet]) -> Result<Array2<f64>, EvalError> {
    let dim: usize = sources.iter().map(|s| s.dim()).sum();
    let mut x = Array2::zeros((ids.len(), dim));
    for (mut row, id) in x.rows_mut().into_iter().zip(ids) {
        let mut v = Vec::with_capacity(dim);
        for s in sources {
            v.extend_from_slice(s.get(id).ok_or_else(|| EvalError::Alignment(id.clone()))?);
        }
        row.assign(&ndarray::ArrayView1::from(v.as_slice()));
    }
    Ok(x)
}

fn target_matrix(ids: &[String], targets: &Targets) -> Array2<f64> {
    let mut y = Array2::zeros((ids.len(), targets.outputs()));
    for (i, id) in ids.iter().enumerate() {
        match targets {
            Targets::Classes { labels, .. } => y[[i, labels[id]]] = 1.0,
            Targets::Values(v) => y[[i, 0]] = v[id],
        }
    }
    y
}

fn train_head(x: &Array2<f64>, y: &Array2<f64>, regression: bool, spec: &FusionSpec) -> (FusionHead, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut head = FusionHead::new(x.ncols(), spec.hidden, y.ncols(), &mut rng);
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        let m = col.mean().unwrap_or(0.0);
        let sd = col.std(0.0);
        head.shift[j] = m;
        head.scale[j] = if sd > 1e-12 { sd } else { 1.0 };
    }
    let z = head.standardize(x);
    let mut y = y.clone();
    if regression {
        let m = y.mean().unwrap_or(0.0);
        let sd = y.std(0.0);
        let sd = if sd > 1e-12 { sd } else { 1.0 };
        y.mapv_inplace(|v| (v - m) / sd);
        head.target_scale = Some((m, sd));
    }
    let mut adam = Adam::new(
        AdamConfig {
            lr: spec.lr,
            ..AdamConfig::default()
        },
        &head.params,
    );
    let mut order: Vec<usize> = (0..z.nrows()).collect();
    let batch = spec.batch_size.max(1);
    for _ in 0..spec.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let zb = z.select(Axis(0), chunk);
            let yb = y.select(Axis(0), chunk);
            let (_, grads) = head.loss_and_grads(&zb, &yb);
            adam.update(&mut head.params, &grads);
        }
    }
    let (loss, _) = head.loss_and_grads(&z, &y);
    (head, loss)
}

fn evaluate(head: &FusionHead, x: &Array2<f64>, ids: &[String], targets: &Targets) -> Result<TaskReport, EvalError> {
    let out = head.predict(x);
    Ok(match targets {
        Targets::Classes {
            labels,
            classes,
            positive_class,
        } => {
            let preds: Vec<usize> = out.rows().into_iter().map(|r| argmax(r.as_slice().unwrap())).collect();
            let golds: Vec<usize> = ids.iter().map(|id| labels[id]).collect();
            TaskReport::Classification(classification_metrics(&preds, &golds, *classes, *positive_class)?)
        }
        Targets::Values(values) => {
            let preds: Vec<f64> = out.column(0).to_vec();
            let golds: Vec<f64> = ids.iter().map(|id| values[id]).collect();
            TaskReport::Regression(regression_metrics(&preds, &golds)?)
        }
    })
}

/// Trains the fused head and the task-only control on `train_ids` and
/// scores both on `test_ids`.
pub fn fuse_and_train(
    intent: &FeatureSet,
    task: &FeatureSet,
    targets: &Targets,
    train_ids: &[String],
    test_ids: &[String],
    spec: &FusionSpec,
) -> Result<FusionOutcome, EvalError> {
    if train_ids.is_empty() || test_ids.is_empty() {
        return Err(EvalError::Metric(nint_core::metrics::MetricError::EmptyInput));
    }
    for id in train_ids.iter().chain(test_ids) {
        if !targets.has(id) {
            return Err(EvalError::Alignment(id.clone()));
        }
    }
    if let Targets::Classes { labels, classes, .. } = targets {
        if let Some((id, l)) = labels.iter().find(|(_, l)| **l >= *classes) {
            return Err(EvalError::Shape(format!("{id}: label {l} outside 0..{classes}")));
        }
    }
    let regression = matches!(targets, Targets::Values(_));
    let y_train = target_matrix(train_ids, targets);
    let run = |sources: &[&FeatureSet]| -> Result<FusionRun, EvalError> {
        let x_train = rows(train_ids, sources)?;
        let x_test = rows(test_ids, sources)?;
        let (head, final_train_loss) = train_head(&x_train, &y_train, regression, spec);
        Ok(FusionRun {
            input_dim: head.input_dim(),
            report: evaluate(&head, &x_test, test_ids, targets)?,
            final_train_loss,
            head,
        })
    };
    let fused = run(&[intent, task])?;
    let control = run(&[task])?;
    Ok(FusionOutcome { fused, control })
}
