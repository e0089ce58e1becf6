//! Mini-batch training with early stopping on validation polarity macro-F1.

use log::info;
use nint_core::metrics::{argmax, classification_metrics, ClassificationReport};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{DmintModel, Example, Task};
use crate::optim::{Adam, AdamConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Epochs without validation improvement before stopping.
    #[serde(default)]
    pub patience: Option<usize>,
    /// Stop once the epoch's mean training loss falls below this value.
    #[serde(default)]
    pub target_loss: Option<f64>,
    #[serde(default)]
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            adam: AdamConfig::default(),
            patience: Some(5),
            target_loss: None,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean total loss over the epoch's mini-batches, before each update.
    pub train_loss: f64,
    pub val_polarity_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochMetrics>,
    /// Epoch whose parameters were kept (0 means the initial ones).
    pub best_epoch: usize,
    pub best_val_polarity_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReport {
    pub task: Task,
    pub macro_f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub examples: usize,
    pub mean_loss: f64,
    pub tasks: Vec<TaskReport>,
    pub polarity: ClassificationReport,
}

impl EvalReport {
    pub fn task(&self, task: Task) -> &TaskReport {
        &self.tasks[task.index()]
    }
}

/// Desire is scored as the mean over categories of the per-category
/// binary macro-F1; the other tasks are single-label argmax.
pub fn evaluate(model: &DmintModel, examples: &[Example]) -> Result<EvalReport, ModelError> {
    if examples.is_empty() {
        return Err(ModelError::Config("nothing to evaluate".into()));
    }
    let mut loss = 0.0;
    let mut preds: [Vec<usize>; 3] = Default::default();
    let mut golds: [Vec<usize>; 3] = Default::default();
    let mut desire_preds = vec![Vec::new(); 4];
    let mut desire_golds = vec![Vec::new(); 4];
    for ex in examples {
        let fwd = model.forward(&ex.text)?;
        loss += model.losses(&fwd, &ex.targets).total;
        for (slot, task) in [Task::Belief, Task::Plan, Task::Polarity].into_iter().enumerate() {
            preds[slot].push(argmax(fwd.output(task)));
            golds[slot].push(argmax(ex.targets.tasks()[task.index()]));
        }
        for k in 0..4 {
            desire_preds[k].push(usize::from(fwd.output(Task::Desire)[k] >= 0.5));
            desire_golds[k].push(usize::from(ex.targets.desire[k] >= 0.5));
        }
    }
    let metric_err = |e| ModelError::Config(format!("metrics: {e}"));
    let belief = classification_metrics(&preds[0], &golds[0], 3, 0).map_err(metric_err)?;
    let plan = classification_metrics(&preds[1], &golds[1], 2, 1).map_err(metric_err)?;
    let polarity = classification_metrics(&preds[2], &golds[2], 2, 0).map_err(metric_err)?;
    let mut desire_f1 = 0.0;
    let mut desire_acc = 0.0;
    for k in 0..4 {
        let r = classification_metrics(&desire_preds[k], &desire_golds[k], 2, 1).map_err(metric_err)?;
        desire_f1 += r.macro_f1 / 4.0;
        desire_acc += r.accuracy / 4.0;
    }
    let report = |task, r: &ClassificationReport| TaskReport {
        task,
        macro_f1: r.macro_f1,
        accuracy: r.accuracy,
    };
    Ok(EvalReport {
        examples: examples.len(),
        mean_loss: loss / examples.len() as f64,
        tasks: vec![
            report(Task::Belief, &belief),
            TaskReport {
                task: Task::Desire,
                macro_f1: desire_f1,
                accuracy: desire_acc,
            },
            report(Task::Plan, &plan),
            report(Task::Polarity, &polarity),
        ],
        polarity,
    })
}

/// Trains in place. With a validation set the parameters of the best
/// validation epoch are restored at the end; `epochs = 0` leaves the model
/// untouched.
pub fn train(
    model: &mut DmintModel,
    train_set: &[Example],
    val_set: &[Example],
    config: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    if config.batch_size == 0 {
        return Err(ModelError::Config("batch_size must be positive".into()));
    }
    let mut history = Vec::new();
    if config.epochs == 0 || train_set.is_empty() {
        return Ok(TrainOutcome {
            history,
            best_epoch: 0,
            best_val_polarity_macro_f1: None,
        });
    }
    let mut adam = Adam::new(config.adam, model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best: Option<(f64, usize, crate::params::ParamStore)> = None;
    let mut since_best = 0;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Example> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let (loss, grads) = model.loss_and_grads(&batch)?;
            adam.update(model.params_mut(), &grads);
            loss_sum += loss;
            batches += 1;
        }
        let train_loss = loss_sum / batches as f64;
        let val_f1 = if val_set.is_empty() {
            None
        } else {
            Some(evaluate(model, val_set)?.polarity.macro_f1)
        };
        info!("epoch {epoch}: loss {train_loss:.5} val polarity macro-F1 {val_f1:?}");
        history.push(EpochMetrics {
            epoch,
            train_loss,
            val_polarity_macro_f1: val_f1,
        });
        if let Some(f1) = val_f1 {
            if best.as_ref().map_or(true, |(b, _, _)| f1 > *b) {
                best = Some((f1, epoch, model.params().clone()));
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        if config.patience.is_some_and(|p| since_best >= p) {
            break;
        }
        if config.target_loss.is_some_and(|t| train_loss < t) {
            break;
        }
    }
    let last_epoch = history.last().map_or(0, |h| h.epoch);
    match best {
        Some((f1, epoch, params)) => {
            *model.params_mut() = params;
            Ok(TrainOutcome {
                history,
                best_epoch: epoch,
                best_val_polarity_macro_f1: Some(f1),
            })
        }
        None => Ok(TrainOutcome {
            history,
            best_epoch: last_epoch,
            best_val_polarity_macro_f1: None,
        }),
    }
}
