//! Synthetic downstream sets for checking the fusion harness.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::features::FeatureSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownstreamSpec {
    pub articles: usize,
    pub intent_dim: usize,
    pub task_dim: usize,
    /// Standard deviation of the noise added to the regression target.
    pub noise: f64,
    pub seed: u64,
}

impl Default for DownstreamSpec {
    fn default() -> Self {
        Self {
            articles: 600,
            intent_dim: 8,
            task_dim: 8,
            noise: 0.1,
            seed: 0,
        }
    }
}

/// Which features carry the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalSource {
    Intent,
    Task,
}

#[derive(Debug, Clone)]
pub struct DownstreamSet {
    pub ids: Vec<String>,
    pub intent: FeatureSet,
    pub task: FeatureSet,
    /// Binary label: sign of a fixed linear form of the signal features.
    pub classes: BTreeMap<String, usize>,
    /// Linear form of the signal features plus Gaussian noise.
    pub popularity: BTreeMap<String, f64>,
}

impl DownstreamSet {
    /// First `train_fraction` of the ids for training, the rest for testing.
    pub fn split(&self, train_fraction: f64) -> (Vec<String>, Vec<String>) {
        let cut = ((self.ids.len() as f64) * train_fraction).round() as usize;
        (self.ids[..cut].to_vec(), self.ids[cut..].to_vec())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Both feature blocks are standard Gaussian; only `signal` determines the
/// labels, so the other block is pure noise.
pub fn downstream_set(spec: &DownstreamSpec, signal: SignalSource) -> DownstreamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let signal_dim = match signal {
        SignalSource::Intent => spec.intent_dim,
        SignalSource::Task => spec.task_dim,
    };
    let w = gaussian(&mut rng, signal_dim);
    let mut set = DownstreamSet {
        ids: Vec::with_capacity(spec.articles),
        intent: FeatureSet::new(spec.intent_dim),
        task: FeatureSet::new(spec.task_dim),
        classes: BTreeMap::new(),
        popularity: BTreeMap::new(),
    };
    for i in 0..spec.articles {
        let id = format!("s{i:05}");
        let intent = gaussian(&mut rng, spec.intent_dim);
        let task = gaussian(&mut rng, spec.task_dim);
        let source = match signal {
            SignalSource::Intent => &intent,
            SignalSource::Task => &task,
        };
        let score: f64 = w.iter().zip(source).map(|(a, b)| a * b).sum();
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * spec.noise;
        set.classes.insert(id.clone(), usize::from(score > 0.0));
        set.popularity.insert(id.clone(), score + noise);
        set.intent.insert(id.clone(), intent).expect("dim matches");
        set.task.insert(id.clone(), task).expect("dim matches");
        set.ids.push(id);
    }
    set
}
