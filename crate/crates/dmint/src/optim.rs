//! Adam optimiser.

use serde::{Deserialize, Serialize};

use crate::params::{Grads, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: Grads,
    v: Grads,
    step: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        Self {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn update(&mut self, params: &mut ParamStore, grads: &Grads) {
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        for id in params.ids().collect::<Vec<_>>() {
            let g = grads.get(id);
            let m = self.m.get_mut(id);
            m.zip_mut_with(g, |m, g| *m = beta1 * *m + (1.0 - beta1) * g);
            let v = self.v.get_mut(id);
            v.zip_mut_with(g, |v, g| *v = beta2 * *v + (1.0 - beta2) * g * g);
            let (m, v) = (self.m.get(id), self.v.get(id));
            let p = params.get_mut(id);
            ndarray::Zip::from(p).and(m).and(v).for_each(|p, m, v| {
                *p -= lr * (m / c1) / ((v / c2).sqrt() + eps);
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut store = ParamStore::new();
        let id = store.add("w", array![[1.0, -2.0, 0.0]]);
        let mut grads = store.zeros_like();
        *grads.get_mut(id) = array![[3.0, -0.5, 0.0]];
        let mut adam = Adam::new(AdamConfig { lr: 0.1, ..Default::default() }, &store);
        adam.update(&mut store, &grads);
        let w = store.get(id);
        assert!((w[[0, 0]] - 0.9).abs() < 1e-8);
        assert!((w[[0, 1]] + 1.9).abs() < 1e-8);
        assert_eq!(w[[0, 2]], 0.0);
    }

    #[test]
    fn minimises_quadratic() {
        let mut store = ParamStore::new();
        let id = store.add("w", array![[5.0]]);
        let mut adam = Adam::new(AdamConfig { lr: 0.1, ..Default::default() }, &store);
        for _ in 0..500 {
            let mut g = store.zeros_like();
            *g.get_mut(id) = store.get(id).mapv(|w| 2.0 * (w - 1.0));
            adam.update(&mut store, &g);
        }
        assert!((store.get(id)[[0, 0]] - 1.0).abs() < 1e-2);
    }
}
