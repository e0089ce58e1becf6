//! Layers with explicit forward caches and backward passes.
//!
//! Every `backward` accumulates parameter gradients into a [`Grads`] buffer
//! and returns the gradient with respect to the layer input.

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;

use crate::params::{Grads, ParamId, ParamStore};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax over the entries where `keep` is true; the rest get 0.
pub fn masked_softmax(scores: &[f64], keep: &[bool]) -> Vec<f64> {
    let max = scores
        .iter()
        .zip(keep)
        .filter(|(_, k)| **k)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores
        .iter()
        .zip(keep)
        .map(|(s, k)| if *k { (s - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

/// Backward of softmax: given p and dL/dp, returns dL/dscores.
pub fn softmax_backward(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    p.iter().zip(dp).map(|(pi, dpi)| pi * (dpi - dot)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    /// Weights ~ N(0, 1/input), zero bias.
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let weight = store.add_normal(format!("{name}.weight"), (input, output), (1.0 / input as f64).sqrt(), rng);
        let bias = store.add_zeros(format!("{name}.bias"), (1, output));
        Self {
            weight,
            bias,
            input,
            output,
        }
    }

    pub fn forward(&self, p: &ParamStore, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(p.get(self.weight));
        y += p.get(self.bias);
        y
    }

    pub fn backward(&self, p: &ParamStore, g: &mut Grads, x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        *g.get_mut(self.weight) += &x.t().dot(dy);
        *g.get_mut(self.bias) += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        dy.dot(&p.get(self.weight).t())
    }
}

/// Two-layer perceptron `linear → ReLU → linear → sigmoid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidMlp {
    pub hidden: Linear,
    pub out: Linear,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    pub pre: Array2<f64>,
    pub act: Array2<f64>,
    pub logits: Array2<f64>,
    pub probs: Array2<f64>,
}

impl SigmoidMlp {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self {
            hidden: Linear::new(store, &format!("{name}.hidden"), input, hidden, rng),
            out: Linear::new(store, &format!("{name}.out"), hidden, output, rng),
        }
    }

    pub fn forward(&self, p: &ParamStore, x: &Array2<f64>) -> MlpCache {
        let pre = self.hidden.forward(p, x);
        let act = pre.mapv(|v| v.max(0.0));
        let logits = self.out.forward(p, &act);
        let probs = logits.mapv(sigmoid);
        MlpCache {
            pre,
            act,
            logits,
            probs,
        }
    }

    /// `dlogits` is the gradient with respect to the pre-sigmoid outputs.
    pub fn backward(&self, p: &ParamStore, g: &mut Grads, x: &Array2<f64>, cache: &MlpCache, dlogits: &Array2<f64>) -> Array2<f64> {
        let dact = self.out.backward(p, g, &cache.act, dlogits);
        let mut dpre = dact;
        ndarray::Zip::from(&mut dpre)
            .and(&cache.pre)
            .for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
        self.hidden.backward(p, g, x, &dpre)
    }
}

/// Multi-head scaled dot-product self-attention without output projection.
/// Padding positions neither attend nor are attended to; their output rows
/// are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub heads: usize,
    pub head_dim: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// One `(L, L)` probability matrix per head.
    pub probs: Vec<Array2<f64>>,
    pub out: Array2<f64>,
}

impl SelfAttention {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, heads: usize, head_dim: usize, rng: &mut impl Rng) -> Self {
        let width = heads * head_dim;
        Self {
            query: Linear::new(store, &format!("{name}.query"), input, width, rng),
            key: Linear::new(store, &format!("{name}.key"), input, width, rng),
            value: Linear::new(store, &format!("{name}.value"), input, width, rng),
            heads,
            head_dim,
        }
    }

    pub fn width(&self) -> usize {
        self.heads * self.head_dim
    }

    pub fn forward(&self, p: &ParamStore, x: &Array2<f64>, mask: &[bool]) -> AttentionCache {
        let len = x.nrows();
        let q = self.query.forward(p, x);
        let k = self.key.forward(p, x);
        let v = self.value.forward(p, x);
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let mut out = Array2::zeros((len, self.width()));
        let mut probs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = s![.., h * self.head_dim..(h + 1) * self.head_dim];
            let scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            let mut pm = Array2::zeros((len, len));
            for i in (0..len).filter(|i| mask[*i]) {
                let row = masked_softmax(scores.row(i).as_slice().unwrap(), mask);
                pm.row_mut(i).assign(&Array1::from(row));
            }
            out.slice_mut(cols).assign(&pm.dot(&v.slice(cols)));
            probs.push(pm);
        }
        AttentionCache { q, k, v, probs, out }
    }

    pub fn backward(&self, p: &ParamStore, g: &mut Grads, x: &Array2<f64>, cache: &AttentionCache, dout: &Array2<f64>) -> Array2<f64> {
        let len = x.nrows();
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let mut dq = Array2::zeros(cache.q.raw_dim());
        let mut dk = Array2::zeros(cache.k.raw_dim());
        let mut dv = Array2::zeros(cache.v.raw_dim());
        for h in 0..self.heads {
            let cols = s![.., h * self.head_dim..(h + 1) * self.head_dim];
            let pm = &cache.probs[h];
            let dout_h = dout.slice(cols);
            dv.slice_mut(cols).assign(&pm.t().dot(&dout_h));
            let dp = dout_h.dot(&cache.v.slice(cols).t());
            let mut ds = Array2::zeros((len, len));
            for i in 0..len {
                let row = softmax_backward(pm.row(i).as_slice().unwrap(), dp.row(i).as_slice().unwrap());
                ds.row_mut(i).assign(&Array1::from(row));
            }
            dq.slice_mut(cols).assign(&(ds.dot(&cache.k.slice(cols)) * scale));
            dk.slice_mut(cols).assign(&(ds.t().dot(&cache.q.slice(cols)) * scale));
        }
        let mut dx = self.query.backward(p, g, x, &dq);
        dx += &self.key.backward(p, g, x, &dk);
        dx += &self.value.backward(p, g, x, &dv);
        dx
    }
}

/// Same-length 1-D convolution over positions. For kernel size `k` the
/// input is zero-padded with `(k - 1) / 2` rows before and `k / 2` after, so
/// even kernels lean forward by one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conv1d {
    /// Shape `(kernel * in_channels, out_channels)`, row `o * in + c`.
    pub weight: ParamId,
    pub bias: ParamId,
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl Conv1d {
    pub fn new(store: &mut ParamStore, name: &str, kernel: usize, in_channels: usize, out_channels: usize, rng: &mut impl Rng) -> Self {
        let fan_in = kernel * in_channels;
        let weight = store.add_normal(format!("{name}.weight"), (fan_in, out_channels), (1.0 / fan_in as f64).sqrt(), rng);
        let bias = store.add_zeros(format!("{name}.bias"), (1, out_channels));
        Self {
            weight,
            bias,
            kernel,
            in_channels,
            out_channels,
        }
    }

    pub fn left_pad(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// Unfolded input, shape `(L, kernel * in_channels)`.
    pub fn im2col(&self, x: &Array2<f64>) -> Array2<f64> {
        let len = x.nrows();
        let c = self.in_channels;
        let mut cols = Array2::zeros((len, self.kernel * c));
        for pos in 0..len {
            for o in 0..self.kernel {
                let src = pos as isize + o as isize - self.left_pad() as isize;
                if src >= 0 && (src as usize) < len {
                    cols.slice_mut(s![pos, o * c..(o + 1) * c]).assign(&x.row(src as usize));
                }
            }
        }
        cols
    }

    /// Returns `(unfolded input, pre-activation output)`.
    pub fn forward(&self, p: &ParamStore, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let cols = self.im2col(x);
        let mut z = cols.dot(p.get(self.weight));
        z += p.get(self.bias);
        (cols, z)
    }

    pub fn backward(&self, p: &ParamStore, g: &mut Grads, cols: &Array2<f64>, dz: &Array2<f64>) -> Array2<f64> {
        *g.get_mut(self.weight) += &cols.t().dot(dz);
        *g.get_mut(self.bias) += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dcols = dz.dot(&p.get(self.weight).t());
        let len = dz.nrows();
        let c = self.in_channels;
        let mut dx = Array2::zeros((len, c));
        for pos in 0..len {
            for o in 0..self.kernel {
                let src = pos as isize + o as isize - self.left_pad() as isize;
                if src >= 0 && (src as usize) < len {
                    let mut row = dx.row_mut(src as usize);
                    row += &dcols.slice(s![pos, o * c..(o + 1) * c]);
                }
            }
        }
        dx
    }
}

/// Mean over unmasked rows, as a `1 × d` matrix.
pub fn masked_mean(x: &Array2<f64>, mask: &[bool]) -> Array2<f64> {
    let n = mask.iter().filter(|m| **m).count().max(1) as f64;
    let mut acc = Array1::zeros(x.ncols());
    for (row, keep) in x.rows().into_iter().zip(mask) {
        if *keep {
            acc += &row;
        }
    }
    (acc / n).insert_axis(Axis(0))
}

/// Spreads the gradient of [`masked_mean`] back over unmasked rows.
pub fn masked_mean_backward(dmean: &Array2<f64>, mask: &[bool]) -> Array2<f64> {
    let n = mask.iter().filter(|m| **m).count().max(1) as f64;
    let mut dx = Array2::zeros((mask.len(), dmean.ncols()));
    for (mut row, keep) in dx.rows_mut().into_iter().zip(mask) {
        if *keep {
            row.assign(&(&dmean.row(0) / n));
        }
    }
    dx
}
