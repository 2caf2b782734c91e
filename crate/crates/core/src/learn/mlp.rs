//! Plain feed-forward network on f64, trained with adaptive moment
//! estimation. Three weight layers (two rectified hidden layers, linear
//! output head) is the shape every agent uses.

use rand_chacha::ChaCha8Rng;

use crate::env::standard_normal;

/// One affine layer, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    w: Vec<f64>,
    b: Vec<f64>,
    out: usize,
    inp: usize,
}

/// Dot product with four independent accumulators; the forward pass lives
/// on this, and the serial-sum version cannot keep the FMA units busy.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut rest = 0.0;
    for i in chunks * 4..n {
        rest += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + rest
}

/// Multi-layer perceptron: rectifier on hidden layers, identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    layers: Vec<Layer>,
}

impl Mlp {
    /// He-initialized network; the output head starts near zero so early
    /// Q-values are small.
    pub fn new(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (inp, out) = (dims[l], dims[l + 1]);
            let last = l == dims.len() - 2;
            let std = if last {
                0.01
            } else {
                (2.0 / inp as f64).sqrt()
            };
            let w = (0..out * inp)
                .map(|_| std * standard_normal(rng))
                .collect();
            layers.push(Layer {
                w,
                b: vec![0.0; out],
                out,
                inp,
            });
        }
        Self {
            dims: dims.to_vec(),
            layers,
        }
    }

    /// All-zero network (useful for tests and hand-constructed nets).
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2);
        let layers = dims
            .windows(2)
            .map(|w| Layer {
                w: vec![0.0; w[0] * w[1]],
                b: vec![0.0; w[1]],
                out: w[1],
                inp: w[0],
            })
            .collect();
        Self {
            dims: dims.to_vec(),
            layers,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flattened parameters, layer by layer, weights then biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut off = 0;
        for l in &mut self.layers {
            let wn = l.w.len();
            l.w.copy_from_slice(&params[off..off + wn]);
            off += wn;
            let bn = l.b.len();
            l.b.copy_from_slice(&params[off..off + bn]);
            off += bn;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }

    /// Q-values for one observation.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let mut cur = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out];
            for o in 0..layer.out {
                let row = &layer.w[o * layer.inp..(o + 1) * layer.inp];
                next[o] = layer.b[o] + dot(row, &cur);
            }
            if li + 1 < self.layers.len() {
                for v in &mut next {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Forward a row-major batch, keeping every post-activation for backprop.
    /// `acts[0]` is the input, `acts.last()` the linear output.
    fn forward_batch(&self, xs: &[f64], n: usize) -> Vec<Vec<f64>> {
        assert_eq!(xs.len(), n * self.input_dim());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(xs.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let prev = &acts[li];
            let mut cur = vec![0.0; n * layer.out];
            // Weight-row-outer order keeps each row of W in cache across the
            // whole batch instead of streaming the matrix once per sample.
            for o in 0..layer.out {
                let row = &layer.w[o * layer.inp..(o + 1) * layer.inp];
                let bias = layer.b[o];
                for i in 0..n {
                    let x = &prev[i * layer.inp..(i + 1) * layer.inp];
                    cur[i * layer.out + o] = bias + dot(row, x);
                }
            }
            if li + 1 < self.layers.len() {
                for v in cur.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(cur);
        }
        acts
    }

    /// Row-wise max of the output head over a batch.
    pub fn max_q_batch(&self, xs: &[f64], n: usize) -> Vec<f64> {
        let acts = self.forward_batch(xs, n);
        let out = acts.last().unwrap();
        let odim = self.output_dim();
        (0..n)
            .map(|i| {
                out[i * odim..(i + 1) * odim]
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }
}

/// A batch for the temporal-difference loss: observations row-major, the
/// action taken per row, the bootstrap target per row, and an importance
/// weight per row.
pub struct TdBatch<'a> {
    pub obs: &'a [f64],
    pub actions: &'a [usize],
    pub targets: &'a [f64],
    pub weights: &'a [f64],
    pub n: usize,
}

/// Importance-weighted mean squared TD error on the taken actions only.
pub fn td_loss(net: &Mlp, batch: &TdBatch) -> f64 {
    let acts = net.forward_batch(batch.obs, batch.n);
    let out = acts.last().unwrap();
    let odim = net.output_dim();
    let mut loss = 0.0;
    for i in 0..batch.n {
        let q = out[i * odim + batch.actions[i]];
        let e = q - batch.targets[i];
        loss += batch.weights[i] * e * e;
    }
    loss / batch.n as f64
}

/// Analytic gradient of [`td_loss`] with respect to every parameter
/// (flattened in `params_flat` order), plus the absolute per-sample TD
/// errors and the loss itself.
pub fn td_backward(net: &Mlp, batch: &TdBatch) -> (Vec<f64>, Vec<f64>, f64) {
    let n = batch.n;
    let odim = net.output_dim();
    let acts = net.forward_batch(batch.obs, n);
    let out = acts.last().unwrap();

    let mut loss = 0.0;
    let mut td_abs = vec![0.0; n];
    // Seed gradient at the output: only the taken action carries error.
    let mut delta = vec![0.0; n * odim];
    for i in 0..n {
        let q = out[i * odim + batch.actions[i]];
        let e = q - batch.targets[i];
        td_abs[i] = e.abs();
        loss += batch.weights[i] * e * e;
        delta[i * odim + batch.actions[i]] = 2.0 * batch.weights[i] * e / n as f64;
    }
    loss /= n as f64;

    let mut grads_by_layer: Vec<(Vec<f64>, Vec<f64>)> = net
        .layers
        .iter()
        .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
        .collect();

    for li in (0..net.layers.len()).rev() {
        let layer = &net.layers[li];
        let prev = &acts[li];
        let (gw, gb) = &mut grads_by_layer[li];
        // Weight-row-outer order for cache locality (see forward_batch).
        for o in 0..layer.out {
            let grow = &mut gw[o * layer.inp..(o + 1) * layer.inp];
            let mut gbias = 0.0;
            for i in 0..n {
                let dv = delta[i * layer.out + o];
                if dv == 0.0 {
                    continue;
                }
                gbias += dv;
                let x = &prev[i * layer.inp..(i + 1) * layer.inp];
                for k in 0..layer.inp {
                    grow[k] += dv * x[k];
                }
            }
            gb[o] = gbias;
        }
        if li > 0 {
            // Propagate through the rectifier of the previous layer.
            let mut prev_delta = vec![0.0; n * layer.inp];
            for o in 0..layer.out {
                let row = &layer.w[o * layer.inp..(o + 1) * layer.inp];
                for i in 0..n {
                    let dv = delta[i * layer.out + o];
                    if dv == 0.0 {
                        continue;
                    }
                    let pd = &mut prev_delta[i * layer.inp..(i + 1) * layer.inp];
                    for k in 0..layer.inp {
                        pd[k] += dv * row[k];
                    }
                }
            }
            for i in 0..n {
                let a = &acts[li][i * layer.inp..(i + 1) * layer.inp];
                let pd = &mut prev_delta[i * layer.inp..(i + 1) * layer.inp];
                for k in 0..layer.inp {
                    if a[k] <= 0.0 {
                        pd[k] = 0.0;
                    }
                }
            }
            delta = prev_delta;
        }
    }

    let mut flat = Vec::with_capacity(net.param_count());
    for (gw, gb) in grads_by_layer {
        flat.extend_from_slice(&gw);
        flat.extend_from_slice(&gb);
    }
    (flat, td_abs, loss)
}

/// Adaptive moment estimation over the flattened parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
