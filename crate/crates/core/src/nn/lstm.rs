//! Stacked LSTM with a linear output head.
//!
//! Gate equations, per layer and time step:
//!
//! ```text
//! i = sig(b_i + U_i x + W_i h_prev)      f = sig(b_f + U_f x + W_f h_prev)
//! o = sig(b_o + U_o x + W_o h_prev)      g = act(b_g + U_g x + W_g h_prev)
//! c = f * c_prev + i * g                  h = o * tanh(c)
//! ```
//!
//! `act` is the logistic sigmoid by default, `tanh` optionally. All
//! parameters live in one flat vector; per layer the stacked input weights
//! `[U_i; U_f; U_o; U_g]` (4H x I, row-major) come first, then the stacked
//! recurrent weights (4H x H), then the biases (4H). The dense head
//! (O x H, then O biases) closes the vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{axpy, dot, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gate blocks in parameter order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    /// Dropout probability on layer outputs during training.
    pub dropout: f64,
    #[serde(default)]
    pub candidate: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_dim: 4,
            hidden: vec![100, 100],
            output_dim: 2,
            dropout: 0.1,
            candidate: Activation::Sigmoid,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::invalid("architecture", "all layer sizes must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout", "must lie in [0, 1)"));
        }
        Ok(())
    }

    fn layouts(&self) -> (Vec<LayerLayout>, usize, usize, usize) {
        let mut offset = 0;
        let mut input = self.input_dim;
        let mut layers = Vec::with_capacity(self.hidden.len());
        for &hidden in &self.hidden {
            let wx = offset;
            let wh = wx + 4 * hidden * input;
            let b = wh + 4 * hidden * hidden;
            offset = b + 4 * hidden;
            layers.push(LayerLayout { input, hidden, wx, wh, b });
            input = hidden;
        }
        let dense_w = offset;
        let dense_b = dense_w + self.output_dim * input;
        let total = dense_b + self.output_dim;
        (layers, dense_w, dense_b, total)
    }

    pub fn param_count(&self) -> usize {
        self.layouts().3
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct LayerLayout {
    input: usize,
    hidden: usize,
    wx: usize,
    wh: usize,
    b: usize,
}

/// Borrowed view of one LSTM layer's parameters.
#[derive(Clone, Copy, Debug)]
pub struct LstmLayer<'a> {
    pub input_dim: usize,
    pub hidden: usize,
    pub candidate: Activation,
    /// Stacked input weights, 4H x I.
    pub wx: &'a [f64],
    /// Stacked recurrent weights, 4H x H.
    pub wh: &'a [f64],
    /// Stacked biases, 4H.
    pub b: &'a [f64],
}

impl<'a> LstmLayer<'a> {
    /// Input weights of one gate, H x I.
    pub fn input_weights(&self, gate: Gate) -> &'a [f64] {
        let n = self.hidden * self.input_dim;
        &self.wx[gate as usize * n..(gate as usize + 1) * n]
    }

    /// Recurrent weights of one gate, H x H.
    pub fn recurrent_weights(&self, gate: Gate) -> &'a [f64] {
        let n = self.hidden * self.hidden;
        &self.wh[gate as usize * n..(gate as usize + 1) * n]
    }

    pub fn bias(&self, gate: Gate) -> &'a [f64] {
        &self.b[gate as usize * self.hidden..(gate as usize + 1) * self.hidden]
    }
}

/// One cell update; returns `(h, c)`.
pub fn lstm_cell_step(layer: &LstmLayer, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hd = layer.hidden;
    let id = layer.input_dim;
    let pre = |r: usize| layer.b[r] + dot(&layer.wx[r * id..(r + 1) * id], x) + dot(&layer.wh[r * hd..(r + 1) * hd], h_prev);
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    for k in 0..hd {
        let i = sigmoid(pre(k));
        let f = sigmoid(pre(hd + k));
        let o = sigmoid(pre(2 * hd + k));
        let g = layer.candidate.apply(pre(3 * hd + k));
        c[k] = f * c_prev[k] + i * g;
        h[k] = o * c[k].tanh();
    }
    (h, c)
}

/// Whether dropout is active, and the seed of its masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { seed: u64 },
}

#[derive(Clone, Debug, Default)]
struct LayerCache {
    /// Layer inputs after dropout, `[t][b][i]`.
    input: Vec<f64>,
    /// Activated gates, `[t][b][4H]`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    /// Inverted-dropout mask on this layer's outputs, `[t][b][h]`; empty if none.
    mask: Vec<f64>,
}

/// Activations retained by a training forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    steps: usize,
    batch: usize,
    layers: Vec<LayerCache>,
    /// Dense-head input after dropout, `[b][h]`.
    features: Vec<f64>,
    /// Mask on the final hidden state; empty if none.
    out_mask: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    layers: Vec<LayerLayout>,
    dense_w: usize,
    dense_b: usize,
    params: Vec<f64>,
}

impl Network {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let (layers, dense_w, dense_b, total) = arch.layouts();
        Ok(Self {
            arch,
            layers,
            dense_w,
            dense_b,
            params: vec![0.0; total],
        })
    }

    /// Uniform `+-1/sqrt(fan_in)` weights, forget-gate bias 1, other biases 0.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |slice: &mut [f64], fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            for v in slice {
                *v = rng.random_range(-a..a);
            }
        };
        for lay in net.layers.clone() {
            let h = lay.hidden;
            fill(&mut net.params[lay.wx..lay.wh], lay.input);
            fill(&mut net.params[lay.wh..lay.b], h);
            net.params[lay.b + h..lay.b + 2 * h].fill(1.0);
        }
        let top = *net.arch.hidden.last().expect("validated");
        let (dw, db) = (net.dense_w, net.dense_b);
        fill(&mut net.params[dw..db], top);
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                actual: params.len(),
            });
        }
        self.params = params;
        Ok(())
    }

    pub fn layer(&self, index: usize) -> LstmLayer<'_> {
        let lay = self.layers[index];
        LstmLayer {
            input_dim: lay.input,
            hidden: lay.hidden,
            candidate: self.arch.candidate,
            wx: &self.params[lay.wx..lay.wh],
            wh: &self.params[lay.wh..lay.b],
            b: &self.params[lay.b..lay.b + 4 * lay.hidden],
        }
    }

    /// Dense head weights (O x H) and biases (O).
    pub fn dense(&self) -> (&[f64], &[f64]) {
        (
            &self.params[self.dense_w..self.dense_b],
            &self.params[self.dense_b..self.dense_b + self.arch.output_dim],
        )
    }

    fn check_batch(&self, seqs: &[&Matrix]) -> Result<usize> {
        let Some(first) = seqs.first() else {
            return Err(Error::DimensionMismatch { expected: 1, actual: 0 });
        };
        let steps = first.rows();
        if steps == 0 {
            return Err(Error::DimensionMismatch { expected: 1, actual: 0 });
        }
        for s in seqs {
            if s.cols() != self.arch.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.arch.input_dim,
                    actual: s.cols(),
                });
            }
            if s.rows() != steps {
                return Err(Error::DimensionMismatch {
                    expected: steps,
                    actual: s.rows(),
                });
            }
        }
        Ok(steps)
    }

    fn dropout_mask(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<f64> {
        let keep = 1.0 - p;
        let scale = 1.0 / keep;
        (0..len)
            .map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 })
            .collect()
    }

    /// Runs a batch of equal-length sequences. Returns the B x O outputs and,
    /// in training mode, the cache needed by [`Network::backward`].
    pub fn forward(&self, seqs: &[&Matrix], mode: Mode) -> Result<(Matrix, Option<ForwardCache>)> {
        self.forward_impl(seqs, mode, matches!(mode, Mode::Train { .. }))
    }

    fn forward_impl(&self, seqs: &[&Matrix], mode: Mode, train: bool) -> Result<(Matrix, Option<ForwardCache>)> {
        let steps = self.check_batch(seqs)?;
        let bsz = seqs.len();
        let p = self.arch.dropout;
        let mut rng = match mode {
            Mode::Train { seed } if p > 0.0 => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let cand = self.arch.candidate;

        let mut input = Vec::with_capacity(steps * bsz * self.arch.input_dim);
        for t in 0..steps {
            for s in seqs {
                input.extend_from_slice(s.row(t));
            }
        }

        let n_layers = self.layers.len();
        let mut caches = Vec::with_capacity(if train { n_layers } else { 0 });
        let mut top_h = Vec::new();
        for (l, lay) in self.layers.iter().enumerate() {
            let (id, hd) = (lay.input, lay.hidden);
            let g4 = 4 * hd;
            let wx = &self.params[lay.wx..lay.wh];
            let wh = &self.params[lay.wh..lay.b];
            let bias = &self.params[lay.b..lay.b + g4];
            let layer_input = std::mem::take(&mut input);

            let mut gates = vec![0.0; steps * bsz * g4];
            let mut c = vec![0.0; steps * bsz * hd];
            let mut tanh_c = vec![0.0; steps * bsz * hd];
            let mut h = vec![0.0; steps * bsz * hd];
            let mut z = vec![0.0; bsz * g4];
            for t in 0..steps {
                let x_t = &layer_input[t * bsz * id..(t + 1) * bsz * id];
                for r in 0..g4 {
                    let wx_r = &wx[r * id..(r + 1) * id];
                    for b in 0..bsz {
                        z[b * g4 + r] = bias[r] + dot(wx_r, &x_t[b * id..(b + 1) * id]);
                    }
                }
                if t > 0 {
                    let h_prev = &h[(t - 1) * bsz * hd..t * bsz * hd];
                    for r in 0..g4 {
                        let wh_r = &wh[r * hd..(r + 1) * hd];
                        for b in 0..bsz {
                            z[b * g4 + r] += dot(wh_r, &h_prev[b * hd..(b + 1) * hd]);
                        }
                    }
                }
                for b in 0..bsz {
                    let zb = &z[b * g4..(b + 1) * g4];
                    let row = t * bsz + b;
                    for k in 0..hd {
                        let i = sigmoid(zb[k]);
                        let f = sigmoid(zb[hd + k]);
                        let o = sigmoid(zb[2 * hd + k]);
                        let g = cand.apply(zb[3 * hd + k]);
                        let c_prev = if t > 0 { c[(row - bsz) * hd + k] } else { 0.0 };
                        let ck = f * c_prev + i * g;
                        let tc = ck.tanh();
                        let gb = &mut gates[row * g4..(row + 1) * g4];
                        gb[k] = i;
                        gb[hd + k] = f;
                        gb[2 * hd + k] = o;
                        gb[3 * hd + k] = g;
                        c[row * hd + k] = ck;
                        tanh_c[row * hd + k] = tc;
                        h[row * hd + k] = o * tc;
                    }
                }
            }

            let last = l + 1 == n_layers;
            let mask = match (&mut rng, last) {
                (Some(rng), false) => Self::dropout_mask(rng, h.len(), p),
                _ => Vec::new(),
            };
            if last {
                top_h = h[(steps - 1) * bsz * hd..].to_vec();
            } else if mask.is_empty() {
                input = h.clone();
            } else {
                input = h.iter().zip(&mask).map(|(a, m)| a * m).collect();
            }
            if train {
                caches.push(LayerCache {
                    input: layer_input,
                    gates,
                    c,
                    tanh_c,
                    h,
                    mask,
                });
            }
        }

        let out_mask = match &mut rng {
            Some(rng) => Self::dropout_mask(rng, top_h.len(), p),
            None => Vec::new(),
        };
        let features: Vec<f64> = if out_mask.is_empty() {
            top_h
        } else {
            top_h.iter().zip(&out_mask).map(|(a, m)| a * m).collect()
        };
        let hd = *self.arch.hidden.last().expect("validated");
        let od = self.arch.output_dim;
        let (dw, db) = self.dense();
        let mut out = Matrix::zeros(bsz, od);
        for b in 0..bsz {
            let feat = &features[b * hd..(b + 1) * hd];
            for o in 0..od {
                out.row_mut(b)[o] = db[o] + dot(&dw[o * hd..(o + 1) * hd], feat);
            }
        }
        let cache = train.then(|| ForwardCache {
            steps,
            batch: bsz,
            layers: caches,
            features,
            out_mask,
        });
        Ok((out, cache))
    }

    /// Eval-mode outputs for a batch.
    pub fn predict(&self, seqs: &[&Matrix]) -> Result<Matrix> {
        Ok(self.forward(seqs, Mode::Eval)?.0)
    }

    /// Accumulates into `grad` the gradient of a scalar loss whose derivative
    /// with respect to the outputs is `d_out` (B x O).
    pub fn backward(&self, cache: &ForwardCache, d_out: &Matrix, grad: &mut [f64]) -> Result<()> {
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                actual: grad.len(),
            });
        }
        let (bsz, steps) = (cache.batch, cache.steps);
        if d_out.rows() != bsz || d_out.cols() != self.arch.output_dim {
            return Err(Error::DimensionMismatch {
                expected: bsz * self.arch.output_dim,
                actual: d_out.rows() * d_out.cols(),
            });
        }
        let cand = self.arch.candidate;
        let top = *self.arch.hidden.last().expect("validated");
        let od = self.arch.output_dim;

        let mut d_feat = vec![0.0; bsz * top];
        {
            let (dw_off, db_off) = (self.dense_w, self.dense_b);
            for b in 0..bsz {
                let feat = &cache.features[b * top..(b + 1) * top];
                for o in 0..od {
                    let g = d_out.get(b, o);
                    grad[db_off + o] += g;
                    axpy(g, feat, &mut grad[dw_off + o * top..dw_off + (o + 1) * top]);
                    axpy(g, &self.params[dw_off + o * top..dw_off + (o + 1) * top], &mut d_feat[b * top..(b + 1) * top]);
                }
            }
        }
        if !cache.out_mask.is_empty() {
            for (d, m) in d_feat.iter_mut().zip(&cache.out_mask) {
                *d *= m;
            }
        }
        let mut dh_ext = vec![0.0; steps * bsz * top];
        dh_ext[(steps - 1) * bsz * top..].copy_from_slice(&d_feat);

        for l in (0..self.layers.len()).rev() {
            let lay = self.layers[l];
            let lc = &cache.layers[l];
            let (id, hd) = (lay.input, lay.hidden);
            let g4 = 4 * hd;
            let mut dx = if l > 0 { vec![0.0; steps * bsz * id] } else { Vec::new() };
            let mut dh_rec = vec![0.0; bsz * hd];
            let mut dc_next = vec![0.0; bsz * hd];
            let mut dz = vec![0.0; bsz * g4];

            for t in (0..steps).rev() {
                for b in 0..bsz {
                    let row = t * bsz + b;
                    let gb = &lc.gates[row * g4..(row + 1) * g4];
                    let dzb = &mut dz[b * g4..(b + 1) * g4];
                    for k in 0..hd {
                        let (i, f, o, g) = (gb[k], gb[hd + k], gb[2 * hd + k], gb[3 * hd + k]);
                        let dh = dh_ext[row * hd + k] + dh_rec[b * hd + k];
                        let tc = lc.tanh_c[row * hd + k];
                        let d_o = dh * tc;
                        let dc = dc_next[b * hd + k] + dh * o * (1.0 - tc * tc);
                        let c_prev = if t > 0 { lc.c[(row - bsz) * hd + k] } else { 0.0 };
                        dc_next[b * hd + k] = dc * f;
                        dzb[k] = dc * g * i * (1.0 - i);
                        dzb[hd + k] = dc * c_prev * f * (1.0 - f);
                        dzb[2 * hd + k] = d_o * o * (1.0 - o);
                        dzb[3 * hd + k] = dc * i * cand.derivative_at_output(g);
                    }
                }

                let x_t = &lc.input[t * bsz * id..(t + 1) * bsz * id];
                for r in 0..g4 {
                    let w_off = lay.wx + r * id;
                    for b in 0..bsz {
                        let alpha = dz[b * g4 + r];
                        if alpha == 0.0 {
                            continue;
                        }
                        grad[lay.b + r] += alpha;
                        axpy(alpha, &x_t[b * id..(b + 1) * id], &mut grad[w_off..w_off + id]);
                        if l > 0 {
                            let base = (t * bsz + b) * id;
                            axpy(alpha, &self.params[w_off..w_off + id], &mut dx[base..base + id]);
                        }
                    }
                }

                dh_rec.fill(0.0);
                if t > 0 {
                    let h_prev = &lc.h[(t - 1) * bsz * hd..t * bsz * hd];
                    for r in 0..g4 {
                        let w_off = lay.wh + r * hd;
                        for b in 0..bsz {
                            let alpha = dz[b * g4 + r];
                            if alpha == 0.0 {
                                continue;
                            }
                            axpy(alpha, &h_prev[b * hd..(b + 1) * hd], &mut grad[w_off..w_off + hd]);
                            axpy(alpha, &self.params[w_off..w_off + hd], &mut dh_rec[b * hd..(b + 1) * hd]);
                        }
                    }
                }
            }

            if l > 0 {
                let below = &cache.layers[l - 1];
                if !below.mask.is_empty() {
                    for (d, m) in dx.iter_mut().zip(&below.mask) {
                        *d *= m;
                    }
                }
                dh_ext = dx;
            }
        }
        Ok(())
    }

    /// Mean over the batch of [`mse_loss`], and its gradient. In eval mode
    /// the gradient is taken without dropout.
    pub fn loss_and_gradient(&self, seqs: &[&Matrix], targets: &Matrix, mode: Mode) -> Result<(f64, Vec<f64>)> {
        let (out, cache) = self.forward_impl(seqs, mode, true)?;
        let cache = cache.expect("cache requested");
        let (loss, d_out) = batch_mse(&out, targets)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&cache, &d_out, &mut grad)?;
        Ok((loss, grad))
    }

    /// Mean over the batch of [`mse_loss`] without gradients.
    pub fn loss(&self, seqs: &[&Matrix], targets: &Matrix, mode: Mode) -> Result<f64> {
        let (out, _) = self.forward(seqs, mode)?;
        Ok(batch_mse(&out, targets)?.0)
    }
}

/// Mean of squared component errors.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), target.len());
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

/// Batch-mean MSE and its derivative with respect to the outputs.
fn batch_mse(out: &Matrix, targets: &Matrix) -> Result<(f64, Matrix)> {
    if out.rows() != targets.rows() || out.cols() != targets.cols() {
        return Err(Error::DimensionMismatch {
            expected: out.rows() * out.cols(),
            actual: targets.rows() * targets.cols(),
        });
    }
    let (bsz, od) = (out.rows(), out.cols());
    let scale = 2.0 / (bsz * od) as f64;
    let mut loss = 0.0;
    let mut d = Matrix::zeros(bsz, od);
    for b in 0..bsz {
        loss += mse_loss(out.row(b), targets.row(b));
        for o in 0..od {
            d.row_mut(b)[o] = scale * (out.get(b, o) - targets.get(b, o));
        }
    }
    Ok((loss / bsz as f64, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dropout: f64, candidate: Activation) -> Architecture {
        Architecture {
            input_dim: 3,
            hidden: vec![4, 4],
            output_dim: 2,
            dropout,
            candidate,
        }
    }

    fn random_seq(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
        Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_network_cell_value() {
        let net = Network::zeros(Architecture {
            input_dim: 2,
            hidden: vec![3],
            output_dim: 2,
            dropout: 0.0,
            candidate: Activation::Sigmoid,
        })
        .unwrap();
        let (h, c) = lstm_cell_step(&net.layer(0), &[0.0; 2], &[0.0; 3], &[0.0; 3]);
        for k in 0..3 {
            assert!((c[k] - 0.25).abs() < 1e-15);
            assert!((h[k] - 0.5 * 0.25f64.tanh()).abs() < 1e-15);
            assert!((h[k] - 0.12245).abs() < 1e-5);
        }
    }

    #[test]
    fn saturated_gates_retain_memory() {
        let mut net = Network::zeros(Architecture {
            input_dim: 1,
            hidden: vec![2],
            output_dim: 1,
            dropout: 0.0,
            candidate: Activation::Sigmoid,
        })
        .unwrap();
        let b = net.layers[0].b;
        net.params[b..b + 2].fill(-50.0);
        net.params[b + 2..b + 4].fill(50.0);
        let (_, c) = lstm_cell_step(&net.layer(0), &[0.3], &[0.1, 0.2], &[0.7, -0.4]);
        assert!((c[0] - 0.7).abs() < 1e-12 && (c[1] + 0.4).abs() < 1e-12);
        let (h, c) = lstm_cell_step(&net.layer(0), &[0.3], &[0.1, 0.2], &[0.0, 0.0]);
        assert!(c.iter().chain(&h).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn batched_forward_matches_cell_steps() {
        let net = Network::new(tiny(0.0, Activation::Sigmoid), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seqs: Vec<Matrix> = (0..3).map(|_| random_seq(&mut rng, 5, 3)).collect();
        let refs: Vec<&Matrix> = seqs.iter().collect();
        let out = net.predict(&refs).unwrap();
        for (b, s) in seqs.iter().enumerate() {
            let mut xs: Vec<Vec<f64>> = (0..5).map(|t| s.row(t).to_vec()).collect();
            for l in 0..2 {
                let layer = net.layer(l);
                let (mut h, mut c) = (vec![0.0; 4], vec![0.0; 4]);
                for x in xs.iter_mut() {
                    (h, c) = lstm_cell_step(&layer, x, &h, &c);
                    *x = h.clone();
                }
            }
            let (dw, db) = net.dense();
            let last = &xs[4];
            for o in 0..2 {
                let expected = db[o] + dot(&dw[o * 4..(o + 1) * 4], last);
                assert!((out.get(b, o) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_network_outputs_dense_bias() {
        let mut net = Network::zeros(tiny(0.0, Activation::Sigmoid)).unwrap();
        let n = net.params.len();
        net.params[n - 2] = 0.5;
        net.params[n - 1] = -1.5;
        let s = Matrix::zeros(4, 3);
        assert_eq!(net.predict(&[&s]).unwrap().row(0), &[0.5, -1.5]);
    }

    #[test]
    fn train_mode_without_dropout_equals_eval() {
        let net = Network::new(tiny(0.0, Activation::Sigmoid), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_seq(&mut rng, 6, 3);
        let (a, _) = net.forward(&[&s], Mode::Eval).unwrap();
        let (b, _) = net.forward(&[&s], Mode::Train { seed: 9 }).unwrap();
        assert_eq!(a, b);
        assert_eq!(net.predict(&[&s]).unwrap(), a);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 1.0], &[0.0, 0.0]), 1.0);
        assert_eq!(mse_loss(&[0.3, -2.0], &[0.3, -2.0]), 0.0);
        assert_eq!(mse_loss(&[1.0, 2.0], &[3.0, -1.0]), mse_loss(&[3.0, -1.0], &[1.0, 2.0]));
    }

    fn gradient_check(arch: Architecture, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::new(arch.clone(), seed).unwrap();
        let seqs: Vec<Matrix> = (0..2).map(|_| random_seq(&mut rng, 4, arch.input_dim)).collect();
        let refs: Vec<&Matrix> = seqs.iter().collect();
        let targets = random_seq(&mut rng, 2, arch.output_dim);
        let mode = Mode::Train { seed: seed + 100 };
        let (_, grad) = net.loss_and_gradient(&refs, &targets, mode).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for j in 0..net.params.len() {
            let mut plus = net.clone();
            plus.params[j] += h;
            let mut minus = net.clone();
            minus.params[j] -= h;
            let fd = (plus.loss(&refs, &targets, mode).unwrap() - minus.loss(&refs, &targets, mode).unwrap()) / (2.0 * h);
            let rel = (fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            assert!(gradient_check(tiny(0.0, Activation::Sigmoid), seed) < 1e-4);
            assert!(gradient_check(tiny(0.3, Activation::Sigmoid), seed) < 1e-4);
            assert!(gradient_check(tiny(0.0, Activation::Tanh), seed) < 1e-4);
        }
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients() {
        let net = Network::new(tiny(0.2, Activation::Sigmoid), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_seq(&mut rng, 3, 3);
        let (_, cache) = net.forward(&[&s], Mode::Train { seed: 1 }).unwrap();
        let mut grad = vec![0.0; net.params.len()];
        net.backward(&cache.unwrap(), &Matrix::zeros(1, 2), &mut grad).unwrap();
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn dense_bias_gradient_is_output_gradient() {
        let net = Network::new(tiny(0.0, Activation::Sigmoid), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_seq(&mut rng, 3, 3);
        let (_, cache) = net.forward(&[&s], Mode::Train { seed: 1 }).unwrap();
        let d = Matrix::from_vec(1, 2, vec![0.7, -0.2]).unwrap();
        let mut grad = vec![0.0; net.params.len()];
        net.backward(&cache.unwrap(), &d, &mut grad).unwrap();
        let n = grad.len();
        assert_eq!(&grad[n - 2..], &[0.7, -0.2]);
    }

    #[test]
    fn gates_and_outputs_stay_in_range() {
        let net = Network::new(tiny(0.0, Activation::Sigmoid), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Matrix::from_vec(6, 3, (0..18).map(|_| rng.random_range(-50.0..50.0)).collect()).unwrap();
        let (_, cache) = net.forward(&[&s], Mode::Train { seed: 0 }).unwrap();
        for lc in &cache.unwrap().layers {
            assert!(lc.gates.iter().all(|g| (0.0..=1.0).contains(g)));
            assert!(lc.h.iter().all(|h| h.abs() <= 1.0));
        }
    }

    #[test]
    fn dropout_averages_to_eval_output() {
        // One layer, one step: the output is linear in the single dropout mask.
        let arch = Architecture {
            input_dim: 3,
            hidden: vec![6],
            output_dim: 2,
            dropout: 0.1,
            candidate: Activation::Sigmoid,
        };
        let net = Network::new(arch, 2).unwrap();
        let s = Matrix::from_vec(1, 3, vec![0.2, -0.4, 0.9]).unwrap();
        let eval = net.predict(&[&s]).unwrap();
        let trials = 50_000;
        let mut acc = [0.0; 2];
        for seed in 0..trials {
            let (out, _) = net.forward(&[&s], Mode::Train { seed }).unwrap();
            acc[0] += out.get(0, 0);
            acc[1] += out.get(0, 1);
        }
        for o in 0..2 {
            assert!((acc[o] / trials as f64 - eval.get(0, o)).abs() < 5e-3, "{o}");
        }
    }
}
