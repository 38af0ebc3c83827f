// Copyright 2026 The neo-lite Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Minimal neural-network kernel: dense layers with optional layer norm,
//! leaky rectifiers, tree convolution, dynamic pooling, hand-written reverse
//! mode and Adam. Matrices are row-major `Vec<f64>`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::rvec::{decode_f64s, encode_f64s};

pub const LEAKY_SLOPE: f64 = 0.01;
pub const LN_EPS: f64 = 1e-10;

pub fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// A parameter tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Param {
            shape: shape.to_vec(),
            value: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn filled(shape: &[usize], v: f64) -> Self {
        let mut p = Param::zeros(shape);
        p.value.iter_mut().for_each(|x| *x = v);
        p
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let mut p = Param::zeros(shape);
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        p.value.iter_mut().for_each(|x| *x = rng.random_range(-a..a));
        p
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Param,
    pub shift: Param,
}

/// `y = act(LN(x W + b))`; LN and the activation are optional.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    /// `input × output`.
    pub weight: Param,
    pub bias: Param,
    pub norm: Option<LayerNorm>,
    pub activate: bool,
}

/// Values recorded by [`Dense::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct DenseCache {
    rows: usize,
    x: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    pre_act: Vec<f64>,
}

impl Dense {
    pub fn new(input: usize, output: usize, norm: bool, activate: bool, rng: &mut impl Rng) -> Self {
        Dense {
            input,
            output,
            weight: Param::glorot(&[input, output], input, output, rng),
            bias: Param::zeros(&[output]),
            norm: norm.then(|| LayerNorm {
                gain: Param::filled(&[output], 1.0),
                shift: Param::zeros(&[output]),
            }),
            activate,
        }
    }

    /// Affine part for one row, skipping zero inputs.
    fn affine_row(&self, x: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.bias.value);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let w = &self.weight.value[i * self.output..(i + 1) * self.output];
                for (zo, wo) in z.iter_mut().zip(w) {
                    *zo += xi * wo;
                }
            }
        }
    }

    /// Forward over `rows` stacked inputs.
    pub fn forward(&self, x: &[f64], rows: usize) -> Result<(Vec<f64>, DenseCache)> {
        if x.len() != rows * self.input {
            return Err(NeoError::shape(format!(
                "dense layer expects {} inputs per row, got {} values for {rows} rows",
                self.input,
                x.len()
            )));
        }
        let out = self.output;
        let mut z = vec![0.0; rows * out];
        let mut xhat = Vec::new();
        let mut inv_std = Vec::new();
        for r in 0..rows {
            let zr = &mut z[r * out..(r + 1) * out];
            self.affine_row(&x[r * self.input..(r + 1) * self.input], zr);
            if let Some(ln) = &self.norm {
                let mu = zr.iter().sum::<f64>() / out as f64;
                let var = zr.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / out as f64;
                let inv = 1.0 / (var + LN_EPS).sqrt();
                inv_std.push(inv);
                for (o, v) in zr.iter_mut().enumerate() {
                    let h = (*v - mu) * inv;
                    xhat.push(h);
                    *v = ln.gain.value[o] * h + ln.shift.value[o];
                }
            }
        }
        let pre_act = if self.activate { z.clone() } else { Vec::new() };
        if self.activate {
            z.iter_mut().for_each(|v| *v = leaky(*v));
        }
        Ok((
            z,
            DenseCache {
                rows,
                x: x.to_vec(),
                xhat,
                inv_std,
                pre_act,
            },
        ))
    }

    /// Forward without recording, one row.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x, 1)?.0)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, cache: &DenseCache, dy: &[f64]) -> Vec<f64> {
        let (rows, out, inp) = (cache.rows, self.output, self.input);
        let mut dz = dy.to_vec();
        if self.activate {
            for (d, &p) in dz.iter_mut().zip(&cache.pre_act) {
                *d *= leaky_grad(p);
            }
        }
        if let Some(ln) = &mut self.norm {
            for r in 0..rows {
                let dzr = &mut dz[r * out..(r + 1) * out];
                let xh = &cache.xhat[r * out..(r + 1) * out];
                let mut dxhat = vec![0.0; out];
                for o in 0..out {
                    ln.gain.grad[o] += dzr[o] * xh[o];
                    ln.shift.grad[o] += dzr[o];
                    dxhat[o] = dzr[o] * ln.gain.value[o];
                }
                let s1: f64 = dxhat.iter().sum();
                let s2: f64 = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum();
                let inv = cache.inv_std[r];
                let n = out as f64;
                for o in 0..out {
                    dzr[o] = inv / n * (n * dxhat[o] - s1 - xh[o] * s2);
                }
            }
        }
        let mut dx = vec![0.0; rows * inp];
        for r in 0..rows {
            let dzr = &dz[r * out..(r + 1) * out];
            let xr = &cache.x[r * inp..(r + 1) * inp];
            for (b, d) in self.bias.grad.iter_mut().zip(dzr) {
                *b += d;
            }
            for i in 0..inp {
                let w = &self.weight.value[i * out..(i + 1) * out];
                let gw = &mut self.weight.grad[i * out..(i + 1) * out];
                let xi = xr[i];
                let mut acc = 0.0;
                for o in 0..out {
                    gw[o] += xi * dzr[o];
                    acc += w[o] * dzr[o];
                }
                dx[r * inp + i] = acc;
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.weight, &mut self.bias];
        if let Some(ln) = &mut self.norm {
            v.push(&mut ln.gain);
            v.push(&mut ln.shift);
        }
        v
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.weight, &self.bias];
        if let Some(ln) = &self.norm {
            v.push(&ln.gain);
            v.push(&ln.shift);
        }
        v
    }
}

/// Child links of a flattened forest; missing children read as zero vectors.
#[derive(Debug, Clone, Copy)]
pub struct TreeLinks<'a> {
    pub left: &'a [Option<usize>],
    pub right: &'a [Option<usize>],
}

impl TreeLinks<'_> {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

/// Filterbank of shape `3 × c_in × c_out`: slices for parent, left and right.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConv {
    pub c_in: usize,
    pub c_out: usize,
    pub weight: Param,
    pub bias: Param,
    pub use_bias: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TreeConvCache {
    x: Vec<f64>,
    pre_act: Vec<f64>,
}

pub const PARENT: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;

impl TreeConv {
    pub fn new(c_in: usize, c_out: usize, use_bias: bool, rng: &mut impl Rng) -> Self {
        TreeConv {
            c_in,
            c_out,
            weight: Param::glorot(&[3, c_in, c_out], 3 * c_in, c_out, rng),
            bias: Param::zeros(&[c_out]),
            use_bias,
        }
    }

    /// Row `i` of slice `s`: the `c_out` weights fed by input channel `i`.
    pub fn row(&self, s: usize, i: usize) -> &[f64] {
        let at = (s * self.c_in + i) * self.c_out;
        &self.weight.value[at..at + self.c_out]
    }

    /// `z += x · W_s`, skipping zero inputs.
    pub fn accumulate(&self, s: usize, x: &[f64], z: &mut [f64]) {
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (zo, w) in z.iter_mut().zip(self.row(s, i)) {
                    *zo += xi * w;
                }
            }
        }
    }

    pub fn bias_or_zero(&self) -> Vec<f64> {
        if self.use_bias {
            self.bias.value.clone()
        } else {
            vec![0.0; self.c_out]
        }
    }

    pub fn forward(&self, x: &[f64], links: TreeLinks) -> Result<(Vec<f64>, TreeConvCache)> {
        let n = links.len();
        if x.len() != n * self.c_in {
            return Err(NeoError::shape(format!(
                "tree conv expects {} channels per node, got {} values for {n} nodes",
                self.c_in,
                x.len()
            )));
        }
        let (ci, co) = (self.c_in, self.c_out);
        let mut z = vec![0.0; n * co];
        let bias = self.bias_or_zero();
        for p in 0..n {
            let zp = &mut z[p * co..(p + 1) * co];
            zp.copy_from_slice(&bias);
            self.accumulate(PARENT, &x[p * ci..(p + 1) * ci], zp);
            if let Some(l) = links.left[p] {
                self.accumulate(LEFT, &x[l * ci..(l + 1) * ci], zp);
            }
            if let Some(r) = links.right[p] {
                self.accumulate(RIGHT, &x[r * ci..(r + 1) * ci], zp);
            }
        }
        let y = z.iter().map(|&v| leaky(v)).collect();
        Ok((y, TreeConvCache { x: x.to_vec(), pre_act: z }))
    }

    /// Gradients are summed over every node position.
    pub fn backward(&mut self, cache: &TreeConvCache, links: TreeLinks, dy: &[f64]) -> Vec<f64> {
        let n = links.len();
        let (ci, co) = (self.c_in, self.c_out);
        let dz: Vec<f64> = dy.iter().zip(&cache.pre_act).map(|(d, &p)| d * leaky_grad(p)).collect();
        let mut dx = vec![0.0; n * ci];
        for p in 0..n {
            let dzp = &dz[p * co..(p + 1) * co];
            if self.use_bias {
                for (b, d) in self.bias.grad.iter_mut().zip(dzp) {
                    *b += d;
                }
            }
            for (s, src) in [(PARENT, Some(p)), (LEFT, links.left[p]), (RIGHT, links.right[p])] {
                let Some(src) = src else { continue };
                for i in 0..ci {
                    let xi = cache.x[src * ci + i];
                    let at = (s * ci + i) * co;
                    let w = &self.weight.value[at..at + co];
                    let gw = &mut self.weight.grad[at..at + co];
                    let mut acc = 0.0;
                    for o in 0..co {
                        gw[o] += xi * dzp[o];
                        acc += w[o] * dzp[o];
                    }
                    dx[src * ci + i] += acc;
                }
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        if self.use_bias {
            vec![&mut self.weight, &mut self.bias]
        } else {
            vec![&mut self.weight]
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        if self.use_bias {
            vec![&self.weight, &self.bias]
        } else {
            vec![&self.weight]
        }
    }
}

/// Channel-wise maximum over all nodes and the winning node per channel
/// (lowest index on ties).
pub fn dynamic_pool(x: &[f64], nodes: usize, channels: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if nodes == 0 {
        return Err(NeoError::contract("dynamic pooling over an empty forest"));
    }
    if x.len() != nodes * channels {
        return Err(NeoError::shape("pooling input does not match nodes × channels"));
    }
    let mut best = x[..channels].to_vec();
    let mut arg = vec![0; channels];
    for n in 1..nodes {
        for c in 0..channels {
            let v = x[n * channels + c];
            if v > best[c] {
                best[c] = v;
                arg[c] = n;
            }
        }
    }
    Ok((best, arg))
}

pub fn dynamic_pool_backward(argmax: &[usize], nodes: usize, dy: &[f64]) -> Vec<f64> {
    let c = argmax.len();
    let mut dx = vec![0.0; nodes * c];
    for (k, (&n, &d)) in argmax.iter().zip(dy).enumerate() {
        dx[n * c + k] += d;
    }
    dx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

/// One bias-corrected Adam update from the accumulated gradients.
pub fn adam_step(params: &mut [&mut Param], state: &mut AdamState) -> Result<()> {
    if state.m.is_empty() {
        state.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
        state.v = state.m.clone();
    }
    if state.m.len() != params.len() || state.m.iter().zip(params.iter()).any(|(m, p)| m.len() != p.len()) {
        return Err(NeoError::shape("adam moments do not match the parameter list"));
    }
    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let c1 = 1.0 - beta1.powi(state.step as i32);
    let c2 = 1.0 - beta2.powi(state.step as i32);
    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        for i in 0..p.value.len() {
            let g = p.grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p.value[i] -= lr * mh / (vh.sqrt() + epsilon);
        }
    }
    Ok(())
}

/// Named tensor in a checkpoint file; data are little-endian f64, base64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: String,
}

impl TensorRecord {
    pub fn new(name: impl Into<String>, shape: &[usize], data: &[f64]) -> Self {
        TensorRecord {
            name: name.into(),
            shape: shape.to_vec(),
            data: encode_f64s(data),
        }
    }

    pub fn decode(&self, expect_shape: &[usize]) -> Result<Vec<f64>> {
        if self.shape != expect_shape {
            return Err(NeoError::Integrity(format!(
                "tensor {} has shape {:?}, expected {:?}",
                self.name, self.shape, expect_shape
            )));
        }
        let data = decode_f64s(&self.data)?;
        if data.len() != expect_shape.iter().product::<usize>() {
            return Err(NeoError::Integrity(format!("tensor {} payload length mismatch", self.name)));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NeoError::Integrity(format!("tensor {} holds non-finite values", self.name)));
        }
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn dense_identity_and_leaky() {
        let mut d = Dense::new(3, 3, false, false, &mut rng());
        d.weight.value = vec![1., 0., 0., 0., 1., 0., 0., 0., 1.];
        assert_eq!(d.apply(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);
        let mut a = Dense::new(1, 1, false, true, &mut rng());
        a.weight.value = vec![1.0];
        assert_eq!(a.apply(&[-1.0]).unwrap(), vec![-0.01]);
        assert!(d.apply(&[1.0]).is_err());
    }

    #[test]
    fn layer_norm_standardizes() {
        let d = Dense::new(5, 8, true, false, &mut rng());
        let mut r = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| r.random_range(-3.0..3.0)).collect();
            let y = d.apply(&x).unwrap();
            let mu = y.iter().sum::<f64>() / 8.0;
            let var = y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 8.0;
            assert!(mu.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_filterbank_gives_zero_forest() {
        let mut t = TreeConv::new(4, 3, true, &mut rng());
        t.weight.value.iter_mut().for_each(|w| *w = 0.0);
        let left = [Some(1), None];
        let right = [None, None];
        let (y, _) = t.forward(&[1.0; 8], TreeLinks { left: &left, right: &right }).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pooling() {
        let (v, arg) = dynamic_pool(&[1., 5., 3., 2.], 2, 2).unwrap();
        assert_eq!(v, vec![3., 5.]);
        assert_eq!(arg, vec![1, 0]);
        let (_, tie) = dynamic_pool(&[2., 2., 2., 2.], 2, 2).unwrap();
        assert_eq!(tie, vec![0, 0]);
        assert!(dynamic_pool(&[], 0, 2).is_err());
    }

    #[test]
    fn tree_conv_weight_gradient_sums_positions() {
        // 2-node tree: root 0 with left child 1; c_in = c_out = 2
        let mut t = TreeConv::new(2, 2, false, &mut rng());
        t.weight.value = vec![0.5, -0.25, 0.75, 1.0, 0.1, 0.2, 0.3, 0.4, 0., 0., 0., 0.];
        let x = [1.0, 2.0, 3.0, -1.0];
        let left = [Some(1), None];
        let right = [None, None];
        let links = TreeLinks { left: &left, right: &right };
        let (_, cache) = t.forward(&x, links).unwrap();
        let dy = [1.0, 0.5, -1.0, 2.0];
        t.backward(&cache, links, &dy);
        let dz: Vec<f64> = dy.iter().zip(&cache.pre_act).map(|(d, &p)| d * leaky_grad(p)).collect();
        // parent slice: x_0 ⊗ dz_0 + x_1 ⊗ dz_1
        let mut want = [0.0; 4];
        for (node, xs) in [(0, [1.0, 2.0]), (1, [3.0, -1.0])] {
            for i in 0..2 {
                for o in 0..2 {
                    want[i * 2 + o] += xs[i] * dz[node * 2 + o];
                }
            }
        }
        assert_eq!(&t.weight.grad[..4], &want);
        // left slice: only the root has a left child, x_1 ⊗ dz_0
        let left_want = [3.0 * dz[0], 3.0 * dz[1], -dz[0], -dz[1]];
        assert_eq!(&t.weight.grad[4..8], &left_want);
    }

    #[test]
    fn adam_scalar_steps() {
        let mut p = Param::filled(&[1], 0.5);
        let mut st = AdamState::new(AdamConfig::default());
        p.grad[0] = 1.0;
        adam_step(&mut [&mut p], &mut st).unwrap();
        let expect = 0.5 - 1e-3 * 1.0 / (1.0 + 1e-8);
        assert!((p.value[0] - expect).abs() < 1e-15);
        p.grad[0] = 0.0;
        let before = p.value[0];
        let mut q = Param::filled(&[1], 2.0);
        let mut st2 = AdamState::new(AdamConfig::default());
        adam_step(&mut [&mut q], &mut st2).unwrap();
        assert_eq!(q.value[0], 2.0);
        assert!(st2.m[0][0] == 0.0);
        // non-zero first moment keeps moving the parameter
        adam_step(&mut [&mut p], &mut st).unwrap();
        assert!(p.value[0] < before);
    }

    #[test]
    fn tensor_records_round_trip() {
        let r = TensorRecord::new("w", &[2, 2], &[1.0, -2.5, 3.25, 0.0]);
        assert_eq!(r.decode(&[2, 2]).unwrap(), vec![1.0, -2.5, 3.25, 0.0]);
        assert!(r.decode(&[4]).is_err());
    }
}
