//! Building blocks of the noise-estimation network, each with an explicit
//! forward and backward pass. Everything runs in `f64`; buffers are
//! channels × frames, row-major. Convolutions wrap circularly along the
//! frame axis, which makes every operator equivariant to circular shifts at
//! stride granularity.

use crate::error::{Error, Result};
use crate::rng::{standard_normal, ChaCha8Rng};
use rand::Rng;

/// Channels × frames buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Buf2 {
    pub ch: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Buf2 {
    pub fn zeros(ch: usize, len: usize) -> Self {
        Buf2 { ch, len, data: vec![0.0; ch * len] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let ch = rows.len();
        let len = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(ch * len);
        for r in rows {
            assert_eq!(r.len(), len);
            data.extend(r);
        }
        Buf2 { ch, len, data }
    }

    #[inline]
    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    #[inline]
    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn add_assign(&mut self, other: &Buf2) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// One named weight array.
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
    /// RFF frequencies are fixed at initialization; the optimizer skips
    /// non-trainable tensors.
    pub trainable: bool,
}

/// All learnable weights plus their EMA shadow.
#[derive(Debug, Clone)]
pub struct ParameterSet {
    pub tensors: Vec<ParamTensor>,
    pub ema: Vec<Vec<f64>>,
}

impl ParameterSet {
    pub fn grad_buffers(&self) -> Vec<Vec<f64>> {
        self.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect()
    }

    pub fn total_len(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
            && self.ema.iter().all(|e| e.iter().all(|v| v.is_finite()))
    }

    pub fn index_by_name(&self, name: &str) -> Option<usize> {
        self.tensors.iter().position(|t| t.name == name)
    }
}

/// Element-wise EMA relaxation: shadow ← rate·shadow + (1−rate)·current.
pub fn ema_update(shadow: &mut [f64], current: &[f64], rate: f64) -> Result<()> {
    if shadow.len() != current.len() {
        return Err(Error::domain("trainer", "ema shapes disagree"));
    }
    if !(0.0 < rate && rate < 1.0) {
        return Err(Error::domain("trainer", format!("ema rate {rate} outside (0, 1)")));
    }
    for (s, c) in shadow.iter_mut().zip(current) {
        *s = rate * *s + (1.0 - rate) * c;
    }
    Ok(())
}

/// Selects raw or EMA weights for a forward pass.
#[derive(Clone, Copy)]
pub struct WeightView<'a> {
    params: &'a ParameterSet,
    use_ema: bool,
}

impl<'a> WeightView<'a> {
    pub fn raw(params: &'a ParameterSet) -> Self {
        WeightView { params, use_ema: false }
    }

    pub fn ema(params: &'a ParameterSet) -> Self {
        WeightView { params, use_ema: true }
    }

    #[inline]
    pub fn get(&self, id: usize) -> &[f64] {
        if self.use_ema {
            &self.params.ema[id]
        } else {
            &self.params.tensors[id].data
        }
    }
}

/// Registers parameters during network construction, drawing initial values
/// from a fan-in-scaled uniform scheme.
pub struct ParamBuilder {
    pub tensors: Vec<ParamTensor>,
    rng: ChaCha8Rng,
}

impl ParamBuilder {
    pub fn new(rng: ChaCha8Rng) -> Self {
        ParamBuilder { tensors: Vec::new(), rng }
    }

    /// Uniform in ±sqrt(1/fan_in).
    pub fn uniform(&mut self, name: String, dims: Vec<usize>, fan_in: usize) -> usize {
        let n: usize = dims.iter().product();
        let bound = (1.0 / fan_in.max(1) as f64).sqrt();
        let data = (0..n).map(|_| self.rng.random_range(-bound..bound)).collect();
        self.push(name, dims, data, true)
    }

    pub fn zeros(&mut self, name: String, dims: Vec<usize>) -> usize {
        let n: usize = dims.iter().product();
        self.push(name, dims, vec![0.0; n], true)
    }

    /// Fixed zero-mean normal draws, excluded from optimization.
    pub fn frozen_normal(&mut self, name: String, dims: Vec<usize>, scale: f64) -> usize {
        let n: usize = dims.iter().product();
        let data = (0..n).map(|_| scale * standard_normal(&mut self.rng)).collect();
        self.push(name, dims, data, false)
    }

    fn push(&mut self, name: String, dims: Vec<usize>, data: Vec<f64>, trainable: bool) -> usize {
        self.tensors.push(ParamTensor { name, dims, data, trainable });
        self.tensors.len() - 1
    }

    pub fn finish(self) -> ParameterSet {
        let ema = self.tensors.iter().map(|t| t.data.clone()).collect();
        ParameterSet { tensors: self.tensors, ema }
    }
}

/// GELU (tanh approximation) applied in place; returns pre-activation copy
/// for the backward pass.
pub fn gelu_forward(x: &mut Buf2) -> Buf2 {
    let pre = x.clone();
    for v in &mut x.data {
        *v = gelu(*v);
    }
    pre
}

#[inline]
pub fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/π)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let u = C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * 0.044715 * x * x)
}

pub fn gelu_backward(pre: &Buf2, dy: &mut Buf2) {
    for (g, &x) in dy.data.iter_mut().zip(&pre.data) {
        *g *= gelu_grad(x);
    }
}

/// Per-channel affine modulation: out[c,t] = scale[c]·x[c,t] + shift[c].
pub fn film_modulate(features: &Buf2, scale: &[f64], shift: &[f64]) -> Result<Buf2> {
    if scale.len() != features.ch || shift.len() != features.ch {
        return Err(Error::domain(
            "denoiser",
            format!(
                "film shapes disagree: {} channels vs scale {} / shift {}",
                features.ch,
                scale.len(),
                shift.len()
            ),
        ));
    }
    let mut out = features.clone();
    for c in 0..out.ch {
        let (s, b) = (scale[c], shift[c]);
        for v in out.row_mut(c) {
            *v = s * *v + b;
        }
    }
    Ok(out)
}

/// Dense layer y = Wx + b.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: usize,
    pub b: usize,
    pub din: usize,
    pub dout: usize,
}

impl Linear {
    pub fn build(pb: &mut ParamBuilder, name: &str, din: usize, dout: usize) -> Self {
        let w = pb.uniform(format!("{name}.w"), vec![dout, din], din);
        let b = pb.zeros(format!("{name}.b"), vec![dout]);
        Linear { w, b, din, dout }
    }

    pub fn forward(&self, view: &WeightView, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.din);
        let w = view.get(self.w);
        let b = view.get(self.b);
        let mut y = Vec::with_capacity(self.dout);
        for o in 0..self.dout {
            let row = &w[o * self.din..(o + 1) * self.din];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            y.push(acc);
        }
        y
    }

    pub fn backward(
        &self,
        view: &WeightView,
        x: &[f64],
        dy: &[f64],
        grads: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let w = view.get(self.w);
        let mut dx = vec![0.0; self.din];
        for o in 0..self.dout {
            let g = dy[o];
            grads[self.b][o] += g;
            let row = &w[o * self.din..(o + 1) * self.din];
            let grow = &mut grads[self.w][o * self.din..(o + 1) * self.din];
            for i in 0..self.din {
                grow[i] += x[i] * g;
                dx[i] += row[i] * g;
            }
        }
        dx
    }
}

/// 1-D convolution with circular padding, centered taps, optional dilation
/// and stride. Output length is input length / stride; construction-time
/// validation guarantees divisibility.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub w: usize,
    pub b: usize,
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub dilation: usize,
}

impl Conv1d {
    pub fn build(
        pb: &mut ParamBuilder,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        dilation: usize,
    ) -> Self {
        let w = pb.uniform(format!("{name}.w"), vec![cout, cin, k], cin * k);
        let b = pb.zeros(format!("{name}.b"), vec![cout]);
        Conv1d { w, b, cin, cout, k, stride, dilation }
    }

    /// Same, but with the kernel zero-initialized (used for the output
    /// projection so a fresh network predicts zero noise).
    pub fn build_zero(
        pb: &mut ParamBuilder,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
    ) -> Self {
        let w = pb.zeros(format!("{name}.w"), vec![cout, cin, k]);
        let b = pb.zeros(format!("{name}.b"), vec![cout]);
        Conv1d { w, b, cin, cout, k, stride: 1, dilation: 1 }
    }

    /// Output positions whose tap at offset `off` stays in bounds:
    /// `t ∈ [lo, hi)` with `0 ≤ t·stride + off < t_in`.
    #[inline]
    fn interior(&self, t_in: usize, t_out: usize, off: isize) -> (usize, usize) {
        let s = self.stride as isize;
        let lo = if off >= 0 { 0 } else { (-off + s - 1) / s };
        let hi = (t_in as isize - off + s - 1) / s;
        ((lo.max(0) as usize).min(t_out), (hi.max(0) as usize).min(t_out))
    }

    pub fn forward(&self, view: &WeightView, x: &Buf2) -> Buf2 {
        debug_assert_eq!(x.ch, self.cin);
        debug_assert_eq!(x.len % self.stride, 0);
        let t_out = x.len / self.stride;
        let t_in = x.len;
        let center = (self.k / 2) as isize;
        let w = view.get(self.w);
        let b = view.get(self.b);
        let mut y = Buf2::zeros(self.cout, t_out);
        for o in 0..self.cout {
            let yrow = &mut y.data[o * t_out..(o + 1) * t_out];
            yrow.fill(b[o]);
            for c in 0..self.cin {
                let xrow = &x.data[c * t_in..(c + 1) * t_in];
                let wrow = &w[(o * self.cin + c) * self.k..(o * self.cin + c + 1) * self.k];
                for (kk, &wv) in wrow.iter().enumerate() {
                    let off = (kk as isize - center) * self.dilation as isize;
                    let (lo, hi) = self.interior(t_in, t_out, off);
                    for t in 0..lo {
                        let idx = (t * self.stride) as isize + off;
                        yrow[t] += wv * xrow[idx.rem_euclid(t_in as isize) as usize];
                    }
                    if self.stride == 1 {
                        let base = lo as isize + off;
                        let src = &xrow[base as usize..base as usize + (hi - lo)];
                        for (yv, xv) in yrow[lo..hi].iter_mut().zip(src) {
                            *yv += wv * xv;
                        }
                    } else {
                        for t in lo..hi {
                            let idx = ((t * self.stride) as isize + off) as usize;
                            yrow[t] += wv * xrow[idx];
                        }
                    }
                    for t in hi..t_out {
                        let idx = (t * self.stride) as isize + off;
                        yrow[t] += wv * xrow[idx.rem_euclid(t_in as isize) as usize];
                    }
                }
            }
        }
        y
    }

    pub fn backward(
        &self,
        view: &WeightView,
        x: &Buf2,
        dy: &Buf2,
        grads: &mut [Vec<f64>],
    ) -> Buf2 {
        let t_out = x.len / self.stride;
        let t_in = x.len;
        debug_assert_eq!(dy.len, t_out);
        let center = (self.k / 2) as isize;
        let w = view.get(self.w);
        let mut dx = Buf2::zeros(self.cin, t_in);
        for o in 0..self.cout {
            let dyrow = &dy.data[o * t_out..(o + 1) * t_out];
            grads[self.b][o] += dyrow.iter().sum::<f64>();
            for c in 0..self.cin {
                let xrow = &x.data[c * t_in..(c + 1) * t_in];
                let wrow = &w[(o * self.cin + c) * self.k..(o * self.cin + c + 1) * self.k];
                let gwrow = &mut grads[self.w]
                    [(o * self.cin + c) * self.k..(o * self.cin + c + 1) * self.k];
                let dxrow = &mut dx.data[c * t_in..(c + 1) * t_in];
                for kk in 0..self.k {
                    let off = (kk as isize - center) * self.dilation as isize;
                    let wv = wrow[kk];
                    let mut gw = 0.0;
                    let (lo, hi) = self.interior(t_in, t_out, off);
                    for t in 0..lo {
                        let idx = ((t * self.stride) as isize + off)
                            .rem_euclid(t_in as isize) as usize;
                        let g = dyrow[t];
                        gw += xrow[idx] * g;
                        dxrow[idx] += wv * g;
                    }
                    if self.stride == 1 {
                        let base = (lo as isize + off) as usize;
                        for (i, &g) in dyrow[lo..hi].iter().enumerate() {
                            gw += xrow[base + i] * g;
                            dxrow[base + i] += wv * g;
                        }
                    } else {
                        for t in lo..hi {
                            let idx = ((t * self.stride) as isize + off) as usize;
                            let g = dyrow[t];
                            gw += xrow[idx] * g;
                            dxrow[idx] += wv * g;
                        }
                    }
                    for t in hi..t_out {
                        let idx = ((t * self.stride) as isize + off)
                            .rem_euclid(t_in as isize) as usize;
                        let g = dyrow[t];
                        gw += xrow[idx] * g;
                        dxrow[idx] += wv * g;
                    }
                    gwrow[kk] += gw;
                }
            }
        }
        dx
    }
}

/// Nearest-neighbour upsampling by an integer factor.
pub fn upsample_forward(x: &Buf2, factor: usize) -> Buf2 {
    let mut y = Buf2::zeros(x.ch, x.len * factor);
    for c in 0..x.ch {
        let xr = x.row(c);
        let yr = y.row_mut(c);
        for (t, v) in yr.iter_mut().enumerate() {
            *v = xr[t / factor];
        }
    }
    y
}

pub fn upsample_backward(dy: &Buf2, factor: usize) -> Buf2 {
    let t_in = dy.len / factor;
    let mut dx = Buf2::zeros(dy.ch, t_in);
    for c in 0..dy.ch {
        let dyr = dy.row(c);
        let dxr = dx.row_mut(c);
        for (t, g) in dyr.iter().enumerate() {
            dxr[t / factor] += g;
        }
    }
    dx
}

/// Multi-head scaled-dot-product self-attention over the frame axis with
/// learned 1×1 projections and no positional encoding.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub wq: Conv1d,
    pub wk: Conv1d,
    pub wv: Conv1d,
    pub wo: Conv1d,
    pub heads: usize,
}

pub struct AttentionCache {
    pub x: Buf2,
    pub q: Buf2,
    pub k: Buf2,
    pub v: Buf2,
    /// Row-stochastic attention matrix per head, query-major.
    pub weights: Vec<Vec<f64>>,
    pub concat: Buf2,
}

impl MultiHeadAttention {
    pub fn build(pb: &mut ParamBuilder, name: &str, ch: usize, heads: usize) -> Result<Self> {
        if ch % heads != 0 {
            return Err(Error::domain(
                "denoiser",
                format!("channels {ch} not divisible by heads {heads}"),
            ));
        }
        Ok(MultiHeadAttention {
            wq: Conv1d::build(pb, &format!("{name}.wq"), ch, ch, 1, 1, 1),
            wk: Conv1d::build(pb, &format!("{name}.wk"), ch, ch, 1, 1, 1),
            wv: Conv1d::build(pb, &format!("{name}.wv"), ch, ch, 1, 1, 1),
            wo: Conv1d::build(pb, &format!("{name}.wo"), ch, ch, 1, 1, 1),
            heads,
        })
    }

    pub fn forward(&self, view: &WeightView, x: &Buf2) -> (Buf2, AttentionCache) {
        let t = x.len;
        let dh = x.ch / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let q = self.wq.forward(view, x);
        let k = self.wk.forward(view, x);
        let v = self.wv.forward(view, x);
        let mut concat = Buf2::zeros(x.ch, t);
        let mut weights = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let c0 = h * dh;
            let mut a = vec![0.0; t * t];
            for ti in 0..t {
                // scores for query ti over all keys
                let row = &mut a[ti * t..(ti + 1) * t];
                let mut max = f64::NEG_INFINITY;
                for (tj, r) in row.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for d in 0..dh {
                        s += q.row(c0 + d)[ti] * k.row(c0 + d)[tj];
                    }
                    *r = s * scale;
                    max = max.max(*r);
                }
                let mut z = 0.0;
                for r in row.iter_mut() {
                    *r = (*r - max).exp();
                    z += *r;
                }
                for r in row.iter_mut() {
                    *r /= z;
                }
            }
            for d in 0..dh {
                let vrow = v.row(c0 + d).to_vec();
                let orow = concat.row_mut(c0 + d);
                for ti in 0..t {
                    let arow = &a[ti * t..(ti + 1) * t];
                    let mut acc = 0.0;
                    for tj in 0..t {
                        acc += arow[tj] * vrow[tj];
                    }
                    orow[ti] = acc;
                }
            }
            weights.push(a);
        }
        let out = self.wo.forward(view, &concat);
        (out, AttentionCache { x: x.clone(), q, k, v, weights, concat })
    }

    pub fn backward(
        &self,
        view: &WeightView,
        cache: &AttentionCache,
        dy: &Buf2,
        grads: &mut [Vec<f64>],
    ) -> Buf2 {
        let t = cache.x.len;
        let dh = cache.x.ch / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let dconcat = self.wo.backward(view, &cache.concat, dy, grads);
        let mut dq = Buf2::zeros(cache.x.ch, t);
        let mut dk = Buf2::zeros(cache.x.ch, t);
        let mut dv = Buf2::zeros(cache.x.ch, t);
        for h in 0..self.heads {
            let c0 = h * dh;
            let a = &cache.weights[h];
            // dV[d,tj] = Σ_ti dconcat[d,ti]·A[ti,tj]; dA[ti,tj] = Σ_d dconcat[d,ti]·V[d,tj]
            let mut da = vec![0.0; t * t];
            for d in 0..dh {
                let dc = dconcat.row(c0 + d);
                let vr = cache.v.row(c0 + d);
                let dvr = dv.row_mut(c0 + d);
                for ti in 0..t {
                    let g = dc[ti];
                    if g == 0.0 {
                        continue;
                    }
                    let arow = &a[ti * t..(ti + 1) * t];
                    let darow = &mut da[ti * t..(ti + 1) * t];
                    for tj in 0..t {
                        dvr[tj] += g * arow[tj];
                        darow[tj] += g * vr[tj];
                    }
                }
            }
            // softmax backward per query row: ds = (da − (da·a)) ⊙ a
            for ti in 0..t {
                let arow = &a[ti * t..(ti + 1) * t];
                let darow = &mut da[ti * t..(ti + 1) * t];
                let dot: f64 = arow.iter().zip(darow.iter()).map(|(x, y)| x * y).sum();
                for (ds, &av) in darow.iter_mut().zip(arow) {
                    *ds = (*ds - dot) * av;
                }
            }
            // dQ[.,ti] = Σ_tj ds[ti,tj]·K[.,tj]·scale ; dK[.,tj] = Σ_ti ds[ti,tj]·Q[.,ti]·scale
            for d in 0..dh {
                let kr = cache.k.row(c0 + d);
                let qr = cache.q.row(c0 + d);
                let dqr = dq.row_mut(c0 + d);
                for ti in 0..t {
                    let dsrow = &da[ti * t..(ti + 1) * t];
                    let mut acc = 0.0;
                    for tj in 0..t {
                        acc += dsrow[tj] * kr[tj];
                    }
                    dqr[ti] += acc * scale;
                }
                let dkr = dk.row_mut(c0 + d);
                for tj in 0..t {
                    let mut acc = 0.0;
                    for ti in 0..t {
                        acc += da[ti * t + tj] * qr[ti];
                    }
                    dkr[tj] += acc * scale;
                }
            }
        }
        let mut dx = self.wq.backward(view, &cache.x, &dq, grads);
        dx.add_assign(&self.wk.backward(view, &cache.x, &dk, grads));
        dx.add_assign(&self.wv.backward(view, &cache.x, &dv, grads));
        dx
    }
}
