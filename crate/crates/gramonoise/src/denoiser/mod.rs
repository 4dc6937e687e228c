//! The noise-estimation network ε̂(z, σ): a time-domain U-Net conditioned on
//! the noise level through random-Fourier-feature embeddings and FiLM
//! layers, with dilated circular convolutions, strided down/upsampling, and
//! multi-head self-attention on the deeper stages.
//!
//! The network is written with explicit forward and backward passes so the
//! analytic gradient of the training loss can be checked against central
//! finite differences (see the tests here and the acceptance suite).

pub mod layers;

use crate::error::{Error, Result};
use crate::rng::rng_for;
use layers::{
    film_modulate, gelu_backward, gelu_forward, upsample_backward, upsample_forward,
    AttentionCache, Buf2, Conv1d, Linear, MultiHeadAttention, ParamBuilder, ParameterSet,
    WeightView,
};
use serde::{Deserialize, Serialize};

/// Topology of the U-Net. `channels.len()` is the number of stages; the
/// deepest stage acts as the bottleneck. Downsampling happens between
/// consecutive stages, so `downsample_factors.len() == depth − 1` and the
/// frame length must be divisible by their product.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Audio sample rate the model is trained at; carried along so
    /// checkpoints fully describe their outputs.
    pub fs: u32,
    /// Frame length in samples; 0 in a config file means "derive from
    /// fs and rpm, rounded to the nearest multiple of the total stride".
    #[serde(default)]
    pub sample_count: usize,
    pub channels: Vec<usize>,
    pub downsample_factors: Vec<usize>,
    /// Dilations of the convolutions inside each block.
    #[serde(default = "default_dilations")]
    pub dilation_pattern: Vec<usize>,
    /// 1-based encoder stages followed by self-attention.
    #[serde(default)]
    pub attention_stages: Vec<usize>,
    #[serde(default = "default_heads")]
    pub attention_heads: usize,
    #[serde(default = "default_rff_dim")]
    pub rff_dim: usize,
    #[serde(default = "default_rff_scale")]
    pub rff_scale: f64,
    /// Hidden widths of the conditioning MLP; the last entry is the
    /// embedding width consumed by the FiLM projections.
    #[serde(default = "default_mlp_dims")]
    pub mlp_dims: Vec<usize>,
    #[serde(default = "default_kernel")]
    pub kernel_size: usize,
}

fn default_dilations() -> Vec<usize> {
    vec![1, 2, 4]
}
fn default_heads() -> usize {
    4
}
fn default_rff_dim() -> usize {
    32
}
fn default_rff_scale() -> f64 {
    16.0
}
fn default_mlp_dims() -> Vec<usize> {
    vec![128, 128]
}
fn default_kernel() -> usize {
    3
}

impl NetworkConfig {
    /// Full-size topology as used for real training runs. `sample_count`
    /// must be divisible by 32.
    pub fn full(fs: u32, sample_count: usize) -> NetworkConfig {
        NetworkConfig {
            fs,
            sample_count,
            channels: vec![32, 64, 64, 128, 128, 256],
            downsample_factors: vec![2; 5],
            dilation_pattern: default_dilations(),
            attention_stages: vec![3, 4, 5],
            attention_heads: 4,
            rff_dim: 32,
            rff_scale: 16.0,
            mlp_dims: vec![128, 128],
            kernel_size: 3,
        }
    }

    /// Small topology for desk-scale training at 8 kHz.
    pub fn desk(fs: u32, sample_count: usize) -> NetworkConfig {
        NetworkConfig {
            fs,
            sample_count,
            channels: vec![8, 16],
            downsample_factors: vec![2],
            dilation_pattern: default_dilations(),
            attention_stages: vec![],
            attention_heads: 4,
            rff_dim: 16,
            rff_scale: 16.0,
            mlp_dims: vec![32, 32],
            kernel_size: 3,
        }
    }

    pub fn depth(&self) -> usize {
        self.channels.len()
    }

    pub fn total_stride(&self) -> usize {
        self.downsample_factors.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.fs == 0 {
            return err("network.fs must be positive".into());
        }
        if self.channels.is_empty() {
            return err("network.channels must not be empty".into());
        }
        if self.channels.iter().any(|&c| c == 0) {
            return err("network.channels entries must be positive".into());
        }
        if self.downsample_factors.len() + 1 != self.depth() {
            return err(format!(
                "network.downsample_factors needs {} entries for {} stages",
                self.depth() - 1,
                self.depth()
            ));
        }
        if self.downsample_factors.iter().any(|&f| f == 0) {
            return err("network.downsample_factors entries must be >= 1".into());
        }
        let stride = self.total_stride();
        if self.sample_count == 0 || self.sample_count % stride != 0 {
            return err(format!(
                "network.sample_count {} not divisible by total stride {stride}",
                self.sample_count
            ));
        }
        if self.dilation_pattern.is_empty() || self.dilation_pattern.iter().any(|&d| d == 0) {
            return err("network.dilation_pattern must hold positive dilations".into());
        }
        for &s in &self.attention_stages {
            if s == 0 || s > self.depth() {
                return err(format!(
                    "network.attention_stages entry {s} outside 1..={}",
                    self.depth()
                ));
            }
            if self.channels[s - 1] % self.attention_heads != 0 {
                return err(format!(
                    "stage {s} channels {} not divisible by {} heads",
                    self.channels[s - 1],
                    self.attention_heads
                ));
            }
        }
        if self.attention_heads == 0 {
            return err("network.attention_heads must be >= 1".into());
        }
        if self.rff_dim == 0 {
            return err("network.rff_dim must be >= 1".into());
        }
        if self.mlp_dims.is_empty() || self.mlp_dims.iter().any(|&d| d == 0) {
            return err("network.mlp_dims must hold positive widths".into());
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return err(format!("network.kernel_size {} must be odd", self.kernel_size));
        }
        Ok(())
    }
}

/// Random-Fourier-feature embedding of the noise level: interleaved
/// [cos(2π f_k σ), sin(2π f_k σ)] pairs.
pub fn rff_embed(sigma: f64, frequencies: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * frequencies.len());
    for &f in frequencies {
        let phase = 2.0 * std::f64::consts::PI * f * sigma;
        out.push(phase.cos());
        out.push(phase.sin());
    }
    out
}

/// Conditioning MLP applied to the RFF embedding, GELU between layers.
#[derive(Debug, Clone)]
struct Mlp {
    layers: Vec<Linear>,
}

struct MlpCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    fn build(pb: &mut ParamBuilder, name: &str, din: usize, dims: &[usize]) -> Mlp {
        let mut layers = Vec::new();
        let mut prev = din;
        for (i, &d) in dims.iter().enumerate() {
            layers.push(Linear::build(pb, &format!("{name}.{i}"), prev, d));
            prev = d;
        }
        Mlp { layers }
    }

    fn forward(&self, view: &WeightView, x: &[f64]) -> (Vec<f64>, MlpCache) {
        let mut cache = MlpCache { inputs: Vec::new(), pre: Vec::new() };
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, lin) in self.layers.iter().enumerate() {
            cache.inputs.push(h.clone());
            h = lin.forward(view, &h);
            if i < last {
                cache.pre.push(h.clone());
                for v in &mut h {
                    *v = layers::gelu(*v);
                }
            }
        }
        (h, cache)
    }

    fn backward(
        &self,
        view: &WeightView,
        cache: &MlpCache,
        dy: &[f64],
        grads: &mut [Vec<f64>],
    ) {
        let last = self.layers.len() - 1;
        let mut d = dy.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < last {
                for (g, &x) in d.iter_mut().zip(&cache.pre[i]) {
                    *g *= layers::gelu_grad(x);
                }
            }
            d = self.layers[i].backward(view, &cache.inputs[i], &d, grads);
        }
    }
}

/// Per-channel scale/shift projections from the conditioning embedding.
/// The scale path is offset by 1 so a fresh network starts as identity.
#[derive(Debug, Clone)]
struct Film {
    to_scale: Linear,
    to_shift: Linear,
}

struct FilmCache {
    features: Buf2,
    scale: Vec<f64>,
}

impl Film {
    fn build(pb: &mut ParamBuilder, name: &str, emb_dim: usize, ch: usize) -> Film {
        Film {
            to_scale: Linear::build(pb, &format!("{name}.scale"), emb_dim, ch),
            to_shift: Linear::build(pb, &format!("{name}.shift"), emb_dim, ch),
        }
    }

    fn forward(&self, view: &WeightView, x: &Buf2, emb: &[f64]) -> (Buf2, FilmCache) {
        let mut scale = self.to_scale.forward(view, emb);
        for s in &mut scale {
            *s += 1.0;
        }
        let shift = self.to_shift.forward(view, emb);
        let out = film_modulate(x, &scale, &shift).expect("channel widths fixed at build");
        (out, FilmCache { features: x.clone(), scale })
    }

    fn backward(
        &self,
        view: &WeightView,
        cache: &FilmCache,
        emb: &[f64],
        dy: &Buf2,
        demb: &mut [f64],
        grads: &mut [Vec<f64>],
    ) -> Buf2 {
        let ch = dy.ch;
        let mut dscale = vec![0.0; ch];
        let mut dshift = vec![0.0; ch];
        let mut dx = Buf2::zeros(ch, dy.len);
        for c in 0..ch {
            let dyr = dy.row(c);
            let xr = cache.features.row(c);
            let dxr = dx.row_mut(c);
            let mut ds = 0.0;
            let mut db = 0.0;
            for t in 0..dy.len {
                ds += xr[t] * dyr[t];
                db += dyr[t];
                dxr[t] = cache.scale[c] * dyr[t];
            }
            dscale[c] = ds;
            dshift[c] = db;
        }
        for (d, g) in demb
            .iter_mut()
            .zip(self.to_scale.backward(view, emb, &dscale, grads))
        {
            *d += g;
        }
        for (d, g) in demb
            .iter_mut()
            .zip(self.to_shift.backward(view, emb, &dshift, grads))
        {
            *d += g;
        }
        dx
    }
}

/// Stack of dilated circular convolutions with one FiLM modulation after
/// the first convolution, GELU activations, and a residual connection.
#[derive(Debug, Clone)]
struct ConvBlock {
    convs: Vec<Conv1d>,
    film: Film,
}

struct ConvBlockCache {
    conv_inputs: Vec<Buf2>,
    film: Option<FilmCache>,
    gelu_pre: Vec<Buf2>,
}

impl ConvBlock {
    fn build(
        pb: &mut ParamBuilder,
        name: &str,
        ch: usize,
        emb_dim: usize,
        k: usize,
        dilations: &[usize],
    ) -> ConvBlock {
        let convs = dilations
            .iter()
            .enumerate()
            .map(|(i, &d)| Conv1d::build(pb, &format!("{name}.conv{i}"), ch, ch, k, 1, d))
            .collect();
        ConvBlock { convs, film: Film::build(pb, &format!("{name}.film"), emb_dim, ch) }
    }

    fn forward(&self, view: &WeightView, x: &Buf2, emb: &[f64]) -> (Buf2, ConvBlockCache) {
        let mut cache =
            ConvBlockCache { conv_inputs: Vec::new(), film: None, gelu_pre: Vec::new() };
        let mut h = x.clone();
        for (j, conv) in self.convs.iter().enumerate() {
            cache.conv_inputs.push(h.clone());
            h = conv.forward(view, &h);
            if j == 0 {
                let (modulated, fc) = self.film.forward(view, &h, emb);
                cache.film = Some(fc);
                h = modulated;
            }
            cache.gelu_pre.push(gelu_forward(&mut h));
        }
        h.add_assign(x);
        (h, cache)
    }

    fn backward(
        &self,
        view: &WeightView,
        cache: &ConvBlockCache,
        emb: &[f64],
        dy: &Buf2,
        demb: &mut [f64],
        grads: &mut [Vec<f64>],
    ) -> Buf2 {
        let residual = dy.clone();
        let mut d = dy.clone();
        for j in (0..self.convs.len()).rev() {
            gelu_backward(&cache.gelu_pre[j], &mut d);
            if j == 0 {
                d = self.film.backward(
                    view,
                    cache.film.as_ref().expect("film cached in forward"),
                    emb,
                    &d,
                    demb,
                    grads,
                );
            }
            d = self.convs[j].backward(view, &cache.conv_inputs[j], &d, grads);
        }
        d.add_assign(&residual);
        d
    }
}

/// The assembled U-Net with parameter ids resolved against a
/// [`ParameterSet`] built alongside it.
#[derive(Debug, Clone)]
pub struct UNet {
    pub config: NetworkConfig,
    rff_freq: usize,
    mlp: Mlp,
    conv_in: Conv1d,
    enc: Vec<ConvBlock>,
    attn: Vec<Option<MultiHeadAttention>>,
    down: Vec<Conv1d>,
    up: Vec<Conv1d>,
    dec: Vec<ConvBlock>,
    conv_out: Conv1d,
}

pub struct UNetCache {
    emb: Vec<f64>,
    mlp: MlpCache,
    input: Buf2,
    enc_caches: Vec<ConvBlockCache>,
    attn_caches: Vec<Option<AttentionCache>>,
    /// Skip value e_i (post-attention block output) per stage; doubles as
    /// the input cached for the downsampling convolutions.
    skips: Vec<Buf2>,
    up_inputs: Vec<Buf2>,
    dec_caches: Vec<ConvBlockCache>,
    out_input: Buf2,
}

/// Deterministic parameter initialization for a validated configuration.
pub fn init_params(config: &NetworkConfig, seed: u64) -> Result<(UNet, ParameterSet)> {
    config.validate()?;
    let mut pb = ParamBuilder::new(rng_for(seed, "denoiser-init"));
    let rff_freq =
        pb.frozen_normal("rff.freq".into(), vec![config.rff_dim], config.rff_scale);
    let emb_dim = *config.mlp_dims.last().expect("validated non-empty");
    let mlp = Mlp::build(&mut pb, "mlp", 2 * config.rff_dim, &config.mlp_dims);
    let ch = &config.channels;
    let depth = config.depth();
    let conv_in = Conv1d::build(&mut pb, "conv_in", 1, ch[0], 5, 1, 1);
    let mut enc = Vec::with_capacity(depth);
    let mut attn = Vec::with_capacity(depth);
    for i in 0..depth {
        enc.push(ConvBlock::build(
            &mut pb,
            &format!("enc{i}"),
            ch[i],
            emb_dim,
            config.kernel_size,
            &config.dilation_pattern,
        ));
        if config.attention_stages.contains(&(i + 1)) {
            attn.push(Some(MultiHeadAttention::build(
                &mut pb,
                &format!("attn{i}"),
                ch[i],
                config.attention_heads,
            )?));
        } else {
            attn.push(None);
        }
    }
    let mut down = Vec::new();
    let mut up = Vec::new();
    let mut dec = Vec::new();
    for i in 0..depth - 1 {
        let f = config.downsample_factors[i];
        down.push(Conv1d::build(&mut pb, &format!("down{i}"), ch[i], ch[i + 1], 2 * f + 1, f, 1));
        up.push(Conv1d::build(&mut pb, &format!("up{i}"), ch[i + 1], ch[i], 2 * f + 1, 1, 1));
        dec.push(ConvBlock::build(
            &mut pb,
            &format!("dec{i}"),
            ch[i],
            emb_dim,
            config.kernel_size,
            &config.dilation_pattern,
        ));
    }
    // Zero-initialized output projection: a fresh network predicts zero.
    let conv_out = Conv1d::build_zero(&mut pb, "conv_out", ch[0], 1, 5);
    let net = UNet {
        config: config.clone(),
        rff_freq,
        mlp,
        conv_in,
        enc,
        attn,
        down,
        up,
        dec,
        conv_out,
    };
    Ok((net, pb.finish()))
}

impl UNet {
    /// Full forward pass; returns ε̂ and the cache needed for backward.
    pub fn forward(
        &self,
        view: &WeightView,
        z: &[f64],
        sigma: f64,
    ) -> Result<(Vec<f64>, UNetCache)> {
        if z.len() != self.config.sample_count {
            return Err(Error::domain(
                "denoiser",
                format!("frame length {} != configured {}", z.len(), self.config.sample_count),
            ));
        }
        if !(0.0..=1.0).contains(&sigma) {
            return Err(Error::domain("denoiser", format!("noise level {sigma} outside [0, 1]")));
        }
        let rff = rff_embed(sigma, view.get(self.rff_freq));
        let (emb, mlp_cache) = self.mlp.forward(view, &rff);
        let depth = self.config.depth();
        let input = Buf2 { ch: 1, len: z.len(), data: z.to_vec() };
        let mut h = self.conv_in.forward(view, &input);
        let mut enc_caches = Vec::with_capacity(depth);
        let mut attn_caches = Vec::with_capacity(depth);
        let mut skips = Vec::with_capacity(depth);
        for i in 0..depth {
            let (out, cache) = self.enc[i].forward(view, &h, &emb);
            enc_caches.push(cache);
            h = out;
            if let Some(attn) = &self.attn[i] {
                let (a_out, a_cache) = attn.forward(view, &h);
                h.add_assign(&a_out);
                attn_caches.push(Some(a_cache));
            } else {
                attn_caches.push(None);
            }
            skips.push(h.clone());
            if i < depth - 1 {
                h = self.down[i].forward(view, &h);
            }
        }
        let mut up_inputs = vec![Buf2::zeros(0, 0); depth.saturating_sub(1)];
        let mut dec_caches = Vec::with_capacity(depth.saturating_sub(1));
        for i in (0..depth - 1).rev() {
            let upsampled = upsample_forward(&h, self.config.downsample_factors[i]);
            let mut u = self.up[i].forward(view, &upsampled);
            up_inputs[i] = upsampled;
            u.add_assign(&skips[i]);
            let (out, cache) = self.dec[i].forward(view, &u, &emb);
            // decoder caches are stored bottom-up (deepest first)
            dec_caches.push(cache);
            h = out;
        }
        let out_input = h.clone();
        let y = self.conv_out.forward(view, &h);
        let eps_hat = y.data;
        if eps_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "denoiser produced non-finite output at sigma {sigma}"
            )));
        }
        Ok((
            eps_hat,
            UNetCache {
                emb,
                mlp: mlp_cache,
                input,
                enc_caches,
                attn_caches,
                skips,
                up_inputs,
                dec_caches,
                out_input,
            },
        ))
    }

    /// Accumulate parameter gradients for an upstream gradient dL/dε̂.
    pub fn backward(
        &self,
        view: &WeightView,
        cache: &UNetCache,
        d_eps: &[f64],
        grads: &mut [Vec<f64>],
    ) {
        let depth = self.config.depth();
        let emb_dim = cache.emb.len();
        let mut demb = vec![0.0; emb_dim];
        let dy = Buf2 { ch: 1, len: d_eps.len(), data: d_eps.to_vec() };
        let mut d = self.conv_out.backward(view, &cache.out_input, &dy, grads);
        // decoder backward, shallowest stage first
        let mut dskips: Vec<Option<Buf2>> = vec![None; depth];
        for i in 0..depth - 1 {
            let cache_idx = depth - 2 - i; // dec_caches stored deepest-first
            d = self.dec[i].backward(view, &cache.dec_caches[cache_idx], &cache.emb, &d, &mut demb, grads);
            dskips[i] = Some(d.clone());
            let du = self.up[i].backward(view, &cache.up_inputs[i], &d, grads);
            d = upsample_backward(&du, self.config.downsample_factors[i]);
        }
        dskips[depth - 1] = Some(d);
        // encoder backward, deepest stage first
        let mut d_block_input: Option<Buf2> = None;
        for i in (0..depth).rev() {
            let mut g = dskips[i].take().expect("every stage received a gradient");
            if i < depth - 1 {
                let from_down = self.down[i].backward(
                    view,
                    &cache.skips[i],
                    d_block_input.as_ref().expect("deeper stage already processed"),
                    grads,
                );
                g.add_assign(&from_down);
            }
            if let Some(attn) = &self.attn[i] {
                let a_cache = cache.attn_caches[i].as_ref().expect("attention cached");
                let da = attn.backward(view, a_cache, &g, grads);
                g.add_assign(&da);
            }
            d_block_input =
                Some(self.enc[i].backward(view, &cache.enc_caches[i], &cache.emb, &g, &mut demb, grads));
        }
        let d_in = d_block_input.expect("stage 0 processed");
        self.conv_in.backward(view, &cache.input, &d_in, grads);
        self.mlp.backward(view, &cache.mlp, &demb, grads);
    }
}

/// Anything that maps (z, σ) to a same-length noise estimate. The forward
/// pass never mutates parameters, so predictors are shared freely across
/// threads.
pub trait NoisePredictor: Send + Sync {
    fn frame_len(&self) -> usize;
    fn predict_noise(&self, z: &[f64], sigma: f64) -> Result<Vec<f64>>;
}

/// Network-backed predictor; samplers use the EMA weights.
pub struct UNetDenoiser {
    pub net: UNet,
    pub params: ParameterSet,
    pub use_ema: bool,
}

impl NoisePredictor for UNetDenoiser {
    fn frame_len(&self) -> usize {
        self.net.config.sample_count
    }

    fn predict_noise(&self, z: &[f64], sigma: f64) -> Result<Vec<f64>> {
        let view =
            if self.use_ema { WeightView::ema(&self.params) } else { WeightView::raw(&self.params) };
        let (eps, _) = self.net.forward(&view, z, sigma)?;
        Ok(eps)
    }
}

/// Closed-form optimal predictor for zero-mean Gaussian data with known
/// standard deviation: ε̂ = σ z / (α² s² + σ²) with α² = 1 − σ². Used by the
/// end-to-end sampler oracles.
pub struct AnalyticGaussianDenoiser {
    pub frame_len: usize,
    pub data_std: f64,
}

impl NoisePredictor for AnalyticGaussianDenoiser {
    fn frame_len(&self) -> usize {
        self.frame_len
    }

    fn predict_noise(&self, z: &[f64], sigma: f64) -> Result<Vec<f64>> {
        let alpha_sq = (1.0 - sigma * sigma).max(0.0);
        let denom = alpha_sq * self.data_std * self.data_std + sigma * sigma;
        Ok(z.iter().map(|v| sigma * v / denom).collect())
    }
}
