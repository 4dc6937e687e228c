//! Training loop: draw (x, ε, τ), form z_τ = α_τ x + σ_τ ε, regress the
//! noise with a constant-weighted mean-squared loss, take one Adam step on
//! the batch mean, and relax the EMA shadow toward the raw weights.
//!
//! Batch items run forward/backward in parallel; their gradients are
//! reduced in index order so parallel and serial execution produce
//! identical results.

use crate::dataset::BatchIterator;
pub use crate::denoiser::layers::ema_update;
use crate::denoiser::layers::{ParameterSet, WeightView};
use crate::denoiser::UNet;
use crate::error::{Error, Result};
use crate::rng::{normal_frame, ChaCha8Rng};
use crate::schedule::{alpha, sigma, DiffusionTime};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub ema_rate: f64,
    pub batch_size: usize,
    pub total_iterations: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub checkpoint_interval: u64,
    /// Optional global-norm gradient clip for desk-scale stability.
    pub grad_clip: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 2e-4,
            ema_rate: 0.999,
            batch_size: 16,
            total_iterations: 750_000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            checkpoint_interval: 10_000,
            grad_clip: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.ema_rate && self.ema_rate < 1.0) {
            return Err(Error::Config(format!("training.ema_rate {} outside (0, 1)", self.ema_rate)));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "training.learning_rate {} must be non-negative",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("training.batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Config("training.adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One training step's outcome.
#[derive(Debug, Clone, Serialize)]
pub struct LossReport {
    pub iteration: u64,
    pub loss: f64,
    pub grad_norm: f64,
    #[serde(serialize_with = "serialize_secs")]
    pub wall_time: Duration,
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Constant-weighted ε-prediction loss: mean of squared differences.
pub fn diffusion_loss(eps_true: &[f64], eps_pred: &[f64]) -> Result<f64> {
    if eps_true.len() != eps_pred.len() {
        return Err(Error::domain(
            "trainer",
            format!("loss length mismatch: {} vs {}", eps_true.len(), eps_pred.len()),
        ));
    }
    let n = eps_true.len().max(1);
    Ok(eps_true.iter().zip(eps_pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64)
}

/// Adam moment buffers; `t` counts completed steps.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParameterSet) -> Self {
        AdamState { m: params.grad_buffers(), v: params.grad_buffers(), t: 0 }
    }
}

/// One Adam update over the trainable tensors.
pub fn adam_step(
    params: &mut ParameterSet,
    state: &mut AdamState,
    grads: &[Vec<f64>],
    config: &TrainingConfig,
) {
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - config.adam_beta1.powi(t);
    let bc2 = 1.0 - config.adam_beta2.powi(t);
    for (id, tensor) in params.tensors.iter_mut().enumerate() {
        if !tensor.trainable {
            continue;
        }
        let m = &mut state.m[id];
        let v = &mut state.v[id];
        let g = &grads[id];
        for i in 0..tensor.data.len() {
            m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g[i];
            v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            tensor.data[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon);
        }
    }
}

/// Owns the parameters and optimizer state for one training stream.
pub struct Trainer {
    pub net: UNet,
    pub params: ParameterSet,
    pub opt: AdamState,
    pub config: TrainingConfig,
    pub iteration: u64,
    pub train_rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(net: UNet, params: ParameterSet, config: TrainingConfig, train_rng: ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let opt = AdamState::new(&params);
        Ok(Trainer { net, params, opt, config, iteration: 0, train_rng })
    }

    /// One optimization step over a batch of normalized frames.
    pub fn step(&mut self, batch: &[Vec<f64>]) -> Result<LossReport> {
        let started = Instant::now();
        let frame_len = self.net.config.sample_count;
        if batch.is_empty() {
            return Err(Error::domain("trainer", "empty batch"));
        }
        for item in batch {
            if item.len() != frame_len {
                return Err(Error::domain(
                    "trainer",
                    format!("batch frame of {} samples, expected {frame_len}", item.len()),
                ));
            }
        }
        // Draw (τ, ε) serially so the draw order is independent of how the
        // batch items are scheduled.
        let draws: Vec<(f64, Vec<f64>)> = batch
            .iter()
            .map(|_| {
                let tau: f64 = self.train_rng.random::<f64>();
                let eps = normal_frame(&mut self.train_rng, frame_len);
                (tau, eps)
            })
            .collect();

        let net = &self.net;
        let params = &self.params;
        let scale = 2.0 / (frame_len as f64 * batch.len() as f64);
        let results: Vec<Result<(f64, Vec<Vec<f64>>)>> = batch
            .par_iter()
            .zip(draws.par_iter())
            .map(|(x, (tau, eps))| {
                let tau = DiffusionTime::new(*tau)?;
                let (a, s) = (alpha(tau), sigma(tau));
                let z: Vec<f64> =
                    x.iter().zip(eps).map(|(xi, ei)| a * xi + s * ei).collect();
                let view = WeightView::raw(params);
                let (eps_hat, cache) = net.forward(&view, &z, s)?;
                let loss = diffusion_loss(eps, &eps_hat)?;
                let d_eps: Vec<f64> =
                    eps_hat.iter().zip(eps).map(|(p, e)| scale * (p - e)).collect();
                let mut grads = params.grad_buffers();
                net.backward(&view, &cache, &d_eps, &mut grads);
                Ok((loss, grads))
            })
            .collect();

        let mut total_loss = 0.0;
        let mut grads = self.params.grad_buffers();
        for r in results {
            let (loss, item_grads) = r.map_err(|e| {
                Error::Numeric(format!("iteration {}: {e}", self.iteration))
            })?;
            total_loss += loss;
            for (acc, g) in grads.iter_mut().zip(item_grads) {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += b;
                }
            }
        }
        let loss = total_loss / batch.len() as f64;
        let mut grad_norm_sq = 0.0;
        for (id, tensor) in self.params.tensors.iter().enumerate() {
            if tensor.trainable {
                grad_norm_sq += grads[id].iter().map(|g| g * g).sum::<f64>();
            }
        }
        let mut grad_norm = grad_norm_sq.sqrt();
        if !loss.is_finite() || !grad_norm.is_finite() {
            return Err(Error::Numeric(format!(
                "iteration {}: non-finite loss {loss} or gradient norm {grad_norm}; parameters left untouched",
                self.iteration
            )));
        }
        if let Some(clip) = self.config.grad_clip {
            if grad_norm > clip {
                let s = clip / grad_norm;
                for g in &mut grads {
                    for v in g.iter_mut() {
                        *v *= s;
                    }
                }
                grad_norm = clip;
            }
        }
        adam_step(&mut self.params, &mut self.opt, &grads, &self.config);
        for (id, tensor) in self.params.tensors.iter().enumerate() {
            ema_update(&mut self.params.ema[id], &tensor.data, self.config.ema_rate)?;
        }
        self.iteration += 1;
        Ok(LossReport {
            iteration: self.iteration,
            loss,
            grad_norm,
            wall_time: started.elapsed(),
        })
    }
}

/// Run `iterations` steps from the data iterator, invoking the callback
/// after every step (for logging and checkpointing).
pub fn train<F>(
    trainer: &mut Trainer,
    data: &mut BatchIterator,
    iterations: u64,
    mut on_iteration: F,
) -> Result<()>
where
    F: FnMut(&mut Trainer, &mut BatchIterator, &LossReport) -> Result<()>,
{
    for _ in 0..iterations {
        let batch = data.next_batch();
        let report = trainer.step(&batch)?;
        on_iteration(trainer, data, &report)?;
    }
    Ok(())
}

/// Line-delimited structured progress record.
pub fn progress_line(report: &LossReport) -> String {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    serde_json::json!({
        "iteration": report.iteration,
        "loss": report.loss,
        "grad_norm": report.grad_norm,
        "seconds": report.wall_time.as_secs_f64(),
        "timestamp": timestamp,
    })
    .to_string()
}
