//! Reverse-diffusion inference: unconditional sampling, guided sampling
//! from a truncation step τ₀, bifurcation at a step τ_p into N correlated
//! revolution variants, and assembly of revolutions into long tracks.
//!
//! The diffusion index is discretized on the uniform grid i/T. Requested
//! τ₀ and τ_p values are rounded to the nearest grid point. Every entry
//! point is a pure function of (denoiser, run configuration, seed): the
//! prior draw, the guide perturbation, the step noise, and each branch's
//! noise come from separate seed-derived streams, so parallel and serial
//! branch execution produce identical output.

use crate::denoiser::NoisePredictor;
use crate::error::{Error, Result};
use crate::rng::{normal_frame, rng_for, rng_for_index, ChaCha8Rng};
use crate::schedule::{alpha, reverse_coefficients, sigma, DiffusionTime};
use rand::Rng;
use rayon::prelude::*;

/// Configuration of one reverse-diffusion execution.
#[derive(Debug, Clone)]
pub struct SamplerRun {
    /// Number of discretization steps T.
    pub steps: usize,
    /// Truncation step; 1 starts from the prior (unconditional).
    pub tau0: f64,
    /// Bifurcation step, when revolution variants are wanted.
    pub tau_p: Option<f64>,
    /// Number of revolutions N produced at the bifurcation.
    pub revolutions: usize,
    pub seed: u64,
}

impl SamplerRun {
    pub fn unconditional(steps: usize, seed: u64) -> Self {
        SamplerRun { steps, tau0: 1.0, tau_p: None, revolutions: 1, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::domain("sampler", "step count must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.tau0) {
            return Err(Error::domain("sampler", format!("tau0 {} outside [0, 1]", self.tau0)));
        }
        if self.revolutions == 0 {
            return Err(Error::domain("sampler", "revolution count must be >= 1"));
        }
        match self.tau_p {
            Some(tp) => {
                if !(0.0..=1.0).contains(&tp) || tp >= self.tau0 {
                    return Err(Error::domain(
                        "sampler",
                        format!("tau_p {tp} must lie in [0, tau0 = {})", self.tau0),
                    ));
                }
            }
            None => {
                if self.revolutions > 1 {
                    return Err(Error::domain(
                        "sampler",
                        "more than one revolution requires a bifurcation step tau_p",
                    ));
                }
            }
        }
        Ok(())
    }

    fn grid_index(&self, tau: f64) -> usize {
        (tau * self.steps as f64).round() as usize
    }
}

/// One point of the reverse trajectory.
#[derive(Debug, Clone)]
pub struct LatentState {
    pub z: Vec<f64>,
    pub tau: DiffusionTime,
}

/// Forward perturbation z_τ = α_τ·x + σ_τ·ε.
pub fn perturb(x: &[f64], tau: DiffusionTime, eps: &[f64]) -> Result<LatentState> {
    if x.len() != eps.len() {
        return Err(Error::domain(
            "sampler",
            format!("perturb length mismatch: {} vs {}", x.len(), eps.len()),
        ));
    }
    let (a, s) = (alpha(tau), sigma(tau));
    Ok(LatentState { z: x.iter().zip(eps).map(|(xi, ei)| a * xi + s * ei).collect(), tau })
}

/// One reverse step z_s = f·z_τ − g·ε̂ + h·ε. The noise term is omitted at
/// s = 0 and `eps` must be given exactly when s > 0.
pub fn reverse_step(
    state: &LatentState,
    eps_hat: &[f64],
    s: DiffusionTime,
    eps: Option<&[f64]>,
) -> Result<LatentState> {
    if s.value() >= state.tau.value() {
        return Err(Error::domain(
            "sampler",
            format!("reverse step needs s < tau, got {} >= {}", s.value(), state.tau.value()),
        ));
    }
    if eps_hat.len() != state.z.len() {
        return Err(Error::domain("sampler", "noise estimate length mismatch"));
    }
    let want_noise = s.value() > 0.0;
    let coeff = reverse_coefficients(state.tau, s)?;
    let mut z: Vec<f64> =
        state.z.iter().zip(eps_hat).map(|(zv, ev)| coeff.f * zv - coeff.g * ev).collect();
    match (want_noise, eps) {
        (true, Some(noise)) => {
            if noise.len() != z.len() {
                return Err(Error::domain("sampler", "injected noise length mismatch"));
            }
            for (zv, nv) in z.iter_mut().zip(noise) {
                *zv += coeff.h * nv;
            }
        }
        (false, None) => {}
        (true, None) => {
            return Err(Error::domain("sampler", "noise required for steps ending above 0"))
        }
        (false, Some(_)) => {
            return Err(Error::domain("sampler", "no noise is injected at s = 0"))
        }
    }
    Ok(LatentState { z, tau: s })
}

/// Iterate the reverse chain from grid index `from` down to `to`
/// (`from/T → to/T`), drawing injected noise from `rng`.
fn run_chain(
    den: &dyn NoisePredictor,
    mut state: LatentState,
    from: usize,
    to: usize,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LatentState> {
    debug_assert!(from <= steps && to <= from);
    for i in (to..from).rev() {
        let s = DiffusionTime::from_grid(i, steps)?;
        let tau = state.tau;
        let eps_hat = den
            .predict_noise(&state.z, sigma(tau))
            .map_err(|e| Error::Numeric(format!("denoiser failed at step {}: {e}", i + 1)))?;
        let noise = if i > 0 { Some(normal_frame(rng, state.z.len())) } else { None };
        state = reverse_step(&state, &eps_hat, s, noise.as_deref())?;
    }
    Ok(state)
}

/// Unconditional sampling: start from the standard-normal prior at τ = 1
/// and iterate all T steps down to τ = 0.
pub fn sample_unconditional(den: &dyn NoisePredictor, run: &SamplerRun) -> Result<Vec<f64>> {
    run.validate()?;
    if run.tau0 != 1.0 {
        return Err(Error::domain("sampler", "unconditional sampling requires tau0 = 1"));
    }
    if run.tau_p.is_some() {
        return Err(Error::domain(
            "sampler",
            "use sample_revolutions for bifurcated sampling",
        ));
    }
    let len = den.frame_len();
    let z1 = normal_frame(&mut rng_for(run.seed, "prior"), len);
    let start = LatentState { z: z1, tau: DiffusionTime::new(1.0)? };
    let mut rng = rng_for(run.seed, "steps");
    Ok(run_chain(den, start, run.steps, 0, run.steps, &mut rng)?.z)
}

/// Guided sampling: perturb the guide to the truncation step τ₀ and refine
/// it down to τ = 0. τ₀ = 0 (after grid rounding) returns the guide
/// unchanged — a documented degenerate case, not an error.
pub fn sample_guided(
    den: &dyn NoisePredictor,
    guide: &[f64],
    run: &SamplerRun,
) -> Result<Vec<f64>> {
    run.validate()?;
    if run.tau_p.is_some() || run.revolutions != 1 {
        return Err(Error::domain(
            "sampler",
            "use sample_revolutions for bifurcated sampling",
        ));
    }
    if guide.len() != den.frame_len() {
        return Err(Error::domain(
            "sampler",
            format!("guide of {} samples, denoiser expects {}", guide.len(), den.frame_len()),
        ));
    }
    let idx0 = run.grid_index(run.tau0);
    if idx0 == 0 {
        return Ok(guide.to_vec());
    }
    let tau0 = DiffusionTime::from_grid(idx0, run.steps)?;
    let eps = normal_frame(&mut rng_for(run.seed, "guide-perturb"), guide.len());
    let start = perturb(guide, tau0, &eps)?;
    let mut rng = rng_for(run.seed, "steps");
    Ok(run_chain(den, start, idx0, 0, run.steps, &mut rng)?.z)
}

/// Result of a bifurcated run: the N revolution frames plus the shared
/// latent at the bifurcation point (kept for inspection; every branch
/// continued from exactly this state).
#[derive(Debug, Clone)]
pub struct VariationOutcome {
    pub frames: Vec<Vec<f64>>,
    pub shared: LatentState,
}

/// Run a single shared trajectory from `start` down to τ_p, split it into
/// N stochastic instances of the next step, and continue each branch
/// independently to τ = 0.
///
/// Branch 0 keeps drawing from the main step-noise stream, so N = 1
/// reproduces the unbifurcated trajectory bit for bit; branches 1..N draw
/// from streams derived from (seed, branch index).
pub fn sample_variations(
    den: &dyn NoisePredictor,
    run: &SamplerRun,
    start: LatentState,
) -> Result<VariationOutcome> {
    run.validate()?;
    let tau_p = run.tau_p.ok_or_else(|| {
        Error::domain("sampler", "sample_variations needs a bifurcation step tau_p")
    })?;
    if tau_p >= start.tau.value() {
        return Err(Error::domain(
            "sampler",
            format!("tau_p {tau_p} must lie below the start tau {}", start.tau.value()),
        ));
    }
    let idx_p = run.grid_index(tau_p);
    let idx_start = run.grid_index(start.tau.value());
    if idx_p == 0 {
        return Err(Error::domain(
            "sampler",
            "tau_p rounds to grid index 0; no stochastic step remains to bifurcate",
        ));
    }
    let mut rng = rng_for(run.seed, "steps");
    let shared = run_chain(den, start, idx_start, idx_p, run.steps, &mut rng)?;
    // One denoiser evaluation at τ_p serves every branch.
    let eps_hat = den
        .predict_noise(&shared.z, sigma(shared.tau))
        .map_err(|e| Error::Numeric(format!("denoiser failed at bifurcation: {e}")))?;
    let s_p = DiffusionTime::from_grid(idx_p - 1, run.steps)?;
    let branch_inputs: Vec<(usize, ChaCha8Rng)> = (0..run.revolutions)
        .map(|n| {
            let branch_rng = if n == 0 {
                rng.clone()
            } else {
                rng_for_index(run.seed, "branch", n as u64)
            };
            (n, branch_rng)
        })
        .collect();
    let frames: Result<Vec<Vec<f64>>> = branch_inputs
        .into_par_iter()
        .map(|(n, mut branch_rng)| {
            let state = if s_p.value() > 0.0 {
                let noise = normal_frame(&mut branch_rng, shared.z.len());
                reverse_step(&shared, &eps_hat, s_p, Some(&noise))?
            } else {
                // bifurcating at the final grid step: h = 0, branches coincide
                reverse_step(&shared, &eps_hat, s_p, None)?
            };
            run_chain(den, state, idx_p - 1, 0, run.steps, &mut branch_rng)
                .map(|s| s.z)
                .map_err(|e| Error::Numeric(format!("branch {n}: {e}")))
        })
        .collect();
    Ok(VariationOutcome { frames: frames?, shared })
}

/// High-level entry combining guided start, truncation, and bifurcation:
/// returns N revolution frames (N = 1 when no bifurcation is requested).
pub fn sample_revolutions(
    den: &dyn NoisePredictor,
    guide: Option<&[f64]>,
    run: &SamplerRun,
) -> Result<Vec<Vec<f64>>> {
    run.validate()?;
    if run.tau_p.is_none() {
        return match guide {
            Some(g) => Ok(vec![sample_guided(den, g, run)?]),
            None => Ok(vec![sample_unconditional(den, run)?]),
        };
    }
    let len = den.frame_len();
    let start = match guide {
        None => {
            if run.tau0 != 1.0 {
                return Err(Error::domain(
                    "sampler",
                    "unconditional sampling requires tau0 = 1",
                ));
            }
            let z1 = normal_frame(&mut rng_for(run.seed, "prior"), len);
            LatentState { z: z1, tau: DiffusionTime::new(1.0)? }
        }
        Some(g) => {
            if g.len() != len {
                return Err(Error::domain(
                    "sampler",
                    format!("guide of {} samples, denoiser expects {len}", g.len()),
                ));
            }
            let idx0 = run.grid_index(run.tau0);
            if idx0 == 0 {
                return Ok(vec![g.to_vec(); run.revolutions]);
            }
            let tau0 = DiffusionTime::from_grid(idx0, run.steps)?;
            let eps = normal_frame(&mut rng_for(run.seed, "guide-perturb"), len);
            perturb(g, tau0, &eps)?
        }
    };
    Ok(sample_variations(den, run, start)?.frames)
}

/// Concatenate randomly chosen frames (uniform, with replacement) until the
/// requested duration is covered, joining consecutive frames with an
/// equal-power crossfade of `overlap_s` seconds (0 = plain concatenation),
/// then truncate to round(fs·total_duration) samples.
pub fn assemble_track(
    frames: &[Vec<f64>],
    fs: u32,
    total_duration_s: f64,
    overlap_s: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if frames.is_empty() {
        return Err(Error::domain("sampler", "assemble_track needs at least one frame"));
    }
    let frame_len = frames[0].len();
    if frames.iter().any(|f| f.len() != frame_len) || frame_len == 0 {
        return Err(Error::domain("sampler", "assemble_track frames must share a length"));
    }
    let overlap = (overlap_s * fs as f64).round() as usize;
    if overlap >= frame_len {
        return Err(Error::domain(
            "sampler",
            format!("overlap of {overlap} samples not below frame length {frame_len}"),
        ));
    }
    if total_duration_s <= 0.0 {
        return Err(Error::domain("sampler", "track duration must be positive"));
    }
    let total_len = (fs as f64 * total_duration_s).round() as usize;
    let mut out: Vec<f64> = Vec::new();
    while out.len() < total_len + frame_len {
        let next = &frames[rng.random_range(0..frames.len())];
        if out.is_empty() {
            out.extend_from_slice(next);
            continue;
        }
        let join = out.len() - overlap;
        for i in 0..overlap {
            let theta = std::f64::consts::FRAC_PI_2 * (i as f64 + 0.5) / overlap as f64;
            out[join + i] = out[join + i] * theta.cos() + next[i] * theta.sin();
        }
        out.extend_from_slice(&next[overlap..]);
    }
    out.truncate(total_len);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::AnalyticGaussianDenoiser;
    use crate::rng::{rng_from_seed, standard_normal};
    use crate::schedule::{alpha_ratio, sigma_cond_sq};

    fn t(x: f64) -> DiffusionTime {
        DiffusionTime::new(x).unwrap()
    }

    #[test]
    fn perturb_endpoints() {
        let x = normal_frame(&mut rng_from_seed(1), 16);
        let eps = normal_frame(&mut rng_from_seed(2), 16);
        let z0 = perturb(&x, t(0.0), &eps).unwrap();
        assert_eq!(z0.z, x);
        let z1 = perturb(&x, t(1.0), &eps).unwrap();
        for ((zv, xv), ev) in z1.z.iter().zip(&x).zip(&eps) {
            // α is floored at 1e-4, so z ≈ ε with a 1e-4·x remnant
            assert!((zv - ev - 1e-4 * xv).abs() < 1e-15);
        }
        assert!(perturb(&x, t(0.5), &eps[..4]).is_err());
    }

    #[test]
    fn perturb_preserves_unit_variance() {
        let mut rng = rng_from_seed(3);
        for &tau in &[0.25, 0.5, 0.9] {
            let n = 200_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let x = standard_normal(&mut rng);
                let e = standard_normal(&mut rng);
                let z = alpha(t(tau)) * x + sigma(t(tau)) * e;
                acc += z * z;
            }
            let var = acc / n as f64;
            assert!((var - 1.0).abs() < 0.02, "tau {tau}: variance {var}");
        }
    }

    #[test]
    fn reverse_step_posterior_mean_identity() {
        // with the exact ε used in perturb, f·z − g·ε equals the posterior
        // mean of the forward chain
        let mut rng = rng_from_seed(4);
        for &(tau_v, s_v) in &[(0.5, 0.25), (0.9, 0.6), (0.15, 0.05)] {
            let x = normal_frame(&mut rng, 32);
            let eps = normal_frame(&mut rng, 32);
            let state = perturb(&x, t(tau_v), &eps).unwrap();
            let next = reverse_step(&state, &eps, t(s_v), Some(&vec![0.0; 32])).unwrap();
            let ar = alpha_ratio(t(tau_v), t(s_v)).unwrap();
            let st2 = sigma(t(tau_v)) * sigma(t(tau_v));
            let var_c = sigma_cond_sq(t(tau_v), t(s_v)).unwrap();
            for i in 0..32 {
                let posterior = ar * sigma(t(s_v)) * sigma(t(s_v)) / st2 * state.z[i]
                    + alpha(t(s_v)) * var_c / st2 * x[i];
                assert!((next.z[i] - posterior).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reverse_step_noise_contract() {
        let x = normal_frame(&mut rng_from_seed(5), 8);
        let eps = normal_frame(&mut rng_from_seed(6), 8);
        let state = perturb(&x, t(0.5), &eps).unwrap();
        // s = 0 takes no noise
        assert!(reverse_step(&state, &eps, t(0.0), None).is_ok());
        assert!(reverse_step(&state, &eps, t(0.0), Some(&eps)).is_err());
        // s > 0 requires noise
        assert!(reverse_step(&state, &eps, t(0.25), None).is_err());
        // ordering violation rejected
        assert!(reverse_step(&state, &eps, t(0.7), Some(&eps)).is_err());
    }

    #[test]
    fn scalar_chain_matches_posterior_moments() {
        // distribution of z_s from reverse_step with the true ε̂ (analytic
        // posterior mean predictor) matches q(z_s | z_τ, x) moments
        let n = 200_000;
        let (tau_v, s_v) = (0.6, 0.4);
        let mut rng = rng_from_seed(7);
        let x = 0.8;
        let ar = alpha_ratio(t(tau_v), t(s_v)).unwrap();
        let var_c = sigma_cond_sq(t(tau_v), t(s_v)).unwrap();
        // fix one z_τ draw and push many reverse steps through it
        let z_tau = alpha(t(tau_v)) * x + sigma(t(tau_v)) * 0.3;
        let eps_exact = (z_tau - alpha(t(tau_v)) * x) / sigma(t(tau_v));
        let state = LatentState { z: vec![z_tau], tau: t(tau_v) };
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let noise = vec![standard_normal(&mut rng)];
            let out = reverse_step(&state, &[eps_exact], t(s_v), Some(&noise)).unwrap();
            sum += out.z[0];
            sum_sq += out.z[0] * out.z[0];
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let st2 = sigma(t(tau_v)) * sigma(t(tau_v));
        let expected_mean =
            ar * sigma(t(s_v)) * sigma(t(s_v)) / st2 * z_tau + alpha(t(s_v)) * var_c / st2 * x;
        let expected_var = var_c * sigma(t(s_v)) * sigma(t(s_v)) / st2;
        let se_mean = expected_var.sqrt() / (n as f64).sqrt();
        let se_var = expected_var * (2.0 / n as f64).sqrt();
        assert!((mean - expected_mean).abs() < 3.0 * se_mean, "{mean} vs {expected_mean}");
        assert!((var - expected_var).abs() < 3.0 * se_var, "{var} vs {expected_var}");
    }

    #[test]
    fn unconditional_is_deterministic_and_t1_is_single_jump() {
        let den = AnalyticGaussianDenoiser { frame_len: 64, data_std: 1.0 };
        let run = SamplerRun::unconditional(25, 9);
        let a = sample_unconditional(&den, &run).unwrap();
        let b = sample_unconditional(&den, &run).unwrap();
        assert_eq!(a, b);
        let c = sample_unconditional(&den, &SamplerRun::unconditional(25, 10)).unwrap();
        assert_ne!(a, c);

        // T = 1: single deterministic jump z₀ = f·z₁ − g·ε̂
        let run1 = SamplerRun::unconditional(1, 11);
        let out = sample_unconditional(&den, &run1).unwrap();
        let z1 = normal_frame(&mut rng_for(11, "prior"), 64);
        let eps_hat = den.predict_noise(&z1, 1.0).unwrap();
        let coeff = reverse_coefficients(t(1.0), t(0.0)).unwrap();
        for i in 0..64 {
            let expected = coeff.f * z1[i] - coeff.g * eps_hat[i];
            assert!((out[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn unconditional_variance_approaches_data_variance() {
        let den = AnalyticGaussianDenoiser { frame_len: 256, data_std: 1.0 };
        let mut acc = 0.0;
        let mut count = 0usize;
        for seed in 0..40 {
            let run = SamplerRun::unconditional(50, seed);
            let out = sample_unconditional(&den, &run).unwrap();
            acc += out.iter().map(|v| v * v).sum::<f64>();
            count += out.len();
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn guided_degenerate_and_determinism() {
        let den = AnalyticGaussianDenoiser { frame_len: 64, data_std: 1.0 };
        let guide = normal_frame(&mut rng_from_seed(12), 64);
        let run = SamplerRun { steps: 20, tau0: 0.0, tau_p: None, revolutions: 1, seed: 13 };
        assert_eq!(sample_guided(&den, &guide, &run).unwrap(), guide);
        // tau0 rounding to zero behaves identically
        let run = SamplerRun { steps: 20, tau0: 0.01, tau_p: None, revolutions: 1, seed: 13 };
        assert_eq!(sample_guided(&den, &guide, &run).unwrap(), guide);
        let run = SamplerRun { steps: 20, tau0: 0.5, tau_p: None, revolutions: 1, seed: 13 };
        let a = sample_guided(&den, &guide, &run).unwrap();
        let b = sample_guided(&den, &guide, &run).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, guide);
    }

    #[test]
    fn variations_share_latent_and_n1_matches_plain_chain() {
        let den = AnalyticGaussianDenoiser { frame_len: 64, data_std: 1.0 };
        // N = 1 with a bifurcation point reproduces the unbifurcated chain
        let run_plain = SamplerRun::unconditional(30, 21);
        let plain = sample_unconditional(&den, &run_plain).unwrap();
        let run_bif =
            SamplerRun { steps: 30, tau0: 1.0, tau_p: Some(0.4), revolutions: 1, seed: 21 };
        let bif = sample_revolutions(&den, None, &run_bif).unwrap();
        assert_eq!(bif.len(), 1);
        assert_eq!(bif[0], plain);

        // all branches continue from the same shared latent
        let run =
            SamplerRun { steps: 30, tau0: 1.0, tau_p: Some(0.4), revolutions: 4, seed: 22 };
        let z1 = normal_frame(&mut rng_for(22, "prior"), 64);
        let start = LatentState { z: z1, tau: t(1.0) };
        let outcome = sample_variations(&den, &run, start).unwrap();
        assert_eq!(outcome.frames.len(), 4);
        assert_eq!(outcome.shared.tau.value(), 0.4);
        // branches differ from each other but agree in scale
        for i in 1..4 {
            assert_ne!(outcome.frames[0], outcome.frames[i]);
        }
        // rejection when tau_p is not below the start
        let run_bad =
            SamplerRun { steps: 30, tau0: 1.0, tau_p: Some(0.8), revolutions: 2, seed: 22 };
        let start_low = LatentState { z: vec![0.0; 64], tau: t(0.5) };
        assert!(sample_variations(&den, &run_bad, start_low).is_err());
    }

    #[test]
    fn assemble_track_repeats_and_lengths() {
        let frame: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut rng = rng_from_seed(30);
        let track = assemble_track(&[frame.clone()], 100, 2.0, 0.0, &mut rng).unwrap();
        assert_eq!(track.len(), 200);
        assert_eq!(&track[..100], frame.as_slice());
        assert_eq!(&track[100..], frame.as_slice());
        for dur in [0.37, 1.0, 2.5] {
            let track = assemble_track(&[frame.clone()], 100, dur, 0.1, &mut rng).unwrap();
            assert_eq!(track.len(), (100.0 * dur).round() as usize);
        }
        assert!(assemble_track(&[], 100, 1.0, 0.0, &mut rng).is_err());
        assert!(assemble_track(&[frame.clone()], 100, 1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn crossfade_keeps_stationary_energy() {
        let mut rng = rng_from_seed(31);
        let frames: Vec<Vec<f64>> = (0..4).map(|_| normal_frame(&mut rng, 4000)).collect();
        let fs = 8000;
        let overlap = 0.05;
        let track = assemble_track(&frames, fs, 4.0, overlap, &mut rng).unwrap();
        // windowed rms across the track stays within ±1 dB of the global rms
        let win = 400;
        let global_rms =
            (track.iter().map(|v| v * v).sum::<f64>() / track.len() as f64).sqrt();
        let mut start = 0;
        while start + win <= track.len() {
            let rms = (track[start..start + win].iter().map(|v| v * v).sum::<f64>()
                / win as f64)
                .sqrt();
            let db = 20.0 * (rms / global_rms).log10();
            assert!(db.abs() < 1.0, "window at {start}: {db} dB");
            start += win / 2;
        }
    }
}
