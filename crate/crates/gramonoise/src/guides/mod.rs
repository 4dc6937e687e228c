//! Classical-DSP synthesis of guide signals and standalone antiquing noises:
//! hiss, clicks/crackle, low-frequency thumps, mains hum, and turntable
//! rumble. A [`GuideSpec`] describes one disk revolution's worth of noise
//! components; [`compose_guide`] renders and sums them into the draft frame
//! that guided diffusion sampling then refines.

pub mod biquad;

use crate::error::{Error, Result};
use crate::rng::{normal_frame, rng_for, standard_normal, ChaCha8Rng};
use biquad::Biquad;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Revolution period in seconds at 78 rpm.
pub const REVOLUTION_SECONDS: f64 = 60.0 / 78.0;

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// One parametric-EQ band.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqBand {
    pub center_hz: f64,
    pub gain_db: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shelf {
    pub corner_hz: f64,
    pub gain_db: f64,
}

/// Slow sinusoidal gain modulation, for hiss that varies within a revolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainModulation {
    pub rate_hz: f64,
    pub depth_db: f64,
}

/// Broadband background noise shaped by a parametric equalizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HissSpec {
    pub eq_bands: Vec<EqBand>,
    pub low_shelf: Option<Shelf>,
    pub high_shelf: Option<Shelf>,
    pub level_db: f64,
    pub time_variation: Option<GainModulation>,
}

impl Default for HissSpec {
    fn default() -> Self {
        HissSpec {
            eq_bands: Vec::new(),
            low_shelf: None,
            high_shelf: None,
            level_db: 0.0,
            time_variation: None,
        }
    }
}

/// One low-frequency pulse: a short noisy attack followed by a damped
/// oscillation tail whose frequency glides from `f_max_hz` to `f_min_hz`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThumpParams {
    /// Tail amplitude (linear).
    pub tail_amplitude: f64,
    /// Envelope decay time constant τ_e (seconds).
    pub envelope_decay_s: f64,
    /// Oscillation frequency at the onset (Hz).
    pub f_max_hz: f64,
    /// Asymptotic oscillation frequency (Hz).
    pub f_min_hz: f64,
    /// Frequency-decay time constant τ_f (seconds).
    pub freq_decay_s: f64,
    /// Position of the pulse within the frame (seconds).
    pub onset_s: f64,
    /// Attack length (seconds); the discontinuity lasts under 2 ms.
    #[serde(default = "default_attack_duration")]
    pub attack_duration_s: f64,
    /// Attack noise power (linear); 0 disables the attack.
    #[serde(default)]
    pub attack_variance: f64,
}

fn default_attack_duration() -> f64 {
    0.002
}

impl ThumpParams {
    fn validate(&self, length_s: f64) -> Result<()> {
        if !(self.f_max_hz >= self.f_min_hz && self.f_min_hz > 0.0) {
            return Err(Error::domain(
                "guides",
                format!("thump needs f_max >= f_min > 0, got {} / {}", self.f_max_hz, self.f_min_hz),
            ));
        }
        if self.envelope_decay_s <= 0.0 || self.freq_decay_s <= 0.0 {
            return Err(Error::domain("guides", "thump time constants must be positive"));
        }
        if self.onset_s < 0.0 || self.onset_s >= length_s {
            return Err(Error::domain(
                "guides",
                format!("thump onset {} s outside frame of {} s", self.onset_s, length_s),
            ));
        }
        if self.attack_duration_s < 0.0 || self.attack_variance < 0.0 {
            return Err(Error::domain("guides", "thump attack params must be non-negative"));
        }
        Ok(())
    }
}

/// Click amplitude law; durations vary greatly within one recording.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeDistribution {
    /// exp(N(ln_scale, shape²)) — heavy-tailed, the default.
    LogNormal { ln_scale: f64, shape: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl AmplitudeDistribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            AmplitudeDistribution::LogNormal { ln_scale, shape } => {
                (ln_scale + shape * standard_normal(rng)).exp()
            }
            AmplitudeDistribution::Uniform { lo, hi } => rng.random_range(lo..=hi),
            AmplitudeDistribution::Constant { value } => value,
        }
    }
}

/// Kernel rendered for each click event.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickShape {
    /// Bipolar impulse convolved with a short decaying window.
    #[default]
    BipolarDecay,
    /// Single-sided impulse with a decaying window.
    UnipolarDecay,
}

/// Impulsive disturbances; dense rates are perceived as crackle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClickSpec {
    /// Event rate (events/second); real 78s show on the order of 2,000.
    pub rate_hz: f64,
    /// Duration range in seconds (reference: 20 µs to 4 ms).
    #[serde(default = "default_click_durations")]
    pub duration_range_s: (f64, f64),
    #[serde(default = "default_click_amplitude")]
    pub amplitude: AmplitudeDistribution,
    #[serde(default)]
    pub shape: ClickShape,
}

fn default_click_durations() -> (f64, f64) {
    (20e-6, 4e-3)
}

fn default_click_amplitude() -> AmplitudeDistribution {
    AmplitudeDistribution::LogNormal { ln_scale: (0.01f64).ln(), shape: 1.0 }
}

impl ClickSpec {
    fn validate(&self, length_s: f64) -> Result<()> {
        let (lo, hi) = self.duration_range_s;
        if self.rate_hz < 0.0 {
            return Err(Error::domain("guides", "click rate must be >= 0"));
        }
        if !(0.0 <= lo && lo <= hi && hi <= length_s) {
            return Err(Error::domain(
                "guides",
                format!("click duration range ({lo}, {hi}) s invalid for frame of {length_s} s"),
            ));
        }
        Ok(())
    }
}

/// Mains interference at 50 or 60 Hz plus harmonics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumSpec {
    pub fundamental_hz: f64,
    /// Linear gain of harmonic k+1 (index 0 is the fundamental).
    pub harmonic_amplitudes: Vec<f64>,
    #[serde(default)]
    pub phase_seed: u64,
}

/// Low-frequency turntable noise: low-pass filtered white noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RumbleSpec {
    pub cutoff_hz: f64,
    pub level_db: f64,
}

/// Declarative description of one pre-synthesized guide frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuideSpec {
    #[serde(default)]
    pub hiss: Option<HissSpec>,
    #[serde(default)]
    pub thumps: Vec<ThumpParams>,
    #[serde(default)]
    pub clicks: Option<ClickSpec>,
    #[serde(default)]
    pub hum: Option<HumSpec>,
    #[serde(default)]
    pub rumble: Option<RumbleSpec>,
    pub fs: u32,
    /// Frame length in seconds; defaults to one revolution at 78 rpm.
    #[serde(default = "default_length")]
    pub length_s: f64,
}

fn default_length() -> f64 {
    REVOLUTION_SECONDS
}

impl GuideSpec {
    /// Filtered noise plus synthetic thumps — the guide construction used
    /// for the guided-synthesis presets.
    pub fn default_preset(fs: u32) -> GuideSpec {
        GuideSpec {
            hiss: Some(HissSpec {
                eq_bands: vec![
                    EqBand { center_hz: 800.0, gain_db: 4.0, q: 0.8 },
                    EqBand { center_hz: 2500.0, gain_db: 6.0, q: 1.0 },
                ],
                low_shelf: Some(Shelf { corner_hz: 150.0, gain_db: -8.0 }),
                high_shelf: Some(Shelf { corner_hz: 0.35 * fs as f64, gain_db: -10.0 }),
                level_db: -26.0,
                time_variation: Some(GainModulation { rate_hz: 1.3, depth_db: 2.0 }),
            }),
            thumps: vec![
                ThumpParams {
                    tail_amplitude: 0.25,
                    envelope_decay_s: 0.06,
                    f_max_hz: 160.0,
                    f_min_hz: 60.0,
                    freq_decay_s: 0.025,
                    onset_s: 0.17,
                    attack_duration_s: 0.002,
                    attack_variance: 0.002,
                },
                ThumpParams {
                    tail_amplitude: 0.15,
                    envelope_decay_s: 0.05,
                    f_max_hz: 120.0,
                    f_min_hz: 50.0,
                    freq_decay_s: 0.02,
                    onset_s: 0.55,
                    attack_duration_s: 0.0015,
                    attack_variance: 0.001,
                },
            ],
            clicks: None,
            hum: None,
            rumble: None,
            fs,
            length_s: REVOLUTION_SECONDS,
        }
    }

    pub fn frame_len(&self) -> usize {
        (self.fs as f64 * self.length_s).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.fs == 0 {
            return Err(Error::domain("guides", "sample rate must be positive"));
        }
        if self.length_s <= 0.0 {
            return Err(Error::domain("guides", "frame length must be positive"));
        }
        if self.hiss.is_none()
            && self.thumps.is_empty()
            && self.clicks.is_none()
            && self.hum.is_none()
            && self.rumble.is_none()
        {
            return Err(Error::domain("guides", "guide spec has no components"));
        }
        for t in &self.thumps {
            t.validate(self.length_s)?;
        }
        if let Some(c) = &self.clicks {
            c.validate(self.length_s)?;
        }
        Ok(())
    }
}

/// Oscillation frequency of the thump tail `n` samples after onset:
/// `f_n = (f_max − f_min)·exp(−n/(fs·τ_f)) + f_min`.
pub fn thump_frequency(p: &ThumpParams, fs: f64, n: usize) -> f64 {
    (p.f_max_hz - p.f_min_hz) * (-(n as f64) / (fs * p.freq_decay_s)).exp() + p.f_min_hz
}

/// Tail sample `n` counted from the onset:
/// `A·exp(−n/(fs·τ_e))·sin(2π n f_n/fs − π/4)`.
pub fn thump_tail_sample(p: &ThumpParams, fs: f64, n: usize) -> f64 {
    let nf = n as f64;
    let envelope = p.tail_amplitude * (-nf / (fs * p.envelope_decay_s)).exp();
    envelope * (2.0 * PI * nf * thump_frequency(p, fs, n) / fs - PI / 4.0).sin()
}

/// Render one thump into a fresh frame of `length` samples.
pub fn synth_thump(p: &ThumpParams, fs: f64, length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    p.validate(length as f64 / fs)?;
    let onset = (p.onset_s * fs).round() as usize;
    if onset >= length {
        return Err(Error::domain("guides", "thump onset beyond frame"));
    }
    let mut out = vec![0.0; length];
    for n in 0..(length - onset) {
        out[onset + n] = thump_tail_sample(p, fs, n);
    }
    // Attack: rectangular burst of white noise crossfaded out over its last
    // millisecond so the discontinuity hands over to the tail smoothly.
    let attack_len = (p.attack_duration_s * fs).round() as usize;
    if attack_len > 0 && p.attack_variance > 0.0 {
        let std = p.attack_variance.sqrt();
        let fade_len = ((0.001 * fs).round() as usize).min(attack_len);
        for i in 0..attack_len.min(length - onset) {
            let mut w = 1.0;
            if i >= attack_len - fade_len {
                w = (attack_len - i) as f64 / fade_len as f64;
            }
            out[onset + i] += std * standard_normal(rng) * w;
        }
    }
    Ok(out)
}

/// White Gaussian noise through the parametric-EQ cascade at `level_db`,
/// optionally with slow gain modulation across the frame.
pub fn synth_hiss(spec: &HissSpec, fs: f64, length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut sections = Vec::new();
    for band in &spec.eq_bands {
        sections.push(Biquad::peaking(fs, band.center_hz, band.gain_db, band.q)?);
    }
    if let Some(s) = &spec.low_shelf {
        sections.push(Biquad::low_shelf(fs, s.corner_hz, s.gain_db)?);
    }
    if let Some(s) = &spec.high_shelf {
        sections.push(Biquad::high_shelf(fs, s.corner_hz, s.gain_db)?);
    }
    let mut x = normal_frame(rng, length);
    biquad::process_cascade(&sections, &mut x);
    let level = db_to_lin(spec.level_db);
    match &spec.time_variation {
        None => {
            for v in &mut x {
                *v *= level;
            }
        }
        Some(m) => {
            let phase = rng.random_range(0.0..(2.0 * PI));
            for (n, v) in x.iter_mut().enumerate() {
                let lfo = (2.0 * PI * m.rate_hz * n as f64 / fs + phase).sin();
                *v *= level * db_to_lin(m.depth_db * lfo);
            }
        }
    }
    Ok(x)
}

fn click_kernel(shape: ClickShape, dur_samples: usize) -> Vec<f64> {
    let n = dur_samples.max(1);
    if n == 1 {
        return vec![1.0];
    }
    // Base impulse convolved with an exponentially decaying window,
    // normalized to unit peak.
    let base: &[f64] = match shape {
        ClickShape::BipolarDecay => &[1.0, -0.6],
        ClickShape::UnipolarDecay => &[1.0],
    };
    let decay = 4.0 / (n as f64 - 1.0).max(1.0);
    let window: Vec<f64> = (0..n).map(|i| (-decay * i as f64).exp()).collect();
    let mut kernel = vec![0.0; n];
    for (i, k) in kernel.iter_mut().enumerate() {
        for (j, &b) in base.iter().enumerate() {
            if i >= j {
                *k += b * window[i - j];
            }
        }
    }
    let peak = kernel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in &mut kernel {
        *k /= peak;
    }
    kernel
}

/// Poisson-process click events rendered additively.
pub fn synth_clicks(spec: &ClickSpec, fs: f64, length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    spec.validate(length as f64 / fs)?;
    let mut out = vec![0.0; length];
    if spec.rate_hz == 0.0 {
        return Ok(out);
    }
    let (dlo, dhi) = spec.duration_range_s;
    let mut t = 0.0f64;
    loop {
        // exponential inter-arrival gap
        let u: f64 = rng.random::<f64>();
        t += -(1.0 - u).ln() / spec.rate_hz;
        if t * fs >= length as f64 {
            break;
        }
        let onset = (t * fs) as usize;
        let dur_s = if dhi > dlo { rng.random_range(dlo..=dhi) } else { dlo };
        let dur = ((dur_s * fs).round() as usize).clamp(1, length - onset);
        let amp = spec.amplitude.sample(rng);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for (i, k) in click_kernel(spec.shape, dur).iter().enumerate() {
            out[onset + i] += sign * amp * k;
        }
    }
    Ok(out)
}

/// Sum of harmonics of the mains frequency; phases are drawn once from the
/// spec's phase seed so the rendering is reproducible.
pub fn synth_hum(spec: &HumSpec, fs: f64, length: usize) -> Result<Vec<f64>> {
    if spec.fundamental_hz <= 0.0 {
        return Err(Error::domain("guides", "hum fundamental must be positive"));
    }
    let count = spec.harmonic_amplitudes.len();
    if count > 0 && spec.fundamental_hz * count as f64 >= fs / 2.0 {
        return Err(Error::domain(
            "guides",
            format!(
                "hum harmonic {} at {} Hz aliases at fs {} Hz",
                count,
                spec.fundamental_hz * count as f64,
                fs
            ),
        ));
    }
    let mut phase_rng = rng_for(spec.phase_seed, "hum-phase");
    let phases: Vec<f64> =
        (0..count).map(|_| phase_rng.random_range(0.0..(2.0 * PI))).collect();
    let mut out = vec![0.0; length];
    for (k, (&a, &phi)) in spec.harmonic_amplitudes.iter().zip(&phases).enumerate() {
        if a == 0.0 {
            continue;
        }
        let w = 2.0 * PI * spec.fundamental_hz * (k + 1) as f64 / fs;
        for (n, v) in out.iter_mut().enumerate() {
            *v += a * (w * n as f64 + phi).sin();
        }
    }
    Ok(out)
}

/// White noise through a 4th-order Butterworth low-pass, scaled to `level_db`.
pub fn synth_rumble(spec: &RumbleSpec, fs: f64, length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    // Butterworth Q values for a 4th-order cascade of two biquads.
    let sections = [
        Biquad::low_pass(fs, spec.cutoff_hz, 0.541_196_100_146_197)?,
        Biquad::low_pass(fs, spec.cutoff_hz, 1.306_562_964_876_377)?,
    ];
    let mut x = normal_frame(rng, length);
    biquad::process_cascade(&sections, &mut x);
    let level = db_to_lin(spec.level_db);
    for v in &mut x {
        *v *= level;
    }
    Ok(x)
}

/// Render every enabled component and sum them into the guide frame.
///
/// Each component draws from an independent sub-stream of `seed`, so the
/// composite equals the sample-wise sum of the standalone renders and does
/// not depend on rendering order.
pub fn compose_guide(spec: &GuideSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let fs = spec.fs as f64;
    let length = spec.frame_len();
    let mut out = vec![0.0; length];
    let mut failures: Vec<String> = Vec::new();
    let add = |out: &mut Vec<f64>, failures: &mut Vec<String>, name: String, rendered: Result<Vec<f64>>| {
        match rendered {
            Ok(frame) => {
                for (o, v) in out.iter_mut().zip(frame) {
                    *o += v;
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    };
    if let Some(h) = &spec.hiss {
        let r = synth_hiss(h, fs, length, &mut rng_for(seed, "hiss"));
        add(&mut out, &mut failures, "hiss".into(), r);
    }
    for (i, t) in spec.thumps.iter().enumerate() {
        let r = synth_thump(t, fs, length, &mut rng_for(seed, &format!("thump-{i}")));
        add(&mut out, &mut failures, format!("thump {i}"), r);
    }
    if let Some(c) = &spec.clicks {
        let r = synth_clicks(c, fs, length, &mut rng_for(seed, "clicks"));
        add(&mut out, &mut failures, "clicks".into(), r);
    }
    if let Some(h) = &spec.hum {
        let r = synth_hum(h, fs, length);
        add(&mut out, &mut failures, "hum".into(), r);
    }
    if let Some(r) = &spec.rumble {
        let rendered = synth_rumble(r, fs, length, &mut rng_for(seed, "rumble"));
        add(&mut out, &mut failures, "rumble".into(), rendered);
    }
    if !failures.is_empty() {
        return Err(Error::domain("guides", failures.join("; ")));
    }
    Ok(out)
}
