//! Deviation analysis between noise frames: sliding-RMS temporal envelopes,
//! Bark-smoothed spectral envelopes, pairwise deviation profiles, and
//! log-spectrogram export (text grid and grayscale PNG).

use crate::error::{Error, Result};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;
use std::path::Path;

/// dB floor substituted for −∞ on silent input.
pub const DB_FLOOR: f64 = -120.0;

/// Zwicker critical-band edges in Hz (24 bands).
pub const BARK_EDGES: [f64; 25] = [
    20.0, 100.0, 200.0, 300.0, 400.0, 510.0, 630.0, 770.0, 920.0, 1080.0, 1270.0, 1480.0, 1720.0,
    2000.0, 2320.0, 2700.0, 3150.0, 3700.0, 4400.0, 5300.0, 6400.0, 7700.0, 9500.0, 12000.0,
    15500.0,
];

/// Sliding-window RMS envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeSeries {
    pub values: Vec<f64>,
    pub hop_s: f64,
    pub window_s: f64,
}

/// Per-band magnitudes (dB) on the Bark scale.
#[derive(Debug, Clone)]
pub struct BarkEnvelope {
    pub band_db: Vec<f64>,
    pub band_edges_hz: Vec<f64>,
}

/// RMS envelope with a 25 ms window by default; `hop_s` of `None` selects
/// half the window. Windows are left-aligned and truncated at the end of
/// the frame.
pub fn temporal_envelope(
    x: &[f64],
    fs: f64,
    window_s: f64,
    hop_s: Option<f64>,
) -> Result<EnvelopeSeries> {
    let window = (window_s * fs).round() as usize;
    if window < 1 {
        return Err(Error::domain("analysis", "envelope window shorter than one sample"));
    }
    if window > x.len() {
        return Err(Error::domain(
            "analysis",
            format!("envelope window {window} longer than frame {}", x.len()),
        ));
    }
    let hop_s = hop_s.unwrap_or(window_s / 2.0);
    let hop = ((hop_s * fs).round() as usize).max(1);
    let mut values = Vec::new();
    let mut start = 0usize;
    while start < x.len() {
        let end = (start + window).min(x.len());
        let seg = &x[start..end];
        let rms = (seg.iter().map(|v| v * v).sum::<f64>() / seg.len() as f64).sqrt();
        values.push(rms);
        start += hop;
    }
    Ok(EnvelopeSeries { values, hop_s: hop as f64 / fs, window_s: window as f64 / fs })
}

/// Bark-smoothed spectral envelope: Hann-windowed sub-frames are averaged
/// into a power spectrum, which is pooled into critical bands and reported
/// in dB.
pub fn bark_envelope(x: &[f64], fs: f64) -> Result<BarkEnvelope> {
    // largest power of two that fits the frame, capped at 1024
    let mut nfft = x.len().next_power_of_two();
    if nfft > x.len() {
        nfft /= 2;
    }
    let nfft = nfft.min(1024);
    if nfft < 8 {
        return Err(Error::domain(
            "analysis",
            format!("frame of {} samples too short for spectral analysis", x.len()),
        ));
    }
    let edges: Vec<f64> =
        BARK_EDGES.iter().copied().filter(|&e| e <= fs / 2.0).collect();
    if edges.len() < 3 {
        return Err(Error::domain(
            "analysis",
            format!("sample rate {fs} Hz too low for at least 2 Bark bands"),
        ));
    }
    let psd = welch_power(x, nfft);
    let bin_hz = fs / nfft as f64;
    let mut band_db = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let lo = (w[0] / bin_hz).ceil() as usize;
        let hi = ((w[1] / bin_hz).floor() as usize).min(nfft / 2);
        let mut acc = 0.0;
        let mut n = 0usize;
        for b in lo..=hi.max(lo) {
            if b < psd.len() {
                acc += psd[b];
                n += 1;
            }
        }
        let mean = if n > 0 { acc / n as f64 } else { 0.0 };
        band_db.push(if mean > 0.0 { 10.0 * mean.log10() } else { DB_FLOOR });
    }
    Ok(BarkEnvelope { band_db, band_edges_hz: edges })
}

fn welch_power(x: &[f64], nfft: usize) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nfft);
    let hann: Vec<f64> =
        (0..nfft).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nfft as f64).cos()).collect();
    let win_power: f64 = hann.iter().map(|w| w * w).sum::<f64>() / nfft as f64;
    let hop = nfft / 2;
    let mut acc = vec![0.0; nfft / 2 + 1];
    let mut count = 0usize;
    let mut start = 0usize;
    while start + nfft <= x.len() {
        let mut buf: Vec<Complex<f64>> =
            (0..nfft).map(|i| Complex::new(x[start + i] * hann[i], 0.0)).collect();
        fft.process(&mut buf);
        for (i, a) in acc.iter_mut().enumerate() {
            *a += buf[i].norm_sqr() / (nfft as f64 * win_power);
        }
        count += 1;
        start += hop;
    }
    if count > 0 {
        for a in &mut acc {
            *a /= count as f64;
        }
    }
    acc
}

/// How a deviation profile aggregates an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationMode {
    /// Std over items of (item − reference) per position; the first element
    /// of the slice is the reference.
    FromReference,
    /// Std over all unordered pairs of (item_i − item_j) per position.
    AllPairs,
}

/// Per-position standard deviation of differences across an ensemble of
/// equally shaped series (envelope values or Bark band values).
///
/// `FromReference` treats `items[0]` as the reference and takes the std of
/// (item − reference) over the remaining items. `AllPairs` takes the std
/// over all unordered pair differences, dividing by (pairs − 1); with a
/// single pair the profile is the absolute difference.
pub fn pairwise_deviation_std(items: &[Vec<f64>], mode: DeviationMode) -> Result<Vec<f64>> {
    if items.len() < 2 {
        return Err(Error::domain("analysis", "deviation profile needs at least 2 items"));
    }
    let len = items[0].len();
    if items.iter().any(|it| it.len() != len) {
        return Err(Error::domain("analysis", "deviation profile items differ in shape"));
    }
    let diffs: Vec<Vec<f64>> = match mode {
        DeviationMode::FromReference => {
            let reference = &items[0];
            items[1..]
                .iter()
                .map(|it| it.iter().zip(reference).map(|(a, r)| a - r).collect())
                .collect()
        }
        DeviationMode::AllPairs => {
            let mut d = Vec::new();
            for i in 0..items.len() {
                for j in (i + 1)..items.len() {
                    d.push(
                        items[i].iter().zip(&items[j]).map(|(a, b)| a - b).collect::<Vec<f64>>(),
                    );
                }
            }
            d
        }
    };
    let m = diffs.len();
    let mut profile = vec![0.0; len];
    if m == 1 {
        for (p, v) in profile.iter_mut().zip(&diffs[0]) {
            *p = v.abs();
        }
        return Ok(profile);
    }
    for pos in 0..len {
        let mean = diffs.iter().map(|d| d[pos]).sum::<f64>() / m as f64;
        let var =
            diffs.iter().map(|d| (d[pos] - mean) * (d[pos] - mean)).sum::<f64>() / (m - 1) as f64;
        profile[pos] = var.sqrt();
    }
    Ok(profile)
}

/// STFT magnitude in dB: rows are frequency bins (DC at row 0), columns are
/// time frames.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub db: Vec<Vec<f64>>,
    pub bin_hz: f64,
    pub hop_s: f64,
}

pub fn log_spectrogram(x: &[f64], fs: f64, fft_size: usize, hop: usize) -> Result<Spectrogram> {
    if !fft_size.is_power_of_two() || fft_size < 8 {
        return Err(Error::domain("analysis", format!("fft size {fft_size} not a power of two")));
    }
    if hop == 0 || hop > fft_size {
        return Err(Error::domain("analysis", format!("hop {hop} must be in 1..={fft_size}")));
    }
    if x.len() < fft_size {
        return Err(Error::domain("analysis", "signal shorter than one fft frame"));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(fft_size);
    let hann: Vec<f64> = (0..fft_size)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / fft_size as f64).cos())
        .collect();
    let bins = fft_size / 2 + 1;
    let mut frames: Vec<Vec<f64>> = Vec::new();
    let mut start = 0usize;
    while start + fft_size <= x.len() {
        let mut buf: Vec<Complex<f64>> =
            (0..fft_size).map(|i| Complex::new(x[start + i] * hann[i], 0.0)).collect();
        fft.process(&mut buf);
        frames.push(
            (0..bins)
                .map(|b| {
                    let mag = buf[b].norm();
                    if mag > 0.0 {
                        (20.0 * mag.log10()).max(DB_FLOOR)
                    } else {
                        DB_FLOOR
                    }
                })
                .collect(),
        );
        start += hop;
    }
    // transpose to rows = bins
    let cols = frames.len();
    let mut db = vec![vec![0.0; cols]; bins];
    for (t, frame) in frames.iter().enumerate() {
        for (b, &v) in frame.iter().enumerate() {
            db[b][t] = v;
        }
    }
    Ok(Spectrogram { db, bin_hz: fs / fft_size as f64, hop_s: hop as f64 / fs })
}

impl Spectrogram {
    /// Tab-separated numeric grid, one row per frequency bin.
    pub fn write_grid(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in &self.db {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
            out.push_str(&line.join("\t"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// 8-bit grayscale PNG, low frequencies at the bottom, dB mapped over
    /// its observed range.
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let height = self.db.len();
        let width = self.db.first().map_or(0, |r| r.len());
        if width == 0 {
            return Err(Error::domain("analysis", "empty spectrogram"));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.db {
            for &v in row {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let span = (hi - lo).max(1e-9);
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            let row = &self.db[height - 1 - y];
            for &v in row {
                pixels.push((255.0 * (v - lo) / span).round() as u8);
            }
        }
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = png::Encoder::new(std::io::BufWriter::new(file), width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer =
            enc.write_header().map_err(|e| Error::Config(format!("png: {e}")))?;
        writer
            .write_image_data(&pixels)
            .map_err(|e| Error::Config(format!("png: {e}")))
    }
}

/// Write an envelope or deviation profile as a two-column text grid
/// (position, value).
pub fn write_series(path: impl AsRef<Path>, step: f64, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{:.6}\t{v:.9}\n", i as f64 * step));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
