//! Corpus ingestion: WAV read/write, revolution-length chunk extraction,
//! and robust median-RMS normalization.
//!
//! Training frames are normalized so that a robust estimate of their scale
//! lands at a fixed gain G. Two estimator modes are provided:
//!
//! - `consistent` (default): scale = G_lin / (b_χ · sqrt(median(x²))).
//!   For Gaussian data, b_χ·sqrt(median(x²)) is the classical consistent
//!   robust estimate of the standard deviation, so unit-variance input maps
//!   to std G_lin.
//! - `literal`: scale = G_lin / sqrt(b_χ² + median(x²)), which keeps the
//!   additive form some references print. It is not scale-equivariant and
//!   is retained behind this switch for comparison.

use crate::error::{Error, Result};
use crate::rng::ChaCha8Rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

/// Mono audio loaded from one source file.
#[derive(Debug, Clone)]
pub struct AudioAsset {
    pub samples: Vec<f64>,
    pub fs: u32,
    pub source: String,
}

/// Gain target and estimator settings for frame normalization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizationSettings {
    /// Target gain in dB.
    pub gain_db: f64,
    /// Median-to-std factor for Gaussian data, 1/Φ⁻¹(0.75).
    pub b_chi: f64,
    pub mode: NormalizationMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    Consistent,
    Literal,
}

impl Default for NormalizationSettings {
    fn default() -> Self {
        NormalizationSettings { gain_db: -10.0, b_chi: 1.4826, mode: NormalizationMode::Consistent }
    }
}

/// Frame length of one disk revolution: round(fs·60/rpm) samples.
pub fn frame_length(fs: u32, rpm: f64) -> usize {
    assert!(fs > 0 && rpm > 0.0, "frame_length needs positive fs and rpm");
    (fs as f64 * 60.0 / rpm).round() as usize
}

/// Read a WAV file: 16-bit PCM or 32-bit float, any channel count
/// (channels are averaged down to mono), sample rate preserved.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioAsset> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::MalformedWav { path: path.into(), detail: "zero channels".into() });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedWav {
                path: path.into(),
                detail: format!("{bits}-bit {fmt:?} (only 16-bit PCM and 32-bit float)"),
            })
        }
    };
    let frames = interleaved.len() / channels;
    let mut samples = Vec::with_capacity(frames);
    for i in 0..frames {
        let mut acc = 0.0;
        for c in 0..channels {
            acc += interleaved[i * channels + c];
        }
        samples.push(acc / channels as f64);
    }
    Ok(AudioAsset { samples, fs: spec.sample_rate, source: path.display().to_string() })
}

/// Write a mono 32-bit float WAV. Floats survive a read/write round trip
/// bit-exactly.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], fs: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: fs,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &v in samples {
        writer.write_sample(v as f32).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => {
            let truncated = io.kind() == ErrorKind::UnexpectedEof
                || io.to_string().contains("Failed to read enough bytes");
            if truncated {
                Error::MalformedWav { path: path.into(), detail: "truncated file".into() }
            } else {
                Error::io(path, io)
            }
        }
        hound::Error::FormatError(msg) => {
            Error::MalformedWav { path: path.into(), detail: msg.to_string() }
        }
        hound::Error::Unsupported => {
            Error::UnsupportedWav { path: path.into(), detail: "unsupported encoding".into() }
        }
        other => Error::MalformedWav { path: path.into(), detail: other.to_string() },
    }
}

fn median_of_squares(x: &[f64]) -> f64 {
    let mut sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sq.len();
    if n % 2 == 1 {
        sq[n / 2]
    } else {
        (sq[n / 2 - 1] + sq[n / 2]) / 2.0
    }
}

/// Scale a frame so its robust level estimate equals the target gain.
pub fn normalize_median_rms(x: &[f64], settings: &NormalizationSettings) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::domain("dataset", "cannot normalize an empty frame"));
    }
    let g_lin = 10f64.powf(settings.gain_db / 20.0);
    let med = median_of_squares(x);
    let scale = match settings.mode {
        NormalizationMode::Consistent => {
            if med <= 0.0 {
                return Err(Error::domain(
                    "dataset",
                    "degenerate frame: median of squares is zero",
                ));
            }
            g_lin / (settings.b_chi * med.sqrt())
        }
        NormalizationMode::Literal => g_lin / (settings.b_chi * settings.b_chi + med).sqrt(),
    };
    Ok(x.iter().map(|v| v * scale).collect())
}

/// The level estimator used by the normalizer: b_χ·sqrt(median(x²)).
pub fn median_rms(x: &[f64], b_chi: f64) -> f64 {
    b_chi * median_of_squares(x).sqrt()
}

/// Uniformly positioned contiguous chunk, no wraparound.
pub fn random_chunk(asset: &AudioAsset, length: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if asset.samples.len() < length {
        return Err(Error::domain(
            "dataset",
            format!(
                "asset {} has {} samples, shorter than chunk length {}",
                asset.source,
                asset.samples.len(),
                length
            ),
        ));
    }
    let span = asset.samples.len() - length;
    let start = if span == 0 { 0 } else { rng.random_range(0..=span) };
    Ok(asset.samples[start..start + length].to_vec())
}

/// Infinite stream of normalized training batches. Assets are picked
/// uniformly per item; silent chunks are skipped and counted.
pub struct BatchIterator<'a> {
    corpus: &'a [AudioAsset],
    length: usize,
    batch_size: usize,
    settings: NormalizationSettings,
    rng: ChaCha8Rng,
    pub skipped_silent: u64,
}

impl<'a> BatchIterator<'a> {
    pub fn new(
        corpus: &'a [AudioAsset],
        length: usize,
        batch_size: usize,
        settings: NormalizationSettings,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::domain("dataset", "empty corpus"));
        }
        for a in corpus {
            if a.samples.len() < length {
                return Err(Error::domain(
                    "dataset",
                    format!("asset {} shorter than frame length {}", a.source, length),
                ));
            }
        }
        if batch_size == 0 {
            return Err(Error::domain("dataset", "batch size must be >= 1"));
        }
        Ok(BatchIterator { corpus, length, batch_size, settings, rng, skipped_silent: 0 })
    }

    /// Mutable access for checkpoint save/restore.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn next_batch(&mut self) -> Vec<Vec<f64>> {
        let mut batch = Vec::with_capacity(self.batch_size);
        while batch.len() < self.batch_size {
            let idx = self.rng.random_range(0..self.corpus.len());
            let chunk = random_chunk(&self.corpus[idx], self.length, &mut self.rng)
                .expect("corpus validated at construction");
            match normalize_median_rms(&chunk, &self.settings) {
                Ok(frame) => batch.push(frame),
                Err(_) => self.skipped_silent += 1,
            }
        }
        batch
    }
}

/// Load a corpus from a manifest file (one WAV path per line, `#` comments)
/// or from a directory of WAV files. Every asset must match `expect_fs`
/// when given; no resampling is performed.
pub fn load_corpus(path: impl AsRef<Path>, expect_fs: Option<u32>) -> Result<Vec<AudioAsset>> {
    let path = path.as_ref();
    let mut files: Vec<PathBuf> = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(path, e))?;
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let p = e.path();
            if p.extension().and_then(|s| s.to_str()) == Some("wav") {
                files.push(p);
            }
        }
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p = PathBuf::from(line);
            files.push(if p.is_absolute() { p } else { base.join(p) });
        }
    }
    if files.is_empty() {
        return Err(Error::domain("dataset", format!("no wav assets found at {}", path.display())));
    }
    let mut corpus = Vec::with_capacity(files.len());
    for f in files {
        let asset = read_wav(&f)?;
        if let Some(fs) = expect_fs {
            if asset.fs != fs {
                return Err(Error::domain(
                    "dataset",
                    format!(
                        "asset {} has fs {} Hz, expected {} Hz (no resampling)",
                        asset.source, asset.fs, fs
                    ),
                ));
            }
        }
        corpus.push(asset);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_frame, rng_from_seed};

    #[test]
    fn frame_length_values() {
        assert_eq!(frame_length(44100, 78.0), 33923);
        assert_eq!(frame_length(8000, 78.0), 6154);
        assert_eq!(frame_length(1000, 60.0), 1000);
        for fs in [1000u32, 8000, 22050, 44100, 48000, 96000] {
            let secs = frame_length(fs, 78.0) as f64 / fs as f64;
            assert!((0.769..=0.770).contains(&secs), "fs={fs}: {secs}");
        }
    }

    #[test]
    fn wav_float_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples: Vec<f64> =
            normal_frame(&mut rng_from_seed(1), 777).iter().map(|v| (*v as f32) as f64).collect();
        write_wav(&path, &samples, 8000).unwrap();
        let asset = read_wav(&path).unwrap();
        assert_eq!(asset.fs, 8000);
        assert_eq!(asset.samples, samples);
    }

    #[test]
    fn wav_16bit_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sq.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for i in 0..64 {
            w.write_sample(if i % 2 == 0 { i16::MAX } else { i16::MIN }).unwrap();
        }
        w.finalize().unwrap();
        let asset = read_wav(&path).unwrap();
        let hi = 32767.0 / 32768.0;
        for (i, &v) in asset.samples.iter().enumerate() {
            if i % 2 == 0 {
                assert!((v - hi).abs() < 1e-12);
            } else {
                assert!((v + 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wav_stereo_downmix() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..16 {
            w.write_sample(0.5f32).unwrap();
            w.write_sample(-0.25f32).unwrap();
        }
        w.finalize().unwrap();
        let asset = read_wav(&path).unwrap();
        assert!(asset.samples.iter().all(|&v| (v - 0.125).abs() < 1e-9));
    }

    #[test]
    fn truncated_wav_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let good = dir.path().join("g.wav");
        write_wav(&good, &vec![0.25; 256], 8000).unwrap();
        let bytes = std::fs::read(&good).unwrap();
        std::fs::write(&path, &bytes[..20]).unwrap();
        match read_wav(&path) {
            Err(Error::MalformedWav { .. }) => {}
            other => panic!("expected malformed wav, got {other:?}"),
        }
        // 24-bit PCM is unsupported, not malformed
        let p24 = dir.path().join("u.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 24,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p24, spec).unwrap();
        for _ in 0..8 {
            w.write_sample(1000i32).unwrap();
        }
        w.finalize().unwrap();
        match read_wav(&p24) {
            Err(Error::UnsupportedWav { .. }) => {}
            other => panic!("expected unsupported wav, got {other:?}"),
        }
    }

    #[test]
    fn normalization_consistent_gaussian_unit_std() {
        let settings =
            NormalizationSettings { gain_db: 0.0, ..NormalizationSettings::default() };
        let x = normal_frame(&mut rng_from_seed(10), 1_000_000);
        let y = normalize_median_rms(&x, &settings).unwrap();
        let std = (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt();
        assert!((std - 1.0).abs() < 0.02, "std {std}");
    }

    #[test]
    fn normalization_constant_frame_scale() {
        let settings =
            NormalizationSettings { gain_db: 0.0, ..NormalizationSettings::default() };
        let a = 0.37;
        let x = vec![a; 501];
        let y = normalize_median_rms(&x, &settings).unwrap();
        // median(x²) = a² so every output sample is a/(b_χ·a) = 1/b_χ
        for v in y {
            assert!((v - 1.0 / 1.4826).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_literal_mode_scale() {
        let settings = NormalizationSettings {
            gain_db: 0.0,
            b_chi: 1.4826,
            mode: NormalizationMode::Literal,
        };
        let x = normal_frame(&mut rng_from_seed(11), 1_000_000);
        let med = median_of_squares(&x);
        let y = normalize_median_rms(&x, &settings).unwrap();
        let expected_scale = 1.0 / (1.4826f64 * 1.4826 + med).sqrt();
        for (a, b) in x.iter().zip(&y) {
            assert!((a * expected_scale - b).abs() < 1e-15);
        }
        // median of χ²₁ ≈ 0.4549 so the scale is about 1/1.629
        assert!((expected_scale - 1.0 / 1.629).abs() < 2e-3, "scale {expected_scale}");
    }

    #[test]
    fn normalization_idempotent_and_equivariant() {
        let settings = NormalizationSettings::default();
        let x = normal_frame(&mut rng_from_seed(12), 4097);
        let once = normalize_median_rms(&x, &settings).unwrap();
        let twice = normalize_median_rms(&once, &settings).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{a} vs {b}");
        }
        let scaled: Vec<f64> = x.iter().map(|v| v * 123.456).collect();
        let from_scaled = normalize_median_rms(&scaled, &settings).unwrap();
        for (a, b) in once.iter().zip(&from_scaled) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn normalization_rejects_silence_in_consistent_mode() {
        let settings = NormalizationSettings::default();
        assert!(normalize_median_rms(&vec![0.0; 100], &settings).is_err());
        let literal = NormalizationSettings {
            mode: NormalizationMode::Literal,
            ..NormalizationSettings::default()
        };
        assert!(normalize_median_rms(&vec![0.0; 100], &literal).is_ok());
    }

    #[test]
    fn random_chunk_basics() {
        let asset = AudioAsset {
            samples: (0..100).map(|i| i as f64).collect(),
            fs: 8000,
            source: "a".into(),
        };
        let whole = random_chunk(&asset, 100, &mut rng_from_seed(0)).unwrap();
        assert_eq!(whole, asset.samples);
        let c1 = random_chunk(&asset, 10, &mut rng_from_seed(5)).unwrap();
        let c2 = random_chunk(&asset, 10, &mut rng_from_seed(5)).unwrap();
        assert_eq!(c1, c2);
        assert!(random_chunk(&asset, 101, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn chunk_offsets_are_uniform() {
        // χ² test on start offsets, 20 cells, α = 0.01
        let asset = AudioAsset { samples: vec![0.0; 219], fs: 8000, source: "u".into() };
        let mut rng = rng_from_seed(77);
        let cells = 20usize;
        let draws = 100_000usize;
        let mut counts = vec![0f64; cells];
        let span = asset.samples.len() - 20; // offsets 0..=199
        for _ in 0..draws {
            let start = rng.random_range(0..=span);
            counts[start * cells / (span + 1)] += 1.0;
        }
        let expected = draws as f64 / cells as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected) * (c - expected) / expected).sum();
        // χ²(19) upper 1% point
        assert!(chi2 < 36.19, "chi2 {chi2}");
    }

    #[test]
    fn batch_iterator_streams_normalized_frames() {
        let mut rng = rng_from_seed(20);
        let asset =
            AudioAsset { samples: normal_frame(&mut rng, 5000), fs: 8000, source: "n".into() };
        let corpus = vec![asset];
        let settings = NormalizationSettings::default();
        let g_lin = 10f64.powf(settings.gain_db / 20.0);
        let mut it = BatchIterator::new(&corpus, 512, 3, settings, rng_from_seed(21)).unwrap();
        let batch = it.next_batch();
        assert_eq!(batch.len(), 3);
        for frame in &batch {
            assert_eq!(frame.len(), 512);
            assert!((median_rms(frame, settings.b_chi) - g_lin).abs() < 1e-9);
        }
        // equal seeds → identical streams
        let mut it1 = BatchIterator::new(&corpus, 64, 2, settings, rng_from_seed(9)).unwrap();
        let mut it2 = BatchIterator::new(&corpus, 64, 2, settings, rng_from_seed(9)).unwrap();
        for _ in 0..5 {
            assert_eq!(it1.next_batch(), it2.next_batch());
        }
    }

    #[test]
    fn corpus_loader_manifest_and_fs_check() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.wav");
        let b = dir.path().join("b.wav");
        write_wav(&a, &vec![0.1; 600], 8000).unwrap();
        write_wav(&b, &vec![0.2; 600], 8000).unwrap();
        let manifest = dir.path().join("corpus.txt");
        std::fs::write(&manifest, "# corpus\na.wav\nb.wav\n").unwrap();
        let corpus = load_corpus(&manifest, Some(8000)).unwrap();
        assert_eq!(corpus.len(), 2);
        assert!(load_corpus(&manifest, Some(44100)).is_err());
        let from_dir = load_corpus(dir.path(), Some(8000)).unwrap();
        assert_eq!(from_dir.len(), 2);
    }
}
