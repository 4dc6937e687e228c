//! Shared fixtures for the integration suites: the desk-scale corpus and a
//! model trained on it once per test binary.
//!
//! Each integration target uses its own subset of these helpers.
#![allow(dead_code)]

use gramonoise::dataset::{frame_length, AudioAsset, BatchIterator, NormalizationSettings};
use gramonoise::denoiser::{init_params, NetworkConfig, UNetDenoiser};
use gramonoise::guides::{
    compose_guide, AmplitudeDistribution, ClickShape, ClickSpec, EqBand, GainModulation,
    GuideSpec, HissSpec, Shelf,
};
use gramonoise::rng::rng_for;
use gramonoise::trainer::{train, Trainer, TrainingConfig};
use std::sync::OnceLock;

pub const DESK_FS: u32 = 8000;
pub const DESK_SEED: u64 = 1;

pub struct DeskArtifacts {
    pub denoiser: UNetDenoiser,
    pub losses: Vec<f64>,
    pub fs: u32,
    pub frame_len: usize,
}

fn hiss_clicks_spec(variant: usize) -> GuideSpec {
    let hiss = if variant == 0 {
        HissSpec {
            eq_bands: vec![EqBand { center_hz: 1200.0, gain_db: 5.0, q: 0.8 }],
            low_shelf: Some(Shelf { corner_hz: 150.0, gain_db: -6.0 }),
            high_shelf: None,
            level_db: -22.0,
            time_variation: None,
        }
    } else {
        HissSpec {
            eq_bands: vec![EqBand { center_hz: 2500.0, gain_db: 6.0, q: 1.2 }],
            low_shelf: None,
            high_shelf: Some(Shelf { corner_hz: 3000.0, gain_db: -8.0 }),
            level_db: -20.0,
            time_variation: Some(GainModulation { rate_hz: 1.3, depth_db: 2.0 }),
        }
    };
    let clicks = if variant == 0 {
        ClickSpec {
            rate_hz: 800.0,
            duration_range_s: (0.000125, 0.002),
            amplitude: AmplitudeDistribution::LogNormal { ln_scale: -3.3, shape: 0.8 },
            shape: ClickShape::BipolarDecay,
        }
    } else {
        ClickSpec {
            rate_hz: 1500.0,
            duration_range_s: (0.000125, 0.001),
            amplitude: AmplitudeDistribution::LogNormal { ln_scale: -3.7, shape: 1.0 },
            shape: ClickShape::BipolarDecay,
        }
    };
    GuideSpec {
        hiss: Some(hiss),
        thumps: vec![],
        clicks: Some(clicks),
        hum: None,
        rumble: None,
        fs: DESK_FS,
        length_s: 4.0,
    }
}

/// Eight 4-second hiss+clicks assets from the two spec variants.
pub fn desk_corpus() -> Vec<AudioAsset> {
    let mut corpus = Vec::new();
    for variant in 0..2usize {
        let spec = hiss_clicks_spec(variant);
        for i in 0..4u64 {
            let seed = if variant == 0 { i } else { i + 10 };
            let samples = compose_guide(&spec, seed).expect("valid corpus spec");
            corpus.push(AudioAsset {
                samples,
                fs: DESK_FS,
                source: format!("synthetic-{variant}-{seed}"),
            });
        }
    }
    corpus
}

pub fn desk_training_config() -> TrainingConfig {
    TrainingConfig {
        learning_rate: 1e-3,
        ema_rate: 0.995,
        batch_size: 4,
        total_iterations: 2000,
        seed: DESK_SEED,
        checkpoint_interval: 0,
        ..TrainingConfig::default()
    }
}

fn build_desk() -> DeskArtifacts {
    let fs = DESK_FS;
    let frame_len = frame_length(fs, 78.0);
    let corpus = desk_corpus();
    let config = NetworkConfig::desk(fs, frame_len);
    let (net, params) = init_params(&config, DESK_SEED).expect("valid desk config");
    let training = desk_training_config();
    let mut trainer =
        Trainer::new(net, params, training.clone(), rng_for(DESK_SEED, "train")).unwrap();
    let mut data = BatchIterator::new(
        &corpus,
        frame_len,
        training.batch_size,
        NormalizationSettings::default(),
        rng_for(DESK_SEED, "data"),
    )
    .unwrap();
    let mut losses = Vec::with_capacity(training.total_iterations as usize);
    train(&mut trainer, &mut data, training.total_iterations, |_, _, report| {
        losses.push(report.loss);
        Ok(())
    })
    .expect("desk training completes");
    DeskArtifacts {
        denoiser: UNetDenoiser {
            net: trainer.net.clone(),
            params: trainer.params.clone(),
            use_ema: true,
        },
        losses,
        fs,
        frame_len,
    }
}

/// Train the desk model once; later callers block until it is ready.
pub fn desk_artifacts() -> &'static DeskArtifacts {
    static CELL: OnceLock<DeskArtifacts> = OnceLock::new();
    CELL.get_or_init(build_desk)
}

/// The robust level estimate used across the acceptance checks.
pub fn median_rms(x: &[f64]) -> f64 {
    let mut sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sq.len();
    let med = if n % 2 == 1 { sq[n / 2] } else { (sq[n / 2 - 1] + sq[n / 2]) / 2.0 };
    1.4826 * med.sqrt()
}
