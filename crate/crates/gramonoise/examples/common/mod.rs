//! Shared helper for the examples: a small model trained on a synthetic
//! hiss+clicks corpus, cached as `examples_output/desk.ckpt` so the first
//! example to run pays the training cost and the rest reuse it.

use gramonoise::checkpoint::{self, Checkpoint};
use gramonoise::dataset::{frame_length, AudioAsset, BatchIterator, NormalizationSettings};
use gramonoise::denoiser::{init_params, NetworkConfig, UNetDenoiser};
use gramonoise::guides::{
    compose_guide, AmplitudeDistribution, ClickShape, ClickSpec, EqBand, GuideSpec, HissSpec,
};
use gramonoise::rng::{rng_for, save_rng};
use gramonoise::trainer::{train, Trainer, TrainingConfig};
use std::path::Path;

pub const FS: u32 = 8000;

pub fn output_dir() -> std::path::PathBuf {
    let dir = std::path::PathBuf::from("examples_output");
    std::fs::create_dir_all(&dir).expect("create output directory");
    dir
}

fn corpus() -> Vec<AudioAsset> {
    let spec = GuideSpec {
        hiss: Some(HissSpec {
            eq_bands: vec![EqBand { center_hz: 1500.0, gain_db: 5.0, q: 0.9 }],
            low_shelf: None,
            high_shelf: None,
            level_db: -21.0,
            time_variation: None,
        }),
        thumps: vec![],
        clicks: Some(ClickSpec {
            rate_hz: 1000.0,
            duration_range_s: (0.000125, 0.0015),
            amplitude: AmplitudeDistribution::LogNormal { ln_scale: -3.5, shape: 0.9 },
            shape: ClickShape::BipolarDecay,
        }),
        hum: None,
        rumble: None,
        fs: FS,
        length_s: 4.0,
    };
    (0..6)
        .map(|seed| AudioAsset {
            samples: compose_guide(&spec, seed).expect("valid spec"),
            fs: FS,
            source: format!("synthetic-{seed}"),
        })
        .collect()
}

/// Load the cached example model, or train it (a couple of minutes on a
/// desktop CPU) and cache it.
pub fn example_model(iterations: u64) -> UNetDenoiser {
    let path = output_dir().join("desk.ckpt");
    if let Ok(ckpt) = checkpoint::load(&path) {
        if ckpt.iteration >= iterations {
            println!("reusing cached model {} (iteration {})", path.display(), ckpt.iteration);
            let (net, _) = init_params(&ckpt.config, 0).expect("cached config is valid");
            return UNetDenoiser { net, params: ckpt.params, use_ema: true };
        }
    }
    println!("training the example model for {iterations} iterations...");
    train_example_model(&path, iterations)
}

fn train_example_model(path: &Path, iterations: u64) -> UNetDenoiser {
    let frame_len = frame_length(FS, 78.0);
    let config = NetworkConfig::desk(FS, frame_len);
    let (net, params) = init_params(&config, 1).unwrap();
    let training = TrainingConfig {
        learning_rate: 1e-3,
        ema_rate: 0.995,
        batch_size: 4,
        total_iterations: iterations,
        seed: 1,
        checkpoint_interval: 0,
        ..TrainingConfig::default()
    };
    let corpus = corpus();
    let mut trainer = Trainer::new(net, params, training, rng_for(1, "train")).unwrap();
    let mut data = BatchIterator::new(
        &corpus,
        frame_len,
        4,
        NormalizationSettings::default(),
        rng_for(1, "data"),
    )
    .unwrap();
    train(&mut trainer, &mut data, iterations, |tr, _, report| {
        if report.iteration % 100 == 0 {
            println!("  iteration {} loss {:.4}", report.iteration, report.loss);
        }
        let _ = tr;
        Ok(())
    })
    .unwrap();
    let ckpt = Checkpoint {
        config: trainer.net.config.clone(),
        params: trainer.params.clone(),
        adam: trainer.opt.clone(),
        iteration: trainer.iteration,
        train_rng: save_rng(&trainer.train_rng),
        data_rng: save_rng(data.rng_mut()),
    };
    checkpoint::save(path, &ckpt).unwrap();
    println!("cached model at {}", path.display());
    UNetDenoiser { net: trainer.net.clone(), params: trainer.params.clone(), use_ema: true }
}
