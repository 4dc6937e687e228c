//! Measure how refined samples drift from their guide as τ₀ grows:
//! temporal-envelope and Bark-envelope deviation profiles over an ensemble
//! of guided samples, plus a log-spectrogram export.
//!
//! ```bash
//! cargo run --release --example deviation_analysis
//! ```

mod common;

use gramonoise::analysis::{
    bark_envelope, log_spectrogram, pairwise_deviation_std, temporal_envelope, write_series,
    DeviationMode,
};
use gramonoise::guides::{compose_guide, GuideSpec};
use gramonoise::sampler::{sample_guided, SamplerRun};

fn main() -> gramonoise::Result<()> {
    let model = common::example_model(2000);
    let out_dir = common::output_dir();
    let fs = common::FS as f64;
    let frame_len = model.net.config.sample_count;

    let mut spec = GuideSpec::default_preset(common::FS);
    spec.length_s = frame_len as f64 / fs;
    let guide = compose_guide(&spec, 42)?;
    let guide_env = temporal_envelope(&guide, fs, 0.025, None)?;
    let guide_bark = bark_envelope(&guide, fs)?;

    let ensemble = 20usize;
    for tau0 in [0.33, 0.5, 0.66] {
        let mut time_items = vec![guide_env.values.clone()];
        let mut bark_items = vec![guide_bark.band_db.clone()];
        for seed in 1..=ensemble as u64 {
            let run = SamplerRun { steps: 50, tau0, tau_p: None, revolutions: 1, seed };
            let refined = sample_guided(&model, &guide, &run)?;
            time_items.push(temporal_envelope(&refined, fs, 0.025, None)?.values);
            bark_items.push(bark_envelope(&refined, fs)?.band_db);
        }
        let time_profile = pairwise_deviation_std(&time_items, DeviationMode::FromReference)?;
        let bark_profile = pairwise_deviation_std(&bark_items, DeviationMode::FromReference)?;
        let time_path = out_dir.join(format!("deviation_time_tau0_{tau0}.tsv"));
        let bark_path = out_dir.join(format!("deviation_bark_tau0_{tau0}.tsv"));
        write_series(&time_path, guide_env.hop_s, &time_profile)?;
        write_series(&bark_path, 1.0, &bark_profile)?;
        let mean = time_profile.iter().sum::<f64>() / time_profile.len() as f64;
        println!(
            "tau0 {tau0}: mean temporal deviation {mean:.5} -> {}, {}",
            time_path.display(),
            bark_path.display()
        );
    }

    // spectrogram of one refined sample
    let run = SamplerRun { steps: 50, tau0: 0.5, tau_p: None, revolutions: 1, seed: 1 };
    let refined = sample_guided(&model, &guide, &run)?;
    let sg = log_spectrogram(&refined, fs, 512, 128)?;
    let png = out_dir.join("refined_spectrogram.png");
    sg.write_png(&png)?;
    println!("wrote {}", png.display());
    Ok(())
}
