//! Render every classical noise component and a composite guide to WAV.
//!
//! ```bash
//! cargo run --example guide_synthesis
//! ```
//!
//! Outputs land in `examples_output/`.

use gramonoise::dataset::write_wav;
use gramonoise::guides::{
    compose_guide, synth_clicks, synth_hiss, synth_hum, synth_rumble, synth_thump,
    AmplitudeDistribution, ClickShape, ClickSpec, EqBand, GuideSpec, HissSpec, HumSpec,
    RumbleSpec, Shelf, ThumpParams,
};
use gramonoise::rng::rng_for;

fn main() -> gramonoise::Result<()> {
    let fs = 22050u32;
    let out_dir = std::path::Path::new("examples_output");
    std::fs::create_dir_all(out_dir).expect("create output directory");
    let seconds = 3.0;
    let len = (fs as f64 * seconds) as usize;

    let hiss = HissSpec {
        eq_bands: vec![
            EqBand { center_hz: 800.0, gain_db: 4.0, q: 0.8 },
            EqBand { center_hz: 3000.0, gain_db: 6.0, q: 1.0 },
        ],
        low_shelf: Some(Shelf { corner_hz: 120.0, gain_db: -8.0 }),
        high_shelf: Some(Shelf { corner_hz: 7000.0, gain_db: -10.0 }),
        level_db: -24.0,
        time_variation: None,
    };
    let frame = synth_hiss(&hiss, fs as f64, len, &mut rng_for(1, "hiss"))?;
    write_wav(out_dir.join("hiss.wav"), &frame, fs)?;

    let clicks = ClickSpec {
        rate_hz: 2000.0,
        duration_range_s: (20e-6, 4e-3),
        amplitude: AmplitudeDistribution::LogNormal { ln_scale: -4.0, shape: 1.0 },
        shape: ClickShape::BipolarDecay,
    };
    let frame = synth_clicks(&clicks, fs as f64, len, &mut rng_for(2, "clicks"))?;
    write_wav(out_dir.join("crackle.wav"), &frame, fs)?;

    let thump = ThumpParams {
        tail_amplitude: 0.5,
        envelope_decay_s: 0.08,
        f_max_hz: 180.0,
        f_min_hz: 55.0,
        freq_decay_s: 0.03,
        onset_s: 0.5,
        attack_duration_s: 0.002,
        attack_variance: 0.004,
    };
    let frame = synth_thump(&thump, fs as f64, len, &mut rng_for(3, "thump"))?;
    write_wav(out_dir.join("thump.wav"), &frame, fs)?;

    let hum = HumSpec {
        fundamental_hz: 50.0,
        harmonic_amplitudes: vec![0.05, 0.02, 0.012, 0.006],
        phase_seed: 4,
    };
    let frame = synth_hum(&hum, fs as f64, len)?;
    write_wav(out_dir.join("hum.wav"), &frame, fs)?;

    let rumble = RumbleSpec { cutoff_hz: 90.0, level_db: -18.0 };
    let frame = synth_rumble(&rumble, fs as f64, len, &mut rng_for(5, "rumble"))?;
    write_wav(out_dir.join("rumble.wav"), &frame, fs)?;

    // one revolution of the filtered-noise-plus-thumps preset
    let preset = GuideSpec::default_preset(fs);
    let frame = compose_guide(&preset, 6)?;
    write_wav(out_dir.join("guide_preset.wav"), &frame, fs)?;

    // a denser composite with every component enabled
    let full = GuideSpec {
        hiss: Some(hiss),
        thumps: vec![thump],
        clicks: Some(clicks),
        hum: Some(hum),
        rumble: Some(rumble),
        fs,
        length_s: seconds,
    };
    let frame = compose_guide(&full, 7)?;
    write_wav(out_dir.join("guide_full.wav"), &frame, fs)?;

    println!("wrote 7 files under {}", out_dir.display());
    Ok(())
}
