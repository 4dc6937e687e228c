//! Refine a classically synthesized guide at several truncation steps τ₀,
//! showing the realism-versus-faithfulness trade-off: small τ₀ stays close
//! to the guide, large τ₀ behaves like unconditional sampling.
//!
//! ```bash
//! cargo run --release --example guided_refinement
//! ```

mod common;

use gramonoise::dataset::write_wav;
use gramonoise::guides::{compose_guide, GuideSpec};
use gramonoise::sampler::{sample_guided, SamplerRun};

fn main() -> gramonoise::Result<()> {
    let model = common::example_model(2000);
    let out_dir = common::output_dir();
    let frame_len = model.net.config.sample_count;

    let mut spec = GuideSpec::default_preset(common::FS);
    spec.length_s = frame_len as f64 / common::FS as f64;
    let guide = compose_guide(&spec, 42)?;
    write_wav(out_dir.join("guide.wav"), &guide, common::FS)?;
    println!("wrote {}", out_dir.join("guide.wav").display());

    for tau0 in [0.33, 0.5, 0.66] {
        let run = SamplerRun { steps: 150, tau0, tau_p: None, revolutions: 1, seed: 7 };
        let refined = sample_guided(&model, &guide, &run)?;
        let path = out_dir.join(format!("guided_tau0_{tau0}.wav"));
        write_wav(&path, &refined, common::FS)?;
        let rmse = (refined
            .iter()
            .zip(&guide)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / refined.len() as f64)
            .sqrt();
        println!("wrote {} (rms distance from guide {rmse:.4})", path.display());
    }
    Ok(())
}
