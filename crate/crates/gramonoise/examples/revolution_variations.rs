//! Bifurcate one reverse-diffusion trajectory at τ_p = 0.33 into several
//! correlated disk revolutions and splice them into an endless-style track.
//!
//! ```bash
//! cargo run --release --example revolution_variations
//! ```

mod common;

use gramonoise::dataset::write_wav;
use gramonoise::rng::rng_for;
use gramonoise::sampler::{assemble_track, sample_revolutions, SamplerRun};

fn main() -> gramonoise::Result<()> {
    let model = common::example_model(2000);
    let out_dir = common::output_dir();
    let run = SamplerRun {
        steps: 150,
        tau0: 1.0,
        tau_p: Some(0.33),
        revolutions: 4,
        seed: 3,
    };
    let frames = sample_revolutions(&model, None, &run)?;
    for (n, frame) in frames.iter().enumerate() {
        let path = out_dir.join(format!("revolution_{n}.wav"));
        write_wav(&path, frame, common::FS)?;
        println!("wrote {}", path.display());
    }
    // about ten revolutions of track, plain splicing
    let track = assemble_track(&frames, common::FS, 7.7, 0.0, &mut rng_for(3, "assemble"))?;
    let path = out_dir.join("endless_track.wav");
    write_wav(&path, &track, common::FS)?;
    println!("wrote {} ({:.2} s)", path.display(), track.len() as f64 / common::FS as f64);
    Ok(())
}
